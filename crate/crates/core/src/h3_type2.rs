//! Type-II magnetic trajectories on the three-dimensional Heisenberg group.
//!
//! For `F = F_{e2}` the first coordinate solves
//! `x'' + (x + z0)(x^2/2 + z0 x + y0 + 1) = 0`, whose orbits are Jacobi
//! `cn`/`dn` curves or a `sech` separatrix in `v = x + z0`. The other two
//! coordinates are quadratures of `x`.

use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Mat};
use crate::lorentz::{self, LorentzForce};
use crate::nilalgebra::MetricNilAlgebra;
use crate::oracle::Trajectory;
use crate::quadrature;
use crate::scalar::Real;
use crate::specfun;

/// Absolute tolerance of the `y`, `z` quadratures.
pub const QUAD_TOL: f64 = 1e-10;
/// Relative width of the separatrix test `z0^2 = 2(|V1| + y1)`.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Sample count of the lambda-identity certificate.
pub const LAMBDA_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Cn,
    Dn,
    SechPos,
    SechNeg,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Periodic,
    LambdaPeriodic,
    NonPeriodic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicityReport<T> {
    pub verdict: Verdict,
    pub period: Option<T>,
    /// Exponential coordinates of `lambda`.
    pub lambda: Option<Vec<T>>,
    /// `max |lambda sigma(t) - sigma(t + omega)|` over the sample times.
    pub identity_residual: Option<T>,
    /// `|F(W1)|` for the `v` part `W1` of `lambda`.
    pub kernel_residual: Option<T>,
    pub samples: usize,
}

impl<T: Real> PeriodicityReport<T> {
    fn non_periodic() -> Self {
        Self {
            verdict: Verdict::NonPeriodic,
            period: None,
            lambda: None,
            identity_residual: None,
            kernel_residual: None,
            samples: 0,
        }
    }
}

/// Solution through the identity for `F_{e2}`, charge 1, initial velocity
/// `(x0, y0, z0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Type2TrajectoryH3<T> {
    pub x0: T,
    pub y0: T,
    pub z0: T,
    pub branch: Branch,
    /// Elliptic modulus on the `cn`/`dn` branches.
    pub k: Option<T>,
    /// Phase constant with `x(0) = 0`.
    pub phase: T,
    pub v1_norm: T,
    pub y1: T,
    pub x0_sign: T,
    pub period: Option<T>,
    pub image_interval: (T, T),
    /// `z0^2 - 2(|V1| + y1)`.
    pub boundary_margin: T,
    amp: T,
    rate: T,
    dir: T,
    y_period: T,
    z_period: T,
}

fn sign<T: Real>(x: T) -> T {
    if x < T::zero() {
        -T::one()
    } else {
        T::one()
    }
}

pub fn solve_h3_type2<T: Real>(x0: T, y0: T, z0: T) -> Type2TrajectoryH3<T> {
    let zero = T::zero();
    let two = T::c(2.0);
    let y1 = y0 + T::one();
    let v1 = x0.hypot(y1);
    let x0_sign = sign(x0);
    let sep2 = two * (v1 + y1);
    let margin = z0 * z0 - sep2;
    let mut traj = Type2TrajectoryH3 {
        x0,
        y0,
        z0,
        branch: Branch::Linear,
        k: None,
        phase: zero,
        v1_norm: v1,
        y1,
        x0_sign,
        period: None,
        image_interval: (zero, zero),
        boundary_margin: margin,
        amp: zero,
        rate: zero,
        dir: zero,
        y_period: zero,
        z_period: zero,
    };
    if x0 == zero && z0 * y1 == zero {
        return traj;
    }
    // v^2 oscillates between -q_root and a2
    let a2 = two * v1 - two * y1 + z0 * z0;
    let q_root = two * v1 + two * y1 - z0 * z0;
    let ra = a2.sqrt();
    let on_boundary = margin.abs() <= T::c(BOUNDARY_TOL) * (z0 * z0).max(T::one()) && z0 != zero;
    let sz = sign(z0);
    if on_boundary {
        let r = v1.sqrt();
        let amp = two * r;
        let arg = ((T::c(4.0) * v1 - z0 * z0) / (T::c(4.0) * v1)).max(zero).sqrt();
        traj.branch = if z0 > zero { Branch::SechPos } else { Branch::SechNeg };
        traj.phase = arg.min(T::one() - T::epsilon()).atanh();
        traj.amp = sz * amp;
        traj.rate = r;
        traj.dir = x0_sign * sz;
        traj.image_interval = if z0 > zero { (-z0, -z0 + amp) } else { (-z0 - amp, -z0) };
    } else if margin < zero {
        let k = (a2 / (T::c(4.0) * v1)).sqrt();
        let rate = v1.sqrt();
        traj.branch = Branch::Cn;
        traj.k = Some(k);
        traj.phase = specfun::inverse_cn((z0 / ra).max(-T::one()).min(T::one()), k).expect("cn modulus lies in [0, 1)");
        traj.amp = ra;
        traj.rate = rate;
        traj.dir = x0_sign;
        traj.period = Some(T::c(4.0) * specfun::complete_k(k).expect("cn modulus lies in [0, 1)") / rate);
        traj.image_interval = (-z0 - ra, -z0 + ra);
    } else {
        let k = (T::c(4.0) * v1 / a2).sqrt().min(T::one());
        let rate = ra / two;
        let kp = (-q_root).max(zero).sqrt();
        traj.branch = Branch::Dn;
        traj.k = Some(k);
        traj.phase = specfun::inverse_dn(z0.abs() / ra, k).expect("dn modulus lies in [0, 1)");
        traj.amp = sz * ra;
        traj.rate = rate;
        traj.dir = x0_sign * sz;
        traj.period = Some(T::c(4.0) * specfun::complete_k(k).expect("dn modulus lies in [0, 1)") / ra);
        traj.image_interval = if z0 > zero { (-z0 + kp, -z0 + ra) } else { (-z0 - ra, -z0 - kp) };
    }
    if let Some(w) = traj.period {
        let (y, z) = traj.integrals(w);
        traj.y_period = y;
        traj.z_period = z;
    }
    traj
}

impl<T: Real> Type2TrajectoryH3<T> {
    fn arg(&self, t: T) -> T {
        self.phase - self.dir * self.rate * t
    }

    fn jacobi(&self, u: T) -> (T, T, T) {
        let k = self.k.unwrap_or_else(T::zero);
        specfun::jacobi(u, k).expect("modulus validated at construction")
    }

    /// `x(t)`.
    pub fn phi(&self, t: T) -> T {
        let u = self.arg(t);
        match self.branch {
            Branch::Linear => T::zero(),
            Branch::Cn => self.amp * self.jacobi(u).1 - self.z0,
            Branch::Dn => self.amp * self.jacobi(u).2 - self.z0,
            Branch::SechPos | Branch::SechNeg => self.amp * specfun::sech(u) - self.z0,
        }
    }

    /// `x'(t)` from the derivative of the branch formula.
    pub fn phi_dot(&self, t: T) -> T {
        let u = self.arg(t);
        let c = self.dir * self.rate * self.amp;
        match self.branch {
            Branch::Linear => T::zero(),
            Branch::Cn => {
                let (sn, _, dn) = self.jacobi(u);
                c * sn * dn
            }
            Branch::Dn => {
                let (sn, cn, _) = self.jacobi(u);
                let k = self.k.unwrap_or_else(T::zero);
                c * k * k * sn * cn
            }
            Branch::SechPos | Branch::SechNeg => c * specfun::sech(u) * u.tanh(),
        }
    }

    /// `h(x) = x^2/2 + z0 x + y0 + 1`.
    pub fn h(&self, x: T) -> T {
        T::c(0.5) * x * x + self.z0 * x + self.y1
    }

    fn y_dot_at(&self, x: T) -> T {
        T::c(0.5) * x * x + self.z0 * x + self.y0
    }

    /// `y(t)` and `z(t)` by quadrature over `[0, t]`, with
    /// `z = z0 t + int (x + x y') - x y / 2`.
    fn integrals(&self, t: T) -> (T, T) {
        if self.branch == Branch::Linear {
            return (self.y0 * t, self.z0 * t);
        }
        let tol = T::tol(QUAD_TOL);
        let quad = |f: &dyn Fn(T) -> T| {
            quadrature::integrate(f, T::zero(), t, tol).map(|q| q.value).unwrap_or_else(|_| T::nan())
        };
        let y = quad(&|s| self.y_dot_at(self.phi(s)));
        let w = quad(&|s| {
            let x = self.phi(s);
            x + x * self.y_dot_at(x)
        });
        (y, self.z0 * t + w - T::c(0.5) * self.phi(t) * y)
    }

    /// `(x, y, z)` at `t` by quadrature from 0, without period reduction.
    pub fn eval_direct(&self, t: T) -> Vec<T> {
        let (y, z) = self.integrals(t);
        vec![self.phi(t), y, z]
    }

    /// `(x, y, z)` at `t`; on periodic branches the quadrature only covers
    /// `t mod omega`.
    pub fn position(&self, t: T) -> Vec<T> {
        let Some(w) = self.period else {
            return self.eval_direct(t);
        };
        let n = (t / w).floor();
        let tau = t - n * w;
        let (y, z) = self.integrals(tau);
        let x = self.phi(tau);
        vec![self.phi(t), n * self.y_period + y, n * self.z_period + z - T::c(0.5) * n * self.y_period * x]
    }

    pub fn y_of_t(&self, t: T) -> T {
        self.position(t)[1]
    }

    pub fn z_of_t(&self, t: T) -> T {
        self.position(t)[2]
    }

    /// Left-trivialized velocity `(x', y', z0 + x)`.
    pub fn velocity(&self, t: T) -> Vec<T> {
        let x = self.phi(t);
        vec![self.phi_dot(t), self.y_dot_at(x), self.z0 + x]
    }

    /// `x'^2 + h(x)^2`, constant along the curve.
    pub fn energy_like(&self, t: T) -> T {
        let xd = self.phi_dot(t);
        let hx = self.h(self.phi(t));
        xd * xd + hx * hx
    }

    /// `y(omega)`, `z(omega)` on periodic branches.
    pub fn period_increment(&self) -> Option<(T, T)> {
        self.period.map(|_| (self.y_period, self.z_period))
    }
}

impl<T: Real> Trajectory<T> for Type2TrajectoryH3<T> {
    fn eval_at(&self, t: T) -> (Vec<T>, Vec<T>) {
        (self.position(t), self.velocity(t))
    }
}

fn h3_mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    vec![a[0] + b[0], a[1] + b[1], a[2] + b[2] + T::c(0.5) * (a[0] * b[1] - a[1] * b[0])]
}

/// `F(W1) = 0`, the necessary condition on the `v` part of any `lambda` of a
/// lambda-periodic type-II trajectory.
pub fn kernel_check<T: Real>(f: &LorentzForce<T>, w1: &[T]) -> bool {
    kernel_residual(f, w1) <= T::tol(1e-12) * (f.matrix().max_abs() * linalg::norm(w1)).max(T::one())
}

pub fn kernel_residual<T: Real>(f: &LorentzForce<T>, w1: &[T]) -> T {
    linalg::norm(&f.apply(w1))
}

/// Decides periodicity for the normalized problem.
pub fn lambda_periodicity<T: Real>(traj: &Type2TrajectoryH3<T>) -> PeriodicityReport<T> {
    let alg = MetricNilAlgebra::heisenberg(1).expect("H3 preset");
    let f = lorentz::type2_from_vector(&alg, &[T::zero(), T::one(), T::zero()]).expect("F_e2 is closed");
    match traj.branch {
        Branch::SechPos | Branch::SechNeg => PeriodicityReport::non_periodic(),
        Branch::Linear => {
            let lambda = vec![T::zero(), traj.y0, traj.z0];
            let residual = (0..LAMBDA_SAMPLES)
                .map(|i| {
                    let t = T::from_usize_lossy(i) * T::c(0.3);
                    linalg::dist(&h3_mul(&lambda, &traj.eval_direct(t)), &traj.eval_direct(t + T::one()))
                })
                .fold(T::zero(), T::max);
            report(Some(T::one()), lambda, residual, &f)
        }
        Branch::Cn | Branch::Dn => {
            let w = traj.period.expect("periodic branch");
            let lambda = traj.eval_direct(w);
            let lambda = vec![T::zero(), lambda[1], lambda[2]];
            let residual = (0..LAMBDA_SAMPLES)
                .map(|i| {
                    let t = (T::from_usize_lossy(i) + T::c(0.5)) * w * T::c(0.19);
                    linalg::dist(&h3_mul(&lambda, &traj.eval_direct(t)), &traj.eval_direct(t + w))
                })
                .fold(T::zero(), T::max);
            report(Some(w), lambda, residual, &f)
        }
    }
}

fn report<T: Real>(period: Option<T>, lambda: Vec<T>, residual: T, f: &LorentzForce<T>) -> PeriodicityReport<T> {
    let verdict = if linalg::norm(&lambda) <= T::tol(1e-10) { Verdict::Periodic } else { Verdict::LambdaPeriodic };
    let w1 = vec![lambda[0], lambda[1], T::zero()];
    PeriodicityReport {
        verdict,
        period,
        kernel_residual: Some(kernel_residual(f, &w1)),
        lambda: Some(lambda),
        identity_residual: Some(residual),
        samples: LAMBDA_SAMPLES,
    }
}

/// Orthogonal automorphism `phi` and scale `q > 0` with `q phi(U') = e2`,
/// where `U' = q_in U`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization<T> {
    pub q: T,
    pub phi: Mat<T>,
}

pub fn normalize_force<T: Real>(u: &[T], q_in: T) -> Result<Normalization<T>> {
    check_len(3, u.len())?;
    if u[2] != T::zero() {
        return Err(Error::Argument("U must lie in v".into()));
    }
    let a = q_in * u[0];
    let b = q_in * u[1];
    let rho = a.hypot(b);
    if rho.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) || !rho.is_finite() {
        return Err(Error::DegenerateForce("U = 0 gives the geodesic flow".into()));
    }
    let (a, b) = (a / rho, b / rho);
    let (zero, one) = (T::zero(), T::one());
    let phi = Mat::from_rows(&[vec![b, -a, zero], vec![a, b, zero], vec![zero, zero, one]]).expect("3x3");
    Ok(Normalization { q: one / rho, phi })
}

/// Type-II trajectory for `q F_U` on H3 through the identity, obtained from
/// the normalized problem by rotation and time rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct Type2Solution<T> {
    pub normalization: Normalization<T>,
    pub reduced: Type2TrajectoryH3<T>,
}

pub fn solve_type2<T: Real>(u: &[T], q: T, w0: &[T]) -> Result<Type2Solution<T>> {
    check_len(3, w0.len())?;
    let normalization = normalize_force(u, q)?;
    let w = linalg::scale(normalization.q, &normalization.phi.mul_vec(w0));
    let reduced = solve_h3_type2(w[0], w[1], w[2]);
    Ok(Type2Solution { normalization, reduced })
}

impl<T: Real> Type2Solution<T> {
    fn rho(&self) -> T {
        T::one() / self.normalization.q
    }

    fn pull_back(&self, x: &[T]) -> Vec<T> {
        self.normalization.phi.transpose().mul_vec(x)
    }

    pub fn position(&self, t: T) -> Vec<T> {
        self.pull_back(&self.reduced.position(self.rho() * t))
    }

    pub fn velocity(&self, t: T) -> Vec<T> {
        linalg::scale(self.rho(), &self.pull_back(&self.reduced.velocity(self.rho() * t)))
    }

    pub fn period(&self) -> Option<T> {
        self.reduced.period.map(|w| w * self.normalization.q)
    }

    pub fn lambda_periodicity(&self, f: &LorentzForce<T>) -> PeriodicityReport<T> {
        let mut rep = lambda_periodicity(&self.reduced);
        rep.period = rep.period.map(|w| w * self.normalization.q);
        if let Some(l) = rep.lambda.as_mut() {
            *l = self.pull_back(l);
            let w1 = vec![l[0], l[1], T::zero()];
            rep.kernel_residual = Some(kernel_residual(f, &w1));
        }
        rep
    }
}

impl<T: Real> Trajectory<T> for Type2Solution<T> {
    fn eval_at(&self, t: T) -> (Vec<T>, Vec<T>) {
        (self.position(t), self.velocity(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{self, IntegratorConfig};

    fn alg() -> MetricNilAlgebra<f64> {
        MetricNilAlgebra::heisenberg(1).unwrap()
    }

    #[test]
    fn branch_table() {
        assert_eq!(solve_h3_type2(0.0, 0.7, 0.0).branch, Branch::Linear);
        assert_eq!(solve_h3_type2(0.0, -1.0, 2.0).branch, Branch::Linear);
        let c = solve_h3_type2(1.0, 0.0, 0.0);
        assert_eq!(c.branch, Branch::Cn);
        let s2 = 2f64.sqrt();
        assert!((c.k.unwrap() - ((2.0 * s2 - 2.0) / (4.0 * s2)).sqrt()).abs() < 1e-15);
        assert_eq!(solve_h3_type2(1.0, 0.0, 3.0).branch, Branch::Dn);
        assert_eq!(solve_h3_type2(1.0, 0.0, -3.0).branch, Branch::Dn);
        let s = (2.0 * (s2 + 1.0)).sqrt();
        assert_eq!(solve_h3_type2(1.0, 0.0, s).branch, Branch::SechPos);
        assert_eq!(solve_h3_type2(1.0, 0.0, -s).branch, Branch::SechNeg);
    }

    #[test]
    fn starts_at_origin_with_given_velocity() {
        for &(x0, y0, z0) in
            &[(1.0f64, 0.0, 0.0), (-0.7, 0.3, 2.9), (0.4, -0.5, -3.1), (-1.0, 0.0, -2.197_368_226_935_62)]
        {
            let t = solve_h3_type2(x0, y0, z0);
            assert!(t.phi(0.0).abs() < 1e-11, "{:?}", t.branch);
            let v = t.velocity(0.0);
            assert!(linalg::dist(&v, &[x0, y0, z0]) < 1e-10, "{:?} {v:?}", t.branch);
        }
    }

    #[test]
    fn time_reflection() {
        for z0 in [0.3f64, 3.0, -3.0] {
            let a = solve_h3_type2(0.8, 0.2, z0);
            let b = solve_h3_type2(-0.8, 0.2, z0);
            for t in [0.4, 1.3, 2.2] {
                assert!((a.phi(-t) - b.phi(t)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn matches_oracle() {
        let a = alg();
        let f = lorentz::type2_from_vector(&a, &[0.0, 1.0, 0.0]).unwrap();
        let times = oracle::uniform_grid(5.0, 11);
        for &(x0, y0, z0) in &[(1.0, 0.0, 0.0), (0.5, 0.2, 3.0), (-0.3, 0.1, -2.5)] {
            let t = solve_h3_type2(x0, y0, z0);
            let orc = oracle::integrate_algebra(
                &a,
                f.matrix(),
                1.0,
                &[x0, y0, z0],
                &times,
                &IntegratorConfig::dormand_prince(1e-12, 5.0),
            )
            .unwrap();
            let cmp = oracle::compare(&t.sample(&times), &orc).unwrap();
            assert!(cmp.max_deviation < 1e-8, "{:?} {cmp:?}", t.branch);
        }
    }

    #[test]
    fn lambda_identity_and_reduction() {
        let t = solve_h3_type2(1.0, 0.0, 0.0);
        let rep = lambda_periodicity(&t);
        assert_eq!(rep.verdict, Verdict::LambdaPeriodic);
        assert!(rep.identity_residual.unwrap() < 1e-10);
        let w = t.period.unwrap();
        let direct = t.eval_direct(2.3 * w);
        assert!(linalg::dist(&direct, &t.position(2.3 * w)) < 1e-9);
        let sech = solve_h3_type2(1.0, 0.0, (2.0 * (2f64.sqrt() + 1.0)).sqrt());
        assert_eq!(lambda_periodicity(&sech).verdict, Verdict::NonPeriodic);
        let lin = lambda_periodicity(&solve_h3_type2(0.0, -1.0, 2.0));
        assert_eq!(lin.lambda.unwrap(), vec![0.0, -1.0, 2.0]);
    }

    #[test]
    fn normalization() {
        let n = normalize_force(&[0.0f64, 2.0, 0.0], 1.0).unwrap();
        assert!((n.q - 0.5).abs() < 1e-15);
        assert!(n.phi.sub(&Mat::identity(3)).max_abs() < 1e-15);
        let a = alg();
        let n = normalize_force(&[1.0, 0.0, 0.0], 1.0).unwrap();
        let fu = lorentz::type2_from_vector(&a, &[1.0, 0.0, 0.0]).unwrap();
        let fe2 = lorentz::type2_from_vector(&a, &[0.0, 1.0, 0.0]).unwrap();
        let g = lorentz::conjugate_force(&a, &fu, &n.phi, n.q).unwrap();
        assert!(g.matrix().sub(fe2.matrix()).max_abs() < 1e-15);
        assert!(matches!(normalize_force(&[0.0, 0.0, 0.0], 1.0), Err(Error::DegenerateForce(_))));
    }

    #[test]
    fn general_force_matches_oracle() {
        let a = alg();
        let u = [0.6, -1.3, 0.0];
        let q = -0.8;
        let f = lorentz::type2_from_vector(&a, &u).unwrap();
        let w0 = [0.4, 0.9, -0.5];
        let s = solve_type2(&u, q, &w0).unwrap();
        let times = oracle::uniform_grid(4.0, 9);
        let orc =
            oracle::integrate_algebra(&a, f.matrix(), q, &w0, &times, &IntegratorConfig::dormand_prince(1e-12, 4.0))
                .unwrap();
        let cmp = oracle::compare(&s.sample(&times), &orc).unwrap();
        assert!(cmp.max_deviation < 1e-8, "{cmp:?}");
        let rep = s.lambda_periodicity(&f);
        assert!(rep.kernel_residual.unwrap() < 1e-12);
    }

    #[test]
    fn kernel() {
        let a = alg();
        let f = lorentz::type2_from_vector(&a, &[0.0, 1.0, 0.0]).unwrap();
        assert!(kernel_check(&f, &[0.0, 3.0, 0.0]));
        assert!(!kernel_check(&f, &[1.0, 0.0, 0.0]));
        let u = [0.3, -0.7, 0.0];
        let g = lorentz::type2_from_vector(&a, &u).unwrap();
        assert!(kernel_check(&g, &u));
    }
}
