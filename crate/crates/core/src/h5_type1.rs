//! Non-exact type-I forces on the five-dimensional Heisenberg group.
//!
//! A type-I force commuting with `J0 = j(e5)` is complex linear on `v = C^2`,
//! so some `S` in `U(2)` brings it to `diag(rot(mu1), rot(mu2))`. In that
//! frame every mode rotates at `nu_i = z0 + mu_i`.

use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Mat};
use crate::lorentz::{ForceType, LorentzForce};
use crate::nilalgebra::MetricNilAlgebra;
use crate::oracle::Trajectory;
use crate::scalar::Real;

/// Largest numerator and denominator tried by the commensurability search.
pub const MAX_DENOMINATOR: i64 = 64;
/// Residual threshold of `verify_periodic`.
pub const PERIODIC_TOL: f64 = 1e-8;
pub const VERIFY_SAMPLES: usize = 20;

/// Force on H5 in its diagonal frame. Rows of `s` are `u1, J0 u1, u2, J0 u2`.
#[derive(Debug, Clone, PartialEq)]
pub struct H5Force<T> {
    pub mu1: T,
    pub mu2: T,
    pub s: Mat<T>,
    pub matrix: Mat<T>,
}

fn rot_blocks<T: Real>(a: T, b: T) -> Mat<T> {
    let mut m = Mat::zeros(4, 4);
    m[(1, 0)] = a;
    m[(0, 1)] = -a;
    m[(3, 2)] = b;
    m[(2, 3)] = -b;
    m
}

fn h5() -> MetricNilAlgebra<f64> {
    MetricNilAlgebra::heisenberg(2).expect("H5 preset")
}

impl<T: Real> H5Force<T> {
    /// The force `diag(rot(mu1), rot(mu2))` on `v`, zero on `z`.
    pub fn from_mu(mu1: T, mu2: T) -> Self {
        let mut matrix = Mat::zeros(5, 5);
        let b = rot_blocks(mu1, mu2);
        for i in 0..4 {
            for j in 0..4 {
                matrix[(i, j)] = b[(i, j)];
            }
        }
        Self { mu1, mu2, s: Mat::identity(4), matrix }
    }

    /// Diagonalizes a closed type-I force on `heisenberg(2)` that commutes
    /// with `j(e5)`; `mu1 <= mu2`.
    pub fn from_force(alg: &MetricNilAlgebra<T>, f: &LorentzForce<T>) -> Result<Self> {
        let (hd, ha) = (h5(), alg.to_def());
        if ha != hd.to_def() {
            return Err(Error::Argument("algebra must be the heisenberg(2) preset".into()));
        }
        if f.classification() != ForceType::TypeI {
            return Err(Error::UnsupportedForce("H5 solver needs a type-I force".into()));
        }
        let m = f.matrix();
        let fv = Mat::from_fn(4, 4, |i, j| m[(i, j)]);
        let mut e5 = linalg::zeros(5);
        e5[4] = T::one();
        let j0 = alg.j_map(&e5)?;
        let scale = fv.max_abs().max(T::one());
        if fv.mul(&j0).sub(&j0.mul(&fv)).max_abs() > T::tol(1e-10) * scale {
            return Err(Error::UnsupportedForce("F does not commute with j(Z)".into()));
        }
        let sym = fv.mul(&j0).scale(-T::one());
        let (_, vecs) = linalg::sym_eigen(&sym);
        let u1 = vecs.column(0);
        let ju1 = j0.mul_vec(&u1);
        let plane = [u1.clone(), ju1.clone()];
        let u2 = (1..4)
            .map(|i| {
                let c = vecs.column(i);
                linalg::sub(&c, &linalg::project(&plane, &c))
            })
            .max_by(|a, b| linalg::norm(a).partial_cmp(&linalg::norm(b)).unwrap_or(std::cmp::Ordering::Equal))
            .expect("four eigenvectors");
        let u2 = linalg::scale(T::one() / linalg::norm(&u2), &u2);
        let ju2 = j0.mul_vec(&u2);
        let mu1 = linalg::dot(&u1, &sym.mul_vec(&u1));
        let mu2 = linalg::dot(&u2, &sym.mul_vec(&u2));
        let s = Mat::from_rows(&[u1, ju1, u2, ju2]).expect("4x4");
        Ok(Self { mu1, mu2, s, matrix: m.clone() })
    }

    pub fn force_v(&self) -> Mat<T> {
        Mat::from_fn(4, 4, |i, j| self.matrix[(i, j)])
    }

    /// `|S F S^-1 - diag(rot(mu1), rot(mu2))|_max`.
    pub fn diagonal_defect(&self) -> T {
        self.s.mul(&self.force_v()).mul(&self.s.transpose()).sub(&rot_blocks(self.mu1, self.mu2)).max_abs()
    }

    pub fn is_exact(&self) -> bool {
        (self.mu1 - self.mu2).abs() <= T::tol(1e-12) * self.mu1.abs().max(self.mu2.abs()).max(T::one())
    }

    pub fn to_tilde(&self, v: &[T]) -> Vec<T> {
        self.s.mul_vec(v)
    }

    pub fn from_tilde(&self, v: &[T]) -> Vec<T> {
        self.s.transpose().mul_vec(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum H5Branch {
    BothResonantFree,
    OneResonant,
    FullyResonant,
}

/// `sin(x)/x`.
fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::c(1e-4) {
        T::one() - x * x / T::c(6.0)
    } else {
        x.sin() / x
    }
}

/// `(x - sin x) / x^2`.
fn g3<T: Real>(x: T) -> T {
    if x.abs() < T::c(0.1) {
        let x2 = x * x;
        x * (T::one() / T::c(6.0) - x2 / T::c(120.0) + x2 * x2 / T::c(5040.0) - x2 * x2 * x2 / T::c(362_880.0))
    } else {
        (x - x.sin()) / (x * x)
    }
}

/// Solution through the identity with `V(0) = v0` (original coordinates)
/// and `Z(0) = z0 e5`.
#[derive(Debug, Clone, PartialEq)]
pub struct H5Trajectory<T> {
    pub force: H5Force<T>,
    pub branch: H5Branch,
    pub z0: T,
    /// `S v0 = (x1, y1, x2, y2)`.
    pub tilde: [T; 4],
    pub nu: [T; 2],
    /// Coefficient of `t` in `z(t)`.
    pub drift: T,
}

pub fn solve_h5<T: Real>(force: &H5Force<T>, v0: &[T], z0: T) -> Result<H5Trajectory<T>> {
    check_len(4, v0.len())?;
    let t = force.to_tilde(v0);
    let tilde = [t[0], t[1], t[2], t[3]];
    Ok(from_tilde(force, tilde, z0))
}

fn from_tilde<T: Real>(force: &H5Force<T>, tilde: [T; 4], z0: T) -> H5Trajectory<T> {
    let nu = [z0 + force.mu1, z0 + force.mu2];
    let scale = force.mu1.abs().max(force.mu2.abs()).max(z0.abs()).max(T::one());
    let resonant = |n: T| n.abs() <= T::tol(1e-14) * scale;
    let branch = match (resonant(nu[0]), resonant(nu[1])) {
        (false, false) => H5Branch::BothResonantFree,
        (true, true) => H5Branch::FullyResonant,
        _ => H5Branch::OneResonant,
    };
    let mut drift = z0;
    for i in 0..2 {
        let r2 = tilde[2 * i] * tilde[2 * i] + tilde[2 * i + 1] * tilde[2 * i + 1];
        if !resonant(nu[i]) {
            drift = drift + T::c(0.5) * r2 / nu[i];
        }
    }
    H5Trajectory { force: force.clone(), branch, z0, tilde, nu, drift }
}

impl<T: Real> H5Trajectory<T> {
    /// `(u1, v1, u2, v2, z)` in the diagonal frame.
    pub fn eval_tilde(&self, t: T) -> [T; 5] {
        let mut out = [T::zero(); 5];
        let mut z = self.z0 * t;
        for i in 0..2 {
            let (x, y) = (self.tilde[2 * i], self.tilde[2 * i + 1]);
            let w = self.nu[i] * t;
            let f1 = t * sinc(w);
            let h = T::c(0.5) * w;
            let f2 = t * h.sin() * sinc(h);
            out[2 * i] = x * f1 - y * f2;
            out[2 * i + 1] = x * f2 + y * f1;
            z = z + T::c(0.5) * (x * x + y * y) * t * t * g3(w);
        }
        out[4] = z;
        out
    }

    /// Exponential coordinates in the original basis.
    pub fn position(&self, t: T) -> Vec<T> {
        let e = self.eval_tilde(t);
        let mut xi = self.force.from_tilde(&e[..4]);
        xi.push(e[4]);
        xi
    }

    /// Left-trivialized velocity `(e^{tJ} V0, z0)`.
    pub fn velocity(&self, t: T) -> Vec<T> {
        let mut w = linalg::zeros(4);
        for i in 0..2 {
            let (x, y) = (self.tilde[2 * i], self.tilde[2 * i + 1]);
            let (s, c) = (self.nu[i] * t).sin_cos();
            w[2 * i] = x * c - y * s;
            w[2 * i + 1] = x * s + y * c;
        }
        let mut v = self.force.from_tilde(&w);
        v.push(self.z0);
        v
    }

    /// Amplitude `-|V_i|^2 / (2 nu_i^2)` of `sin(nu_i t)` in `z(t)`.
    pub fn z_sine_coefficients(&self) -> [T; 2] {
        let mut c = [T::zero(); 2];
        for (i, ci) in c.iter_mut().enumerate() {
            let r2 = self.tilde[2 * i] * self.tilde[2 * i] + self.tilde[2 * i + 1] * self.tilde[2 * i + 1];
            if self.nu[i] != T::zero() {
                *ci = -T::c(0.5) * r2 / (self.nu[i] * self.nu[i]);
            }
        }
        c
    }

    pub fn energy(&self) -> T {
        let r2 = self.tilde.iter().fold(T::zero(), |s, &x| s + x * x);
        T::c(0.5) * (r2 + self.z0 * self.z0)
    }
}

impl<T: Real> Trajectory<T> for H5Trajectory<T> {
    fn eval_at(&self, t: T) -> (Vec<T>, Vec<T>) {
        (self.position(t), self.velocity(t))
    }
}

/// `E = (|V0|^2 + z0^2) / 2`.
pub fn energy<T: Real>(v0: &[T], z0: T) -> T {
    T::c(0.5) * (linalg::dot(v0, v0) + z0 * z0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Construction {
    /// Only mode `index` (0 or 1) is excited.
    SingleMode { index: usize },
    /// `nu1 / nu2 = -p / q`.
    TwoMode { p: i64, q: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicCertificate<T> {
    pub trajectory: H5Trajectory<T>,
    /// Initial `V0` in the original basis.
    pub v0: Vec<T>,
    pub z0: T,
    pub period: T,
    pub construction: Construction,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// A periodic trajectory of energy `energy` with zero drift.
pub fn periodic_at_energy<T: Real>(force: &H5Force<T>, energy: T) -> Result<PeriodicCertificate<T>> {
    if force.is_exact() {
        return Err(Error::ExactForce("mu1 = mu2".into()));
    }
    if energy.is_nan() || energy < T::zero() || !energy.is_finite() {
        return Err(Error::Argument(format!("energy {energy} must be finite and non-negative")));
    }
    let two_e = T::c(2.0) * energy;
    let mu = [force.mu1, force.mu2];
    let finish = |tilde: [T; 4], z0: T, period: T, construction| {
        let trajectory = from_tilde(force, tilde, z0);
        let v0 = force.from_tilde(&tilde);
        Ok(PeriodicCertificate { trajectory, v0, z0, period, construction })
    };
    if let Some(i) = (0..2).find(|&i| mu[i] * mu[i] > two_e) {
        let m = mu[i];
        let z0 = -m + m.signum() * (m * m - two_e).sqrt();
        let r = (two_e - z0 * z0).max(T::zero()).sqrt();
        let mut tilde = [T::zero(); 4];
        tilde[2 * i] = r;
        let period = T::c(2.0) * T::PI() / (z0 + m).abs();
        return finish(tilde, z0, period, Construction::SingleMode { index: i });
    }
    // both modes: nu_lo < 0 < nu_hi with nu_lo / nu_hi = -p / q
    let (lo, hi) = if mu[0] < mu[1] { (0, 1) } else { (1, 0) };
    let mut tried = 0usize;
    for q in 1..=MAX_DENOMINATOR {
        for p in 1..=MAX_DENOMINATOR {
            if gcd(p, q) != 1 {
                continue;
            }
            tried += 1;
            let r = T::c(p as f64) / T::c(q as f64);
            // z0 + mu_lo = -r (z0 + mu_hi)
            let z0 = -(mu[lo] + r * mu[hi]) / (T::one() + r);
            let nu_lo = z0 + mu[lo];
            let nu_hi = z0 + mu[hi];
            if !(nu_lo < T::zero() && nu_hi > T::zero()) {
                continue;
            }
            let rhs = two_e - z0 * z0;
            let a =
                Mat::from_rows(&[vec![T::c(0.5) / nu_lo, T::c(0.5) / nu_hi], vec![T::one(), T::one()]]).expect("2x2");
            let Some(sol) = linalg::solve(&a, &[-z0, rhs]) else { continue };
            if sol[0] < T::zero() || sol[1] < T::zero() {
                continue;
            }
            let mut tilde = [T::zero(); 4];
            tilde[2 * lo] = sol[0].sqrt();
            tilde[2 * hi] = sol[1].sqrt();
            let period = T::c(2.0) * T::PI() * T::c(q as f64) / nu_hi;
            return finish(tilde, z0, period, Construction::TwoMode { p, q });
        }
    }
    Err(Error::NoCertificate(format!(
        "no commensurable z0 with non-negative mode energies among {tried} ratios (mu = {}, {}, E = {energy})",
        mu[0], mu[1]
    )))
}

/// Period of a drift-free trajectory whose excited frequencies have ratio
/// `p/q` with `p, q <= MAX_DENOMINATOR`; `None` otherwise.
pub fn find_period<T: Real>(traj: &H5Trajectory<T>) -> Option<T> {
    let tol = T::tol(PERIODIC_TOL);
    let scale = traj.energy().sqrt().max(T::one());
    if traj.drift.abs() > tol * scale {
        return None;
    }
    let mut active = Vec::new();
    for i in 0..2 {
        if traj.tilde[2 * i].hypot(traj.tilde[2 * i + 1]) > tol * scale {
            if traj.nu[i].abs() <= tol * scale {
                // a resonant excited mode moves along a line
                return None;
            }
            active.push(traj.nu[i].abs());
        }
    }
    let two_pi = T::c(2.0) * T::PI();
    match active[..] {
        [nu] => Some(two_pi / nu),
        [a, b] => {
            for q in 1..=MAX_DENOMINATOR {
                for p in 1..=MAX_DENOMINATOR {
                    if gcd(p, q) != 1 {
                        continue;
                    }
                    // a / b = p / q
                    if (a * T::c(q as f64) - b * T::c(p as f64)).abs() <= tol * (a + b) {
                        return Some(two_pi * T::c(q as f64) / b);
                    }
                }
            }
            None
        }
        _ => None,
    }
}

/// `max_i |xi(t_i + T) - xi(t_i)|` over `VERIFY_SAMPLES` times in `[0, T)`.
pub fn verify_periodic<T: Real>(traj: &H5Trajectory<T>, period: T) -> T {
    (0..VERIFY_SAMPLES)
        .map(|i| {
            let t = period * T::from_usize_lossy(i) / T::from_usize_lossy(VERIFY_SAMPLES);
            linalg::dist(&traj.position(t + period), &traj.position(t))
        })
        .fold(T::zero(), T::max)
}
