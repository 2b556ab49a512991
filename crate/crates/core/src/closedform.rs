//! Closed-form magnetic trajectories for type-I Lorentz forces.
//!
//! With `J = j(Z0_kappa) + q F_v`, `v = ker J (+) w_1 (+) ... (+) w_m` where
//! `J^2 = -theta_i^2` on `w_i`. The curve is `exp(X(t) + Z(t))` with
//! `X(t) = t X1 + (e^{tJ} - I) J^+ X2` and `Z(t)` assembled from brackets of
//! the rotating components, all integrals taken in closed form.

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Mat, RANK_TOL};
use crate::lorentz::{ForceType, LorentzForce};
use crate::nilalgebra::{GroupPoint, MetricNilAlgebra};
use crate::oracle::{self, IntegratorConfig, SampledCurve, Trajectory};
use crate::scalar::Real;

/// Relative gap below which two frequencies are merged into one block.
pub const MERGE_TOL: f64 = 1e-9;

/// Invariant subspace of a skew map on which `J^2 = -theta^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    pub basis: Vec<Vec<T>>,
    pub theta: T,
}

/// Kernel and rotation blocks of a skew matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralJ<T> {
    pub matrix: Mat<T>,
    pub kernel_basis: Vec<Vec<T>>,
    pub planes: Vec<Plane<T>>,
}

pub fn spectral_decompose<T: Real>(j: &Mat<T>) -> SpectralJ<T> {
    let (sig, v) = linalg::svd_right(j);
    let smax = sig.first().copied().unwrap_or_else(T::zero);
    let cut = T::tol(RANK_TOL) * smax;
    let mut kernel_basis = Vec::new();
    let mut groups: Vec<(Vec<usize>, T)> = Vec::new();
    for (i, &s) in sig.iter().enumerate() {
        if smax <= T::min_positive_value() || s <= cut {
            kernel_basis.push(v.column(i));
            continue;
        }
        match groups.last_mut() {
            Some((idx, first)) if (*first - s).abs() <= T::tol(MERGE_TOL) * smax => idx.push(i),
            _ => groups.push((vec![i], s)),
        }
    }
    let planes = groups
        .into_iter()
        .map(|(idx, _)| {
            let theta = idx.iter().fold(T::zero(), |acc, &i| acc + sig[i]) / T::from_usize_lossy(idx.len());
            Plane { basis: idx.iter().map(|&i| v.column(i)).collect(), theta }
        })
        .collect();
    SpectralJ { matrix: j.clone(), kernel_basis, planes }
}

impl<T: Real> SpectralJ<T> {
    /// Re-expresses the decomposition in ambient coordinates, where `basis`
    /// holds the ambient images of the coordinate vectors.
    pub fn lift(&self, basis: &[Vec<T>], dim: usize) -> Self {
        let up = |c: &Vec<T>| {
            let mut out = linalg::zeros(dim);
            for (b, &w) in basis.iter().zip(c) {
                linalg::axpy(w, b, &mut out);
            }
            out
        };
        let p = Mat::from_columns(dim, basis);
        let matrix = if basis.is_empty() { Mat::zeros(dim, dim) } else { p.mul(&self.matrix).mul(&p.transpose()) };
        Self {
            matrix,
            kernel_basis: self.kernel_basis.iter().map(up).collect(),
            planes: self
                .planes
                .iter()
                .map(|pl| Plane { basis: pl.basis.iter().map(up).collect(), theta: pl.theta })
                .collect(),
        }
    }

    pub fn project_kernel(&self, x: &[T]) -> Vec<T> {
        linalg::project(&self.kernel_basis, x)
    }

    pub fn project_plane(&self, i: usize, x: &[T]) -> Vec<T> {
        linalg::project(&self.planes[i].basis, x)
    }

    /// `sum_i P_i J P_i`, which equals `J` when the blocks are invariant.
    pub fn reassemble(&self) -> Mat<T> {
        let n = self.matrix.rows();
        let mut out = Mat::zeros(n, n);
        for pl in &self.planes {
            let p = linalg::projector(&pl.basis, n);
            out = out.add(&p.mul(&self.matrix).mul(&p));
        }
        out
    }

    /// `e^{tJ} x`.
    pub fn exp_apply(&self, t: T, x: &[T]) -> Vec<T> {
        let mut out = self.project_kernel(x);
        for i in 0..self.planes.len() {
            let xi = self.project_plane(i, x);
            let th = self.planes[i].theta;
            let jx = self.matrix.mul_vec(&xi);
            let (s, c) = (th * t).sin_cos();
            linalg::axpy(c, &xi, &mut out);
            linalg::axpy(s / th, &jx, &mut out);
        }
        out
    }

    /// Pseudo-inverse on the complement of the kernel: `-J/theta^2` per block.
    pub fn pinv_apply(&self, x: &[T]) -> Vec<T> {
        let mut out = linalg::zeros(x.len());
        for i in 0..self.planes.len() {
            let xi = self.project_plane(i, x);
            let th = self.planes[i].theta;
            linalg::axpy(-T::one() / (th * th), &self.matrix.mul_vec(&xi), &mut out);
        }
        out
    }

    /// `int_0^t e^{sJ} x ds`.
    pub fn exp_integral(&self, t: T, x: &[T]) -> Vec<T> {
        let mut out = linalg::scale(t, &self.project_kernel(x));
        for i in 0..self.planes.len() {
            let xi = self.project_plane(i, x);
            let th = self.planes[i].theta;
            let jx = self.matrix.mul_vec(&xi);
            linalg::axpy((th * t).sin() / th, &xi, &mut out);
            linalg::axpy(one_minus_cos(th, t) / th, &jx, &mut out);
        }
        out
    }
}

/// `(1 - cos(w t)) / w` without cancellation.
fn one_minus_cos_over<T: Real>(w: T, t: T) -> T {
    let h = (T::c(0.5) * w * t).sin();
    T::c(2.0) * h * h / w
}

/// `1 - cos(w t)` without cancellation.
fn one_minus_cos<T: Real>(w: T, t: T) -> T {
    let h = (T::c(0.5) * w * t).sin();
    T::c(2.0) * h * h
}

/// `(x - sin x) / x^2`.
fn sine_defect<T: Real>(x: T) -> T {
    if x.abs() < T::c(0.05) {
        let x2 = x * x;
        x * (T::one() / T::c(6.0) - x2 / T::c(120.0) + x2 * x2 / T::c(5040.0) - x2 * x2 * x2 / T::c(362880.0))
    } else {
        (x - x.sin()) / (x * x)
    }
}

/// `(2(1 - cos x) - x sin x) / x^2` and `(x(1 + cos x) - 2 sin x) / x^2`.
fn secular_coeffs<T: Real>(x: T) -> (T, T) {
    if x.abs() < T::c(0.05) {
        let x2 = x * x;
        let p1 = x2 * (T::one() / T::c(12.0) - x2 / T::c(180.0) + x2 * x2 / T::c(6720.0));
        let p2 = x * (-T::one() / T::c(6.0) + x2 / T::c(40.0) - x2 * x2 / T::c(1008.0));
        (p1, p2)
    } else {
        let (s, c) = x.sin_cos();
        let h = (T::c(0.5) * x).sin();
        let one_minus = T::c(2.0) * h * h;
        ((T::c(2.0) * one_minus - x * s) / (x * x), (x * (T::one() + c) - T::c(2.0) * s) / (x * x))
    }
}

/// Initial velocity `X0 + Z0` (ambient coordinates) and charge.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition<T> {
    pub x0: Vec<T>,
    pub z0: Vec<T>,
    pub q: T,
}

impl<T: Real> InitialCondition<T> {
    pub fn new(alg: &MetricNilAlgebra<T>, x0: Vec<T>, z0: Vec<T>, q: T) -> Result<Self> {
        check_len(alg.dim(), x0.len())?;
        check_len(alg.dim(), z0.len())?;
        let tol = T::tol(1e-10);
        if linalg::norm(&alg.project_z(&x0)) > tol * linalg::norm(&x0).max(T::one()) {
            return Err(Error::Argument("X0 must lie in v".into()));
        }
        if !alg.in_center(&z0) {
            return Err(Error::Argument("Z0 must lie in z".into()));
        }
        if !q.is_finite() {
            return Err(Error::Argument("charge must be finite".into()));
        }
        Ok(Self { x0, z0, q })
    }

    /// Splits a full velocity vector into its `v` and `z` parts.
    pub fn from_velocity(alg: &MetricNilAlgebra<T>, w: &[T], q: T) -> Result<Self> {
        check_len(alg.dim(), w.len())?;
        Self::new(alg, alg.project_v(w), alg.project_z(w), q)
    }

    pub fn velocity(&self) -> Vec<T> {
        linalg::add(&self.x0, &self.z0)
    }

    pub fn z0_kappa(&self, alg: &MetricNilAlgebra<T>) -> Vec<T> {
        alg.project_commutator(&self.z0)
    }

    pub fn z0_eta(&self, alg: &MetricNilAlgebra<T>) -> Vec<T> {
        alg.project_kerj(&self.z0)
    }
}

#[derive(Debug, Clone)]
struct OffDiag<T> {
    alpha: T,
    beta: T,
    ai_bj: Vec<T>,
    ai_aj: Vec<T>,
    bi_bj: Vec<T>,
    bi_aj: Vec<T>,
}

/// Evaluable type-I solution through the identity.
#[derive(Debug, Clone)]
pub struct TypeISolution<T> {
    alg: MetricNilAlgebra<T>,
    pub spectral: SpectralJ<T>,
    pub q: T,
    pub x0: Vec<T>,
    pub x1: Vec<T>,
    /// Component of `X0` in each block of `spectral`.
    pub xis: Vec<Vec<T>>,
    pub z0_kappa: Vec<T>,
    pub z1_eta: Vec<T>,
    pub z2_eta: Vec<T>,
    /// Blocks of `qF` restricted to `z`.
    pub fz: SpectralJ<T>,
    a: Vec<Vec<T>>,
    b: Vec<Vec<T>>,
    diag: Vec<T>,
    /// `[a_i, b_i]` per plane.
    ab: Vec<Vec<T>>,
    offdiag: Vec<OffDiag<T>>,
}

pub fn solve_type1<T: Real>(
    alg: &MetricNilAlgebra<T>,
    f: &LorentzForce<T>,
    ic: &InitialCondition<T>,
) -> Result<TypeISolution<T>> {
    if f.classification() != ForceType::TypeI {
        return Err(Error::UnsupportedForce(format!("{:?} force has no type-I closed form", f.classification())));
    }
    check_len(alg.dim(), ic.x0.len())?;
    let n = alg.dim();
    let q = ic.q;
    let z0k = ic.z0_kappa(alg);
    let z0e = ic.z0_eta(alg);

    let j_v = alg.j_map(&z0k)?.add(&f.f_v(alg).scale(q));
    let spectral = spectral_decompose(&j_v).lift(alg.v_basis(), n);
    let fz = spectral_decompose(&f.f_z(alg).scale(q)).lift(alg.center_basis(), n);

    let x1 = spectral.project_kernel(&ic.x0);
    let xis: Vec<Vec<T>> = (0..spectral.planes.len()).map(|i| spectral.project_plane(i, &ic.x0)).collect();
    let z1_eta = fz.project_kernel(&z0e);
    let z2_eta = linalg::sub(&z0e, &z1_eta);

    let a = xis.clone();
    let b: Vec<Vec<T>> = xis
        .iter()
        .zip(&spectral.planes)
        .map(|(x, pl)| linalg::scale(T::one() / pl.theta, &spectral.matrix.mul_vec(x)))
        .collect();
    // [xi_i, J^+ xi_i] = -[a_i, b_i] / theta_i
    let ab: Vec<Vec<T>> = a.iter().zip(&b).map(|(x, y)| alg.bracket_unchecked(x, y)).collect();
    let mut diag = linalg::zeros(n);
    for i in 0..a.len() {
        linalg::axpy(-T::one() / spectral.planes[i].theta, &ab[i], &mut diag);
    }
    let mut offdiag = Vec::new();
    for i in 0..a.len() {
        for jj in 0..a.len() {
            if i == jj {
                continue;
            }
            offdiag.push(OffDiag {
                alpha: spectral.planes[i].theta,
                beta: spectral.planes[jj].theta,
                ai_bj: alg.bracket_unchecked(&a[i], &b[jj]),
                ai_aj: alg.bracket_unchecked(&a[i], &a[jj]),
                bi_bj: alg.bracket_unchecked(&b[i], &b[jj]),
                bi_aj: alg.bracket_unchecked(&b[i], &a[jj]),
            });
        }
    }
    Ok(TypeISolution {
        alg: alg.clone(),
        spectral,
        q,
        x0: ic.x0.clone(),
        x1,
        xis,
        z0_kappa: z0k,
        z1_eta,
        z2_eta,
        fz,
        a,
        b,
        diag,
        ab,
        offdiag,
    })
}

/// Solution of an exact force together with the shifted geodesic that
/// represents it.
#[derive(Debug, Clone)]
pub struct ExactSolution<T> {
    pub solution: TypeISolution<T>,
    pub geodesic: TypeISolution<T>,
    /// `q Z~`
    pub shift: Vec<T>,
}

impl<T: Real> ExactSolution<T> {
    /// The magnetic curve rebuilt from the geodesic: same `X`, with `Z`
    /// lowered by `t q Z~` and the velocity lowered by `q Z~`.
    pub fn eval_shifted(&self, t: T) -> (GroupPoint<T>, Vec<T>) {
        let (p, v) = self.geodesic.eval(t);
        let mut xi = p.xi;
        linalg::axpy(-t, &self.shift, &mut xi);
        (GroupPoint::new(xi), linalg::sub(&v, &self.shift))
    }
}

pub fn solve_exact<T: Real>(
    alg: &MetricNilAlgebra<T>,
    z_tilde: &[T],
    ic: &InitialCondition<T>,
) -> Result<ExactSolution<T>> {
    check_len(alg.dim(), z_tilde.len())?;
    let off = linalg::sub(z_tilde, &alg.project_commutator(z_tilde));
    if linalg::norm(&off) > T::tol(RANK_TOL) * linalg::norm(z_tilde).max(T::one()) {
        return Err(Error::Argument("Z~ must lie in the commutator C(n)".into()));
    }
    let f = LorentzForce::exact(alg, z_tilde)?;
    let solution = solve_type1(alg, &f, ic)?;
    let shift = linalg::scale(ic.q, z_tilde);
    let geo_ic = InitialCondition { x0: ic.x0.clone(), z0: linalg::add(&ic.z0, &shift), q: ic.q };
    let geodesic = solve_type1(alg, &LorentzForce::zero(alg), &geo_ic)?;
    Ok(ExactSolution { solution, geodesic, shift })
}

impl<T: Real> TypeISolution<T> {
    pub fn algebra(&self) -> &MetricNilAlgebra<T> {
        &self.alg
    }

    fn theta(&self, i: usize) -> T {
        self.spectral.planes[i].theta
    }

    /// `X(t)`.
    pub fn x_of_t(&self, t: T) -> Vec<T> {
        let mut x = linalg::scale(t, &self.x1);
        for i in 0..self.a.len() {
            let th = self.theta(i);
            linalg::axpy((th * t).sin() / th, &self.a[i], &mut x);
            linalg::axpy(one_minus_cos_over(th, t), &self.b[i], &mut x);
        }
        x
    }

    /// `J^+ X2` and `e^{tJ} J^+ X2`.
    fn pinv_terms(&self, t: T) -> (Vec<T>, Vec<T>) {
        let n = self.alg.dim();
        let mut p = linalg::zeros(n);
        let mut ep = linalg::zeros(n);
        for i in 0..self.a.len() {
            let th = self.theta(i);
            let (s, c) = (th * t).sin_cos();
            linalg::axpy(-T::one() / th, &self.b[i], &mut p);
            linalg::axpy(-c / th, &self.b[i], &mut ep);
            linalg::axpy(s / th, &self.a[i], &mut ep);
        }
        (p, ep)
    }

    /// `sum_{i != j} [e^{tJ} J^+ xi_i, J^+ xi_j]`.
    fn pinv_cross(&self, t: T) -> Vec<T> {
        let mut out = linalg::zeros(self.alg.dim());
        for od in &self.offdiag {
            let (s, c) = (od.alpha * t).sin_cos();
            let w = -T::one() / (od.alpha * od.beta);
            linalg::axpy(w * s, &od.ai_bj, &mut out);
            linalg::axpy(-w * c, &od.bi_bj, &mut out);
        }
        out
    }

    /// `sum_{i != j} int_0^t [e^{sJ} xi_i, e^{sJ} J^+ xi_j] ds`.
    fn offdiag_integral(&self, t: T) -> Vec<T> {
        let n = self.alg.dim();
        let half = T::c(0.5);
        let s_int = |w: T| (w * t).sin() / w;
        let c_int = |w: T| one_minus_cos_over(w, t);
        let mut out = linalg::zeros(n);
        for od in &self.offdiag {
            let (al, be) = (od.alpha, od.beta);
            let cc = half * (s_int(al - be) + s_int(al + be));
            let ss = half * (s_int(al - be) - s_int(al + be));
            let cs = half * (c_int(al + be) + c_int(be - al));
            let sc = half * (c_int(al + be) + c_int(al - be));
            let w = -T::one() / be;
            for k in 0..n {
                out[k] = out[k] + w * (cc * od.ai_bj[k] - cs * od.ai_aj[k] + sc * od.bi_bj[k] - ss * od.bi_aj[k]);
            }
        }
        out
    }

    /// `Z(t)`.
    pub fn z_of_t(&self, t: T) -> Vec<T> {
        let n = self.alg.dim();
        let half = T::c(0.5);
        // 2 (e^{tJ} - I) J^{+2} X2 - t (e^{tJ} + I) J^+ X2
        let mut w = linalg::zeros(n);
        for i in 0..self.a.len() {
            let th = self.theta(i);
            let (p1, p2) = secular_coeffs(th * t);
            linalg::axpy(t * t * p1, &self.a[i], &mut w);
            linalg::axpy(t * t * p2, &self.b[i], &mut w);
        }
        let mut inner = self.alg.bracket_unchecked(&self.x1, &w);
        // same plane: t [xi, J^+ xi] - [e^{tJ} J^+ xi, J^+ xi] = -[a, b] t^2 g(theta t)
        for i in 0..self.ab.len() {
            linalg::axpy(-t * t * sine_defect(self.theta(i) * t), &self.ab[i], &mut inner);
        }
        inner = linalg::add(&inner, &self.offdiag_integral(t));
        inner = linalg::sub(&inner, &self.pinv_cross(t));
        let mut z = linalg::scale(t, &self.z0_kappa);
        linalg::axpy(-half, &inner, &mut z);
        linalg::axpy(t, &self.z1_eta, &mut z);
        linalg::add(&z, &self.fz.exp_integral(t, &self.z2_eta))
    }

    /// `Z(t) = t Z1(t) + Z2(t)` with `Z2` uniformly bounded.
    pub fn secular_split(&self, t: T) -> (Vec<T>, Vec<T>) {
        let n = self.alg.dim();
        let half = T::c(0.5);
        let (p, ep) = self.pinv_terms(t);
        let mut eplus = linalg::zeros(n);
        let mut eminus2 = linalg::zeros(n);
        for i in 0..self.a.len() {
            let th = self.theta(i);
            let (s, c) = (th * t).sin_cos();
            linalg::axpy(s / th, &self.a[i], &mut eplus);
            linalg::axpy(-(T::one() + c) / th, &self.b[i], &mut eplus);
            linalg::axpy(one_minus_cos(th, t) / (th * th), &self.a[i], &mut eminus2);
            linalg::axpy(-s / (th * th), &self.b[i], &mut eminus2);
        }
        let mut z1 = linalg::add(&self.z0_kappa, &self.z1_eta);
        linalg::axpy(half, &self.alg.bracket_unchecked(&self.x1, &eplus), &mut z1);
        linalg::axpy(-half, &self.diag, &mut z1);

        let mut z2 = linalg::scale(-T::one(), &self.alg.bracket_unchecked(&self.x1, &eminus2));
        linalg::axpy(-half, &self.offdiag_integral(t), &mut z2);
        linalg::axpy(half, &self.alg.bracket_unchecked(&ep, &p), &mut z2);
        z2 = linalg::add(&z2, &self.fz.exp_integral(t, &self.z2_eta));
        (z1, z2)
    }

    /// Triangle-inequality bound on `sup_t |Z2(t)|`.
    pub fn z2_bound(&self) -> T {
        let cb = linalg::norm(self.alg.structure());
        let two = T::c(2.0);
        let mut pinv2 = T::zero();
        let mut pinv = T::zero();
        for i in 0..self.a.len() {
            let th = self.theta(i);
            let r = linalg::norm(&self.a[i]);
            pinv2 = pinv2 + r * r / (th * th * th * th);
            pinv = pinv + r * r / (th * th);
        }
        let mut bound = cb * linalg::norm(&self.x1) * two * pinv2.sqrt() + T::c(0.5) * cb * pinv;
        for i in 0..self.a.len() {
            for j in 0..self.a.len() {
                if i == j {
                    continue;
                }
                let (al, be) = (self.theta(i), self.theta(j));
                let w = cb * linalg::norm(&self.a[i]) * linalg::norm(&self.a[j]) / be;
                bound = bound + T::c(0.5) * w * T::c(4.0) * (two / (al - be).abs() + two / (al + be));
            }
        }
        let mut eta = T::zero();
        for pl in 0..self.fz.planes.len() {
            let r = linalg::norm(&self.fz.project_plane(pl, &self.z2_eta));
            eta = eta + r / self.fz.planes[pl].theta;
        }
        bound + two * eta
    }

    /// `[e^{tJ} xi_i, e^{tJ} J^+ xi_i]`, independent of `t`.
    pub fn conserved_bracket(&self, i: usize, t: T) -> Vec<T> {
        let e_xi = self.spectral.exp_apply(t, &self.xis[i]);
        let e_p = self.spectral.exp_apply(t, &self.spectral.pinv_apply(&self.xis[i]));
        self.alg.bracket_unchecked(&e_xi, &e_p)
    }

    /// Left-trivialized velocity `e^{tJ} X0 + Z0_kappa + e^{tqF} Z0_eta`.
    pub fn velocity(&self, t: T) -> Vec<T> {
        let mut v = self.spectral.exp_apply(t, &self.x0);
        v = linalg::add(&v, &self.z0_kappa);
        v = linalg::add(&v, &self.z1_eta);
        linalg::add(&v, &self.fz.exp_apply(t, &self.z2_eta))
    }

    pub fn eval(&self, t: T) -> (GroupPoint<T>, Vec<T>) {
        let xi = linalg::add(&self.x_of_t(t), &self.z_of_t(t));
        (GroupPoint::new(xi), self.velocity(t))
    }
}

impl<T: Real> Trajectory<T> for TypeISolution<T> {
    fn eval_at(&self, t: T) -> (Vec<T>, Vec<T>) {
        let (p, v) = self.eval(t);
        (p.xi, v)
    }
}

/// Velocity curve `e^{t(j(Z0) + qF_v)} X0 + Z0` for forces vanishing on `z`.
#[derive(Debug, Clone)]
pub struct CentralKernelCurve<T> {
    alg: MetricNilAlgebra<T>,
    pub spectral: SpectralJ<T>,
    pub x0: Vec<T>,
    pub z0: Vec<T>,
}

pub fn solve_central_kernel<T: Real>(
    alg: &MetricNilAlgebra<T>,
    f: &LorentzForce<T>,
    ic: &InitialCondition<T>,
) -> Result<CentralKernelCurve<T>> {
    let tol = T::tol(crate::lorentz::FORCE_TOL) * f.matrix().max_abs().max(T::one());
    let moves_center = alg.center_basis().iter().any(|z| linalg::max_abs(&f.apply(z)) > tol);
    if moves_center {
        return Err(Error::UnsupportedForce("force does not vanish on the center".into()));
    }
    let j_v = alg.j_map(&alg.project_commutator(&ic.z0))?.add(&f.f_v(alg).scale(ic.q));
    let spectral = spectral_decompose(&j_v).lift(alg.v_basis(), alg.dim());
    Ok(CentralKernelCurve { alg: alg.clone(), spectral, x0: ic.x0.clone(), z0: ic.z0.clone() })
}

impl<T: Real> CentralKernelCurve<T> {
    pub fn velocity(&self, t: T) -> Vec<T> {
        linalg::add(&self.spectral.exp_apply(t, &self.x0), &self.z0)
    }

    /// Group curve through the identity by numerical reconstruction.
    pub fn group_curve(&self, times: &[T], cfg: &IntegratorConfig<T>) -> Result<SampledCurve<T>> {
        oracle::reconstruct_group(&self.alg, |t| self.velocity(t), times, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(n: usize) -> MetricNilAlgebra<f64> {
        MetricNilAlgebra::heisenberg(n).unwrap()
    }

    fn h5_force(m1: f64, m2: f64) -> LorentzForce<f64> {
        let a = h(2);
        let mut m = Mat::zeros(5, 5);
        m[(1, 0)] = m1;
        m[(0, 1)] = -m1;
        m[(3, 2)] = m2;
        m[(2, 3)] = -m2;
        LorentzForce::new(&a, m).unwrap()
    }

    #[test]
    fn spectral_blocks() {
        let z = spectral_decompose(&Mat::<f64>::zeros(3, 3));
        assert_eq!(z.kernel_basis.len(), 3);
        assert!(z.planes.is_empty());
        let r = spectral_decompose(&Mat::from_rows(&[vec![0.0f64, -3.0], vec![3.0, 0.0]]).unwrap());
        assert_eq!(r.planes.len(), 1);
        assert!((r.planes[0].theta - 3.0).abs() < 1e-14);
        let a = h(2);
        let j = a.j_map(&[0.0, 0.0, 0.0, 0.0, 0.4]).unwrap().add(&h5_force(-1.0, 2.0).f_v(&a));
        let s = spectral_decompose(&j);
        let mut th: Vec<f64> = s.planes.iter().map(|p| p.theta).collect();
        th.sort_by(f64::total_cmp);
        assert!((th[0] - 0.6).abs() < 1e-13 && (th[1] - 2.4).abs() < 1e-13);
        assert!(s.reassemble().sub(&j).max_abs() < 1e-12);
    }

    #[test]
    fn geodesic_without_force() {
        let a = h(1);
        let ic = InitialCondition::new(&a, vec![0.3, -0.4, 0.0], vec![0.0; 3], 1.0).unwrap();
        let s = solve_type1(&a, &LorentzForce::zero(&a), &ic).unwrap();
        for t in [0.0, 0.7, 3.0] {
            let (p, v) = s.eval(t);
            assert!(linalg::dist(&p.xi, &[0.3 * t, -0.4 * t, 0.0]) < 1e-15);
            assert!(linalg::dist(&v, &[0.3, -0.4, 0.0]) < 1e-15);
        }
    }

    #[test]
    fn single_plane_closes_up() {
        let a = h(1);
        let rho = 1.5;
        let f = LorentzForce::exact(&a, &[0.0, 0.0, rho]).unwrap();
        let ic = InitialCondition::new(&a, vec![1.0, 0.5, 0.0], vec![0.0; 3], 1.0).unwrap();
        let s = solve_type1(&a, &f, &ic).unwrap();
        let period = 2.0 * std::f64::consts::PI / rho;
        let x = s.x_of_t(period);
        assert!(linalg::norm(&x[..2]) < 1e-14);
        let (p0, v0) = s.eval(0.0);
        assert!(linalg::norm(&p0.xi) < 1e-15);
        assert!(linalg::dist(&v0, &ic.velocity()) < 1e-15);
    }

    #[test]
    fn rejects_non_type_one() {
        let a = h(1);
        let f = crate::lorentz::type2_from_vector(&a, &[0.0, 1.0, 0.0]).unwrap();
        let ic = InitialCondition::new(&a, vec![1.0, 0.0, 0.0], vec![0.0; 3], 1.0).unwrap();
        assert!(matches!(solve_type1(&a, &f, &ic), Err(Error::UnsupportedForce(_))));
        assert!(solve_exact(&a, &[1.0, 0.0, 0.0], &ic).is_err());
    }

    #[test]
    fn matches_oracle_on_h5() {
        let a = h(2);
        let f = h5_force(-1.0, 2.0);
        let ic =
            InitialCondition::new(&a, vec![0.4, -0.3, 0.8, 0.1, 0.0], vec![0.0, 0.0, 0.0, 0.0, 0.35], 0.9).unwrap();
        let s = solve_type1(&a, &f, &ic).unwrap();
        let times = [0.0, 0.5, 1.7, 3.3];
        let orc = oracle::integrate_algebra(
            &a,
            f.matrix(),
            ic.q,
            &ic.velocity(),
            &times,
            &IntegratorConfig::dormand_prince(1e-12, 4.0),
        )
        .unwrap();
        let cmp = oracle::compare(&s.sample(&times), &orc).unwrap();
        assert!(cmp.max_deviation < 1e-8, "{cmp:?}");
    }

    #[test]
    fn secular_split_sums_to_z() {
        let a = h(2);
        let f = h5_force(-1.0, 2.0);
        let ic =
            InitialCondition::new(&a, vec![0.4, -0.3, 0.8, 0.1, 0.0], vec![0.0, 0.0, 0.0, 0.0, 0.35], 0.9).unwrap();
        let s = solve_type1(&a, &f, &ic).unwrap();
        let bound = s.z2_bound();
        for t in [0.0, 0.3, 2.0, 17.0, 80.0] {
            let (z1, z2) = s.secular_split(t);
            let z = s.z_of_t(t);
            let mut sum = linalg::scale(t, &z1);
            sum = linalg::add(&sum, &z2);
            assert!(linalg::dist(&sum, &z) < 1e-11 * (1.0 + t));
            assert!(linalg::norm(&z2) <= bound);
        }
    }

    #[test]
    fn central_kernel_velocity() {
        let a = h(1);
        let f = LorentzForce::exact(&a, &[0.0, 0.0, 0.7]).unwrap();
        let ic = InitialCondition::new(&a, vec![0.2, 0.9, 0.0], vec![0.0, 0.0, -0.3], 1.3).unwrap();
        let c = solve_central_kernel(&a, &f, &ic).unwrap();
        let s = solve_type1(&a, &f, &ic).unwrap();
        for t in [0.0, 1.0, 4.0] {
            assert!(linalg::dist(&c.velocity(t), &s.velocity(t)) < 1e-14);
        }
        let ty2 = crate::lorentz::type2_from_vector(&a, &[0.0, 1.0, 0.0]).unwrap();
        assert!(solve_central_kernel(&a, &ty2, &ic).is_err());
    }
}
