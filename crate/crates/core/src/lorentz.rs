//! Left-invariant Lorentz forces: skew endomorphisms with closed 2-form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::nilalgebra::MetricNilAlgebra;
use crate::scalar::Real;

/// Tolerance for skewness, closedness and block tests (times `max(1, |F|)`).
pub const FORCE_TOL: f64 = 1e-12;
/// Relative residual under which a force counts as exact.
pub const EXACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForceType {
    /// Preserves `v` and `z`.
    TypeI,
    /// Swaps `v` and `z`.
    TypeII,
    Mixed,
}

/// Outcome of the closedness check of `omega_F(U, V) = <FU, V>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Closedness<T> {
    pub closed: bool,
    pub residual: T,
    /// Basis triple `(i, j, k)` (0-based) with the largest cyclic sum.
    pub worst_triple: Option<(usize, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LorentzForce<T> {
    matrix: Mat<T>,
    classification: ForceType,
    exact_witness: Option<Vec<T>>,
    closed_residual: T,
}

impl<T: Real> LorentzForce<T> {
    /// Validates skewness and closedness, then classifies.
    pub fn new(alg: &MetricNilAlgebra<T>, matrix: Mat<T>) -> Result<Self> {
        let cl = check_closed(alg, &matrix).map_err(|e| match e {
            Error::Argument(m) => Error::InvalidForce(m),
            other => other,
        })?;
        if !cl.closed {
            let (i, j, k) = cl.worst_triple.unwrap_or((0, 0, 0));
            return Err(Error::InvalidForce(format!(
                "2-form is not closed: residual {} on basis triple ({}, {}, {})",
                cl.residual,
                i + 1,
                j + 1,
                k + 1
            )));
        }
        let classification = classify(alg, &matrix);
        let exact_witness = exactness_test(alg, &matrix);
        Ok(Self { matrix, classification, exact_witness, closed_residual: cl.residual })
    }

    pub fn zero(alg: &MetricNilAlgebra<T>) -> Self {
        Self::new(alg, Mat::zeros(alg.dim(), alg.dim())).expect("zero force is valid")
    }

    /// The exact force `j(Z)` on `v`, zero on `z`.
    pub fn exact(alg: &MetricNilAlgebra<T>, z: &[T]) -> Result<Self> {
        Self::new(alg, exact_force_matrix(alg, z)?)
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.matrix
    }

    pub fn classification(&self) -> ForceType {
        self.classification
    }

    pub fn exact_witness(&self) -> Option<&[T]> {
        self.exact_witness.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact_witness.is_some()
    }

    pub fn closed_residual(&self) -> T {
        self.closed_residual
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.matrix.mul_vec(x)
    }

    /// `F` restricted to `v`, in `v_basis` coordinates.
    pub fn f_v(&self, alg: &MetricNilAlgebra<T>) -> Mat<T> {
        restrict(&self.matrix, alg.v_basis(), alg.dim())
    }

    /// `F` restricted to `z`, in `center_basis` coordinates.
    pub fn f_z(&self, alg: &MetricNilAlgebra<T>) -> Mat<T> {
        restrict(&self.matrix, alg.center_basis(), alg.dim())
    }
}

fn restrict<T: Real>(f: &Mat<T>, basis: &[Vec<T>], dim: usize) -> Mat<T> {
    if basis.is_empty() {
        return Mat::zeros(0, 0);
    }
    f.restrict(&Mat::from_columns(dim, basis))
}

fn scale_of<T: Real>(f: &Mat<T>) -> T {
    f.max_abs().max(T::one())
}

/// Full-coordinate matrix of `X -> j(Z) X_v`.
pub fn exact_force_matrix<T: Real>(alg: &MetricNilAlgebra<T>, z: &[T]) -> Result<Mat<T>> {
    crate::error::check_len(alg.dim(), z.len())?;
    if !alg.in_center(z) {
        return Err(Error::Argument("exact force needs Z in the center".into()));
    }
    let n = alg.dim();
    let cols: Vec<Vec<T>> = (0..n).map(|i| alg.j_apply(z, &linalg::unit(n, i))).collect();
    Ok(Mat::from_columns(n, &cols))
}

/// Cyclic sums `omega([e_i,e_j],e_k) + omega([e_j,e_k],e_i) + omega([e_k,e_i],e_j)`
/// over all basis triples `i < j < k`.
pub fn check_closed<T: Real>(alg: &MetricNilAlgebra<T>, f: &Mat<T>) -> Result<Closedness<T>> {
    let n = alg.dim();
    if f.rows() != n || f.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.rows() });
    }
    let s = scale_of(f);
    if f.skew_defect() > T::tol(FORCE_TOL) * s {
        return Err(Error::Argument("force matrix is not skew-symmetric".into()));
    }
    let bracket_of = |i: usize, j: usize| -> Vec<T> { (0..n).map(|k| alg.c(i, j, k)).collect() };
    // omega(U, e_k) = (F U)_k
    let fb: Vec<Vec<Vec<T>>> = (0..n).map(|i| (0..n).map(|j| f.mul_vec(&bracket_of(i, j))).collect()).collect();
    let mut worst = T::zero();
    let mut triple = None;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let r = (fb[i][j][k] + fb[j][k][i] + fb[k][i][j]).abs();
                if r > worst {
                    worst = r;
                    triple = Some((i, j, k));
                }
            }
        }
    }
    let cmax = alg.structure().iter().fold(T::one(), |m, &x| m.max(x.abs()));
    Ok(Closedness { closed: worst <= T::tol(FORCE_TOL) * s * cmax, residual: worst, worst_triple: triple })
}

/// Block classification; the zero force counts as type I.
pub fn classify<T: Real>(alg: &MetricNilAlgebra<T>, f: &Mat<T>) -> ForceType {
    let n = alg.dim();
    let pv = linalg::projector(alg.v_basis(), n);
    let pz = linalg::projector(alg.center_basis(), n);
    let tol = T::tol(FORCE_TOL) * scale_of(f);
    let block = |a: &Mat<T>, b: &Mat<T>| a.mul(f).mul(b).max_abs();
    let cross = block(&pz, &pv).max(block(&pv, &pz));
    let diag = block(&pv, &pv).max(block(&pz, &pz));
    if cross <= tol {
        ForceType::TypeI
    } else if diag <= tol {
        ForceType::TypeII
    } else {
        ForceType::Mixed
    }
}

/// `F(C(n)) = 0` and `F(z)` inside `ker j`, the constraints closedness forces
/// on type-I forces.
pub fn verify_central_constraints<T: Real>(alg: &MetricNilAlgebra<T>, f: &LorentzForce<T>) -> bool {
    let tol = T::tol(FORCE_TOL) * scale_of(f.matrix());
    let kills_commutator = alg.commutator_basis().iter().all(|c| linalg::max_abs(&f.apply(c)) <= tol);
    let lands_in_kerj = alg.center_basis().iter().all(|z| {
        let fz = f.apply(z);
        let off = linalg::sub(&fz, &alg.project_kerj(&fz));
        linalg::max_abs(&off) <= tol
    });
    kills_commutator && lands_in_kerj
}

/// Least-squares `Z` in `C(n)` with `F = j(Z)` on `v` and `F = 0` on `z`;
/// `None` when the relative residual exceeds [`EXACT_TOL`].
pub fn exactness_test<T: Real>(alg: &MetricNilAlgebra<T>, f: &Mat<T>) -> Option<Vec<T>> {
    let n = alg.dim();
    let fnorm = f.frobenius();
    let cb = alg.commutator_basis();
    let zhat = if cb.is_empty() || fnorm == T::zero() {
        linalg::zeros(n)
    } else {
        let ms: Vec<Mat<T>> = cb.iter().map(|c| exact_force_matrix(alg, c).expect("C(n) is central")).collect();
        let m = ms.len();
        let g = Mat::from_fn(m, m, |a, b| ms[a].inner(&ms[b]));
        let r: Vec<T> = ms.iter().map(|mc| f.inner(mc)).collect();
        let coef = linalg::solve(&g, &r)?;
        let mut z = linalg::zeros(n);
        for (c, &w) in cb.iter().zip(&coef) {
            linalg::axpy(w, c, &mut z);
        }
        z
    };
    let fit = exact_force_matrix(alg, &zhat).ok()?;
    let resid = f.sub(&fit).frobenius();
    if resid <= T::tol(EXACT_TOL) * fnorm {
        Some(zhat)
    } else {
        None
    }
}

/// `F_U = ad(U)^T - ad(U)` on the three-dimensional Heisenberg algebra, i.e.
/// `F_U(V + Z) = [V, U] + j(Z) U`.
pub fn type2_from_vector<T: Real>(alg: &MetricNilAlgebra<T>, u: &[T]) -> Result<LorentzForce<T>> {
    if alg.dim() != 3 || alg.dim_z() != 1 || alg.dim_v() != 2 {
        return Err(Error::Argument("type-II force from a vector is defined on H3 only".into()));
    }
    crate::error::check_len(3, u.len())?;
    if linalg::norm(&alg.project_z(u)) > T::tol(FORCE_TOL) * linalg::norm(u).max(T::one()) {
        return Err(Error::Argument("U must lie in v".into()));
    }
    let cols: Vec<Vec<T>> = (0..3)
        .map(|i| {
            let e = linalg::unit(3, i);
            linalg::sub(&alg.ad_star(u, &e), &alg.bracket_unchecked(u, &e))
        })
        .collect();
    LorentzForce::new(alg, Mat::from_columns(3, &cols))
}

/// `r phi F phi^{-1}` for an orthogonal automorphism `phi`.
pub fn conjugate_force<T: Real>(
    alg: &MetricNilAlgebra<T>,
    f: &LorentzForce<T>,
    phi: &Mat<T>,
    r: T,
) -> Result<LorentzForce<T>> {
    if !alg.is_orthogonal_automorphism(phi, T::tol(1e-10)) {
        return Err(Error::Argument("phi is not an orthogonal automorphism".into()));
    }
    let m = phi.mul(f.matrix()).mul(&phi.transpose()).scale(r);
    LorentzForce::new(alg, m)
}
