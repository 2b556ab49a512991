//! Metric 2-step nilpotent Lie algebras in an orthonormal basis.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Mat, RANK_TOL};
use crate::scalar::Real;

/// Number of sphere samples used when the center has dimension three or more.
pub const SPHERE_SAMPLES: usize = 10_000;

/// Point `exp(xi)` of the simply connected group, in exponential coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint<T> {
    pub xi: Vec<T>,
}

impl<T: Real> GroupPoint<T> {
    pub fn identity(dim: usize) -> Self {
        Self { xi: linalg::zeros(dim) }
    }

    pub fn new(xi: Vec<T>) -> Self {
        Self { xi }
    }

    pub fn inverse(&self) -> Self {
        Self { xi: self.xi.iter().map(|&x| -x).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Singularity {
    NonSingular,
    AlmostNonSingular,
    Singular,
}

/// Result of [`MetricNilAlgebra::classify_singularity`].
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityReport<T> {
    pub class: Singularity,
    /// `false` when the verdict rests on sampling the unit sphere of `z`.
    pub exhaustive: bool,
    /// Some central `Z` with `j(Z)` singular, when one was located.
    pub witness: Option<Vec<T>>,
    pub samples: usize,
}

/// Serializable algebra definition with 1-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraDef {
    pub dim: usize,
    /// `(i, j, k, value)` meaning `[e_i, e_j] += value * e_k`.
    pub brackets: Vec<(usize, usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct MetricNilAlgebra<T> {
    dim: usize,
    structure: Vec<T>,
    center_basis: Vec<Vec<T>>,
    v_basis: Vec<Vec<T>>,
    commutator_basis: Vec<Vec<T>>,
    kerj_basis: Vec<Vec<T>>,
    j_center: Vec<Mat<T>>,
}

impl<T: Real> MetricNilAlgebra<T> {
    /// Builds the algebra from 0-based bracket entries `[e_i, e_j] = v e_k`
    /// (antisymmetry is implied) and an optional positive definite metric.
    pub fn new(dim: usize, brackets: &[(usize, usize, usize, T)], metric: Option<&Mat<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("dimension must be positive".into()));
        }
        let mut c = vec![T::zero(); dim * dim * dim];
        let mut set = vec![false; dim * dim * dim];
        let idx = |i: usize, j: usize, k: usize| (i * dim + j) * dim + k;
        for &(i, j, k, v) in brackets {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::Argument(format!("bracket index out of range: ({i}, {j}, {k})")));
            }
            if !v.is_finite() {
                return Err(Error::Argument("non-finite structure constant".into()));
            }
            if i == j {
                if v != T::zero() {
                    return Err(Error::Argument(format!("[e{i}, e{i}] must vanish")));
                }
                continue;
            }
            for (a, b, val) in [(i, j, v), (j, i, -v)] {
                let p = idx(a, b, k);
                if set[p] && (c[p] - val).abs() > T::tol(1e-12) * val.abs().max(T::one()) {
                    return Err(Error::Argument(format!("conflicting entries for bracket ({i}, {j}) -> {k}")));
                }
                c[p] = val;
                set[p] = true;
            }
        }
        let structure = match metric {
            None => c,
            Some(g) => orthonormalize(dim, &c, g)?,
        };
        Self::from_structure(dim, structure)
    }

    /// Builds the algebra from a full table `c[(i*dim + j)*dim + k]` that is
    /// already expressed in an orthonormal basis.
    pub fn from_structure(dim: usize, structure: Vec<T>) -> Result<Self> {
        check_len(dim * dim * dim, structure.len())?;
        let at = |i: usize, j: usize, k: usize| structure[(i * dim + j) * dim + k];
        let scale = structure.iter().fold(T::one(), |m, &x| m.max(x.abs()));
        let tol = T::tol(1e-12) * scale;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    if (at(i, j, k) + at(j, i, k)).abs() > tol {
                        return Err(Error::Argument("structure constants are not antisymmetric".into()));
                    }
                }
            }
        }
        // [[e_i, e_j], e_l] = sum_k c_ijk c_klm
        let tol2 = T::tol(1e-12) * scale * scale;
        for i in 0..dim {
            for j in (i + 1)..dim {
                for l in 0..dim {
                    for m in 0..dim {
                        let s = (0..dim).fold(T::zero(), |acc, k| acc + at(i, j, k) * at(k, l, m));
                        if s.abs() > tol2 {
                            return Err(Error::Argument("algebra is not 2-step nilpotent".into()));
                        }
                    }
                }
            }
        }

        // center: X with [X, e_j] = 0 for all j
        let ad_rows = Mat::from_fn(dim * dim, dim, |r, i| at(i, r / dim, r % dim));
        let center_basis = linalg::null_space(&ad_rows);
        let v_basis = linalg::complement(&center_basis, dim);
        let brackets: Vec<Vec<T>> = (0..dim)
            .flat_map(|i| ((i + 1)..dim).map(move |j| (i, j)))
            .map(|(i, j)| (0..dim).map(|k| at(i, j, k)).collect())
            .collect();
        let commutator_basis = linalg::span_basis(&brackets, dim);
        let mut stacked = commutator_basis.clone();
        stacked.extend(v_basis.iter().cloned());
        let kerj_basis = if stacked.is_empty() {
            center_basis.clone()
        } else {
            linalg::null_space(&Mat::from_rows(&stacked).expect("equal lengths"))
        };

        let mut alg =
            Self { dim, structure, center_basis, v_basis, commutator_basis, kerj_basis, j_center: Vec::new() };
        alg.j_center = alg.center_basis.iter().map(|z| alg.j_matrix_unchecked(z)).collect();
        Ok(alg)
    }

    /// Builds the algebra from a serialized definition.
    pub fn from_def(def: &AlgebraDef) -> Result<Self> {
        let mut br = Vec::with_capacity(def.brackets.len());
        for &(i, j, k, v) in &def.brackets {
            if i == 0 || j == 0 || k == 0 {
                return Err(Error::Argument("bracket indices are 1-based".into()));
            }
            br.push((i - 1, j - 1, k - 1, T::c(v)));
        }
        let metric = match &def.metric {
            None => None,
            Some(rows) => {
                let m = Mat::from_rows(&rows.iter().map(|r| r.iter().map(|&x| T::c(x)).collect()).collect::<Vec<_>>())
                    .ok_or_else(|| Error::Argument("ragged metric matrix".into()))?;
                Some(m)
            }
        };
        Self::new(def.dim, &br, metric.as_ref())
    }

    /// Definition of this algebra in its internal orthonormal basis.
    pub fn to_def(&self) -> AlgebraDef {
        let mut brackets = Vec::new();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                for k in 0..self.dim {
                    let v = self.c(i, j, k);
                    if v != T::zero() {
                        brackets.push((i + 1, j + 1, k + 1, v.to_f64_lossy()));
                    }
                }
            }
        }
        AlgebraDef { dim: self.dim, brackets, metric: None }
    }

    /// Heisenberg algebra of dimension `2n+1`, basis `X1, Y1, ..., Xn, Yn, Z`.
    pub fn heisenberg(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Argument("heisenberg(n) needs n >= 1".into()));
        }
        let z = 2 * n;
        let br: Vec<_> = (0..n).map(|i| (2 * i, 2 * i + 1, z, T::one())).collect();
        Self::new(2 * n + 1, &br, None)
    }

    /// Quaternionic Heisenberg algebra of dimension `4n+3`, basis
    /// `X1, Y1, V1, W1, ..., Xn, Yn, Vn, Wn, Z1, Z2, Z3`.
    pub fn quaternionic(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Argument("quaternionic(n) needs n >= 1".into()));
        }
        let (z1, z2, z3) = (4 * n, 4 * n + 1, 4 * n + 2);
        let one = T::one();
        let mut br = Vec::new();
        for i in 0..n {
            let (x, y, v, w) = (4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3);
            br.extend([
                (x, y, z1, one),
                (x, v, z2, one),
                (x, w, z3, one),
                (v, w, z1, one),
                (y, w, z2, -one),
                (y, v, z3, one),
            ]);
        }
        Self::new(4 * n + 3, &br, None)
    }

    /// Direct product with an abelian factor of dimension `extra`.
    pub fn with_abelian_factor(&self, extra: usize) -> Self {
        let d = self.dim + extra;
        let mut s = vec![T::zero(); d * d * d];
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    s[(i * d + j) * d + k] = self.c(i, j, k);
                }
            }
        }
        Self::from_structure(d, s).expect("product of 2-step algebras is 2-step")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Structure constant `c_ij^k`.
    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> T {
        self.structure[(i * self.dim + j) * self.dim + k]
    }

    pub fn structure(&self) -> &[T] {
        &self.structure
    }

    pub fn center_basis(&self) -> &[Vec<T>] {
        &self.center_basis
    }

    pub fn v_basis(&self) -> &[Vec<T>] {
        &self.v_basis
    }

    pub fn commutator_basis(&self) -> &[Vec<T>] {
        &self.commutator_basis
    }

    pub fn kerj_basis(&self) -> &[Vec<T>] {
        &self.kerj_basis
    }

    pub fn dim_v(&self) -> usize {
        self.v_basis.len()
    }

    pub fn dim_z(&self) -> usize {
        self.center_basis.len()
    }

    /// `(C(n) basis, ker j basis)`
    pub fn decompose_center(&self) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
        (self.commutator_basis.clone(), self.kerj_basis.clone())
    }

    pub fn bracket(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        check_len(self.dim, x.len())?;
        check_len(self.dim, y.len())?;
        Ok(self.bracket_unchecked(x, y))
    }

    pub(crate) fn bracket_unchecked(&self, x: &[T], y: &[T]) -> Vec<T> {
        let d = self.dim;
        let mut out = linalg::zeros(d);
        for i in 0..d {
            if x[i] == T::zero() {
                continue;
            }
            for j in 0..d {
                let w = x[i] * y[j];
                if w == T::zero() {
                    continue;
                }
                let row = &self.structure[(i * d + j) * d..(i * d + j + 1) * d];
                for k in 0..d {
                    out[k] = out[k] + w * row[k];
                }
            }
        }
        out
    }

    /// `ad(x)^* y`, defined by `<ad(x)^* y, w> = <y, [x, w]>`.
    pub fn ad_star(&self, x: &[T], y: &[T]) -> Vec<T> {
        let d = self.dim;
        let mut out = linalg::zeros(d);
        for i in 0..d {
            if x[i] == T::zero() {
                continue;
            }
            for w in 0..d {
                let row = &self.structure[(i * d + w) * d..(i * d + w + 1) * d];
                out[w] = out[w] + x[i] * linalg::dot(row, y);
            }
        }
        out
    }

    /// Product in exponential coordinates: `xi + eta + [xi, eta]/2`.
    pub fn group_mul(&self, p: &GroupPoint<T>, q: &GroupPoint<T>) -> Result<GroupPoint<T>> {
        let b = self.bracket(&p.xi, &q.xi)?;
        let half = T::c(0.5);
        Ok(GroupPoint { xi: (0..self.dim).map(|k| p.xi[k] + q.xi[k] + half * b[k]).collect() })
    }

    /// Orthogonal projection onto `z`.
    pub fn project_z(&self, x: &[T]) -> Vec<T> {
        linalg::project(&self.center_basis, x)
    }

    /// Orthogonal projection onto `v`.
    pub fn project_v(&self, x: &[T]) -> Vec<T> {
        linalg::project(&self.v_basis, x)
    }

    pub fn project_commutator(&self, x: &[T]) -> Vec<T> {
        linalg::project(&self.commutator_basis, x)
    }

    pub fn project_kerj(&self, x: &[T]) -> Vec<T> {
        linalg::project(&self.kerj_basis, x)
    }

    /// Coefficients of `x` along `v_basis`.
    pub fn v_coords(&self, x: &[T]) -> Vec<T> {
        self.v_basis.iter().map(|b| linalg::dot(b, x)).collect()
    }

    /// Coefficients of `x` along `center_basis`.
    pub fn z_coords(&self, x: &[T]) -> Vec<T> {
        self.center_basis.iter().map(|b| linalg::dot(b, x)).collect()
    }

    pub fn from_v_coords(&self, c: &[T]) -> Vec<T> {
        combine(&self.v_basis, c, self.dim)
    }

    pub fn from_z_coords(&self, c: &[T]) -> Vec<T> {
        combine(&self.center_basis, c, self.dim)
    }

    /// Whether `x` lies in `z` up to the rank tolerance.
    pub fn in_center(&self, x: &[T]) -> bool {
        let off = linalg::norm(&self.project_v(x));
        off <= T::tol(RANK_TOL) * linalg::norm(x).max(T::one())
    }

    /// `j(Z)` as a matrix in `v_basis`.
    pub fn j_map(&self, z: &[T]) -> Result<Mat<T>> {
        check_len(self.dim, z.len())?;
        if !self.in_center(z) {
            return Err(Error::Argument("j(Z) needs Z in the center".into()));
        }
        Ok(self.j_matrix_unchecked(z))
    }

    fn j_matrix_unchecked(&self, z: &[T]) -> Mat<T> {
        let n = self.v_basis.len();
        Mat::from_fn(n, n, |a, b| linalg::dot(z, &self.bracket_unchecked(&self.v_basis[b], &self.v_basis[a])))
    }

    /// `j(Z) V` in full coordinates; the `z` part of `V` is ignored.
    pub fn j_apply(&self, z: &[T], v: &[T]) -> Vec<T> {
        self.ad_star(v, z)
    }

    /// `j` of a central vector given by its `center_basis` coefficients.
    pub fn j_from_z_coords(&self, zc: &[T]) -> Mat<T> {
        let n = self.v_basis.len();
        let mut m = Mat::zeros(n, n);
        for (a, &w) in zc.iter().enumerate() {
            if w != T::zero() {
                m = m.add(&self.j_center[a].scale(w));
            }
        }
        m
    }

    pub fn classify_singularity(&self) -> SingularityReport<T> {
        let nv = self.dim_v();
        let nz = self.dim_z();
        let report = |class, exhaustive, witness, samples| SingularityReport { class, exhaustive, witness, samples };
        if nv == 0 {
            // j(Z) acts on the zero space and is trivially invertible
            return report(Singularity::NonSingular, true, None, 0);
        }
        if nv % 2 == 1 {
            return report(Singularity::Singular, true, self.center_basis.first().cloned(), 0);
        }
        match nz {
            1 => {
                let (s, _) = linalg::svd_right(&self.j_center[0]);
                let smax = s[0];
                if smax <= T::min_positive_value() || s[nv - 1] <= T::tol(RANK_TOL) * smax {
                    report(Singularity::Singular, true, Some(self.center_basis[0].clone()), 0)
                } else {
                    report(Singularity::NonSingular, true, None, 0)
                }
            }
            2 => self.classify_binary_form(),
            _ => self.classify_by_sampling(),
        }
    }

    /// Exact test for `dim z = 2`: `Pf j(a Z1 + b Z2)` is a binary form of
    /// degree `dim v / 2` whose real projective roots are counted by Sturm.
    fn classify_binary_form(&self) -> SingularityReport<T> {
        let m = self.dim_v() / 2;
        let pf_at = |a: T, b: T| linalg::pfaffian(&self.j_from_z_coords(&[a, b]));
        let nodes: Vec<T> = (0..=m)
            .map(|l| {
                let th = T::PI() * (T::from_usize_lossy(l) + T::c(0.5)) / T::from_usize_lossy(m + 1);
                th.cos()
            })
            .collect();
        let vander = Mat::from_fn(m + 1, m + 1, |r, c| nodes[r].powi(c as i32));
        let vals: Vec<T> = nodes.iter().map(|&s| pf_at(T::one(), s)).collect();
        let coeffs = linalg::solve(&vander, &vals).unwrap_or_else(|| vec![T::zero(); m + 1]);
        let jscale = self.j_center[0].frobenius().max(self.j_center[1].frobenius());
        let cmax = linalg::max_abs(&coeffs);
        let mk = |class, witness| SingularityReport { class, exhaustive: true, witness, samples: 0 };
        if cmax <= T::tol(RANK_TOL) * jscale.powi(m as i32) {
            return mk(Singularity::Singular, self.center_basis.first().cloned());
        }
        let tol = T::tol(1e-9) * cmax;
        // leading coefficient zero means the direction b-axis is a root
        if coeffs[m].abs() <= tol {
            return mk(Singularity::AlmostNonSingular, Some(self.center_basis[1].clone()));
        }
        if real_root_count(&coeffs, tol) > 0 {
            mk(Singularity::AlmostNonSingular, None)
        } else {
            mk(Singularity::NonSingular, None)
        }
    }

    /// Quasi-random sampling of the unit sphere of `z`; sign changes of the
    /// Pfaffian certify a singular direction.
    fn classify_by_sampling(&self) -> SingularityReport<T> {
        let nz = self.dim_z();
        let m = self.dim_v() / 2;
        let primes = first_primes(2 * nz.div_ceil(2));
        let jscale = self.j_center.iter().fold(T::zero(), |acc, j| acc.max(j.frobenius()));
        let cut = T::tol(RANK_TOL) * jscale.powi(m as i32);
        let mut pos = false;
        let mut neg = false;
        let mut zero_dir: Option<Vec<T>> = None;
        let mut nonzero = false;
        for s in 0..SPHERE_SAMPLES {
            let mut g = Vec::with_capacity(nz + 1);
            for pair in 0..nz.div_ceil(2) {
                let u1 = radical_inverse::<T>(s + 1, primes[2 * pair]);
                let u2 = radical_inverse::<T>(s + 1, primes[2 * pair + 1]);
                let r = (-T::c(2.0) * u1.ln()).sqrt();
                let th = T::c(2.0) * T::PI() * u2;
                g.push(r * th.cos());
                g.push(r * th.sin());
            }
            g.truncate(nz);
            let ng = linalg::norm(&g);
            if ng <= T::min_positive_value() {
                continue;
            }
            let zc = linalg::scale(T::one() / ng, &g);
            let pf = linalg::pfaffian(&self.j_from_z_coords(&zc));
            if pf.abs() <= cut {
                if zero_dir.is_none() {
                    zero_dir = Some(self.from_z_coords(&zc));
                }
            } else {
                nonzero = true;
                if pf > T::zero() {
                    pos = true;
                } else {
                    neg = true;
                }
            }
        }
        let class = if !nonzero {
            Singularity::Singular
        } else if zero_dir.is_some() || (pos && neg) {
            Singularity::AlmostNonSingular
        } else {
            Singularity::NonSingular
        };
        SingularityReport { class, exhaustive: false, witness: zero_dir, samples: SPHERE_SAMPLES }
    }

    /// `j(Z)^2 = -|Z|^2 Id` for every central `Z`, checked on basis pairs.
    pub fn is_h_type(&self) -> bool {
        let n = self.dim_v();
        if n == 0 {
            return true;
        }
        let id = Mat::<T>::identity(n);
        let tol = T::tol(1e-10);
        for a in 0..self.j_center.len() {
            for b in a..self.j_center.len() {
                let ja = &self.j_center[a];
                let jb = &self.j_center[b];
                let anti = ja.mul(jb).add(&jb.mul(ja));
                let want = if a == b { id.scale(-T::c(2.0)) } else { Mat::zeros(n, n) };
                if anti.sub(&want).max_abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Levi-Civita connection on left-invariant fields:
    /// `(1/2)([X,Y] - ad(X)^* Y - ad(Y)^* X)`.
    pub fn levi_civita(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        check_len(self.dim, x.len())?;
        check_len(self.dim, y.len())?;
        let b = self.bracket_unchecked(x, y);
        let a1 = self.ad_star(x, y);
        let a2 = self.ad_star(y, x);
        let half = T::c(0.5);
        Ok((0..self.dim).map(|k| half * (b[k] - a1[k] - a2[k])).collect())
    }

    /// Whether `phi` (columns are images of basis vectors) preserves the
    /// bracket and the metric to `tol`.
    pub fn is_orthogonal_automorphism(&self, phi: &Mat<T>, tol: T) -> bool {
        if phi.rows() != self.dim || phi.cols() != self.dim {
            return false;
        }
        if phi.orthogonality_defect() > tol {
            return false;
        }
        let cols: Vec<Vec<T>> = (0..self.dim).map(|j| phi.column(j)).collect();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let lhs = self.bracket_unchecked(&cols[i], &cols[j]);
                let eij: Vec<T> = (0..self.dim).map(|k| self.c(i, j, k)).collect();
                let rhs = phi.mul_vec(&eij);
                if linalg::max_abs(&linalg::sub(&lhs, &rhs)) > tol {
                    return false;
                }
            }
        }
        true
    }
}

fn combine<T: Real>(basis: &[Vec<T>], c: &[T], dim: usize) -> Vec<T> {
    let mut out = linalg::zeros(dim);
    for (b, &w) in basis.iter().zip(c) {
        linalg::axpy(w, b, &mut out);
    }
    out
}

/// Re-expresses structure constants in a `g`-orthonormal basis built by
/// Gram-Schmidt in index order (`f_a` is a combination of `e_1..e_a`).
fn orthonormalize<T: Real>(dim: usize, c: &[T], g: &Mat<T>) -> Result<Vec<T>> {
    if g.rows() != dim || g.cols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: g.rows() });
    }
    let gmax = g.max_abs();
    for i in 0..dim {
        for j in 0..dim {
            if (g[(i, j)] - g[(j, i)]).abs() > T::tol(1e-12) * gmax {
                return Err(Error::Argument("metric matrix is not symmetric".into()));
            }
        }
    }
    // Cholesky g = L L^T; the new basis rows are B = L^{-1}
    let mut l = Mat::<T>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..=i {
            let mut s = g[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= T::tol(1e-14) * gmax {
                    return Err(Error::Argument("metric matrix is not positive definite".into()));
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    let mut b = Mat::<T>::zeros(dim, dim);
    for col in 0..dim {
        for i in 0..dim {
            let mut s = if i == col { T::one() } else { T::zero() };
            for k in 0..i {
                s = s - l[(i, k)] * b[(k, col)];
            }
            b[(i, col)] = s / l[(i, i)];
        }
    }
    // e_k = sum_c L[k][c] f_c, since f = L^{-1} e
    let at = |i: usize, j: usize, k: usize| c[(i * dim + j) * dim + k];
    let mut out = vec![T::zero(); dim * dim * dim];
    for a in 0..dim {
        for bb in 0..dim {
            let mut ek = vec![T::zero(); dim];
            for i in 0..=a {
                for j in 0..=bb {
                    let w = b[(a, i)] * b[(bb, j)];
                    if w == T::zero() {
                        continue;
                    }
                    for (k, e) in ek.iter_mut().enumerate() {
                        *e = *e + w * at(i, j, k);
                    }
                }
            }
            for cc in 0..dim {
                let v = (0..dim).fold(T::zero(), |acc, k| acc + ek[k] * l[(k, cc)]);
                out[(a * dim + bb) * dim + cc] = v;
            }
        }
    }
    Ok(out)
}

fn first_primes(n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    let mut p = 2;
    while out.len() < n {
        if (2..p).take_while(|d| d * d <= p).all(|d| p % d != 0) {
            out.push(p);
        }
        p += 1;
    }
    out
}

fn radical_inverse<T: Real>(mut i: usize, base: usize) -> T {
    let b = T::from_usize_lossy(base);
    let mut f = T::one() / b;
    let mut r = T::zero();
    while i > 0 {
        r = r + f * T::from_usize_lossy(i % base);
        i /= base;
        f = f / b;
    }
    r
}

fn trim<T: Real>(mut p: Vec<T>, tol: T) -> Vec<T> {
    while p.len() > 1 && p.last().is_some_and(|c| c.abs() <= tol) {
        p.pop();
    }
    p
}

fn poly_rem<T: Real>(a: &[T], b: &[T], tol: T) -> Vec<T> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db];
    while r.len() > db && r.len() > 1 {
        let dr = r.len() - 1;
        let f = r[dr] / lead;
        for i in 0..=db {
            r[dr - db + i] = r[dr - db + i] - f * b[i];
        }
        r.pop();
    }
    if db == 0 {
        return vec![T::zero()];
    }
    trim(r, tol)
}

/// Number of distinct real roots of `p` (ascending coefficients) by a Sturm
/// chain; remainders below `tol` relative to the chain scale count as zero.
fn real_root_count<T: Real>(p: &[T], tol: T) -> usize {
    let p0 = trim(p.to_vec(), tol);
    if p0.len() <= 1 {
        return 0;
    }
    let p1: Vec<T> = (1..p0.len()).map(|i| p0[i] * T::from_usize_lossy(i)).collect();
    let mut chain = vec![p0, trim(p1, tol)];
    loop {
        let n = chain.len();
        if chain[n - 1].len() <= 1 {
            break;
        }
        let scale = linalg::max_abs(&chain[n - 2]).max(linalg::max_abs(&chain[n - 1]));
        let r = poly_rem(&chain[n - 2], &chain[n - 1], T::tol(1e-9) * scale);
        if r.len() == 1 && r[0].abs() <= T::tol(1e-9) * scale {
            break;
        }
        chain.push(r.into_iter().map(|c| -c).collect());
    }
    let sign_changes = |signs: Vec<T>| {
        let nz: Vec<T> = signs.into_iter().filter(|s| *s != T::zero()).collect();
        nz.windows(2).filter(|w| (w[0] > T::zero()) != (w[1] > T::zero())).count()
    };
    let at_pos: Vec<T> = chain.iter().map(|q| q[q.len() - 1].signum()).collect();
    let at_neg: Vec<T> = chain
        .iter()
        .map(|q| {
            let d = q.len() - 1;
            let s = q[d].signum();
            if d % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .collect();
    sign_changes(at_neg).saturating_sub(sign_changes(at_pos))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist;

    fn unit(n: usize, i: usize) -> Vec<f64> {
        linalg::unit(n, i)
    }

    fn h3() -> MetricNilAlgebra<f64> {
        MetricNilAlgebra::heisenberg(1).unwrap()
    }

    #[test]
    fn heisenberg_bracket_and_j() {
        let a = h3();
        assert_eq!(a.bracket(&unit(3, 0), &unit(3, 1)).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(a.bracket(&unit(3, 0), &unit(3, 0)).unwrap(), vec![0.0; 3]);
        let j = a.j_map(&unit(3, 2)).unwrap();
        assert_eq!(j.to_rows(), vec![vec![0.0, -1.0], vec![1.0, 0.0]]);
        assert_eq!(a.j_map(&[0.0; 3]).unwrap().max_abs(), 0.0);
        assert!(a.j_map(&unit(3, 0)).is_err());
        assert!(a.bracket(&[1.0], &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn h5_j_is_two_rotation_blocks() {
        let a = MetricNilAlgebra::<f64>::heisenberg(2).unwrap();
        let j = a.j_map(&unit(5, 4)).unwrap();
        let want = vec![
            vec![0.0, -1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, -1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        assert_eq!(j.to_rows(), want);
    }

    #[test]
    fn quaternionic_brackets() {
        let a = MetricNilAlgebra::<f64>::quaternionic(1).unwrap();
        assert_eq!(a.dim(), 7);
        assert_eq!(a.dim_z(), 3);
        assert_eq!(a.bracket(&unit(7, 0), &unit(7, 2)).unwrap(), unit(7, 5));
        let (c, k) = a.decompose_center();
        assert_eq!(c.len(), 3);
        assert!(k.is_empty());
        assert!(a.is_h_type());
        assert_eq!(a.classify_singularity().class, Singularity::NonSingular);
    }

    #[test]
    fn group_law() {
        let a = h3();
        let p = GroupPoint::new(unit(3, 0));
        let q = GroupPoint::new(unit(3, 1));
        assert_eq!(a.group_mul(&p, &q).unwrap().xi, vec![1.0, 1.0, 0.5]);
        let e = GroupPoint::identity(3);
        assert_eq!(a.group_mul(&e, &q).unwrap(), q);
        let r = GroupPoint::new(vec![0.3, -1.2, 2.0]);
        assert!(a.group_mul(&r, &r.inverse()).unwrap().xi.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn center_split_with_abelian_factor() {
        let a = h3().with_abelian_factor(1);
        let (c, k) = a.decompose_center();
        assert_eq!(c.len(), 1);
        assert!(dist(&c[0], &unit(4, 2)) < 1e-14);
        assert_eq!(k.len(), 1);
        assert!(dist(&k[0], &unit(4, 3)) < 1e-14);
        assert!(!a.is_h_type());
        let ab = MetricNilAlgebra::<f64>::new(3, &[], None).unwrap();
        assert_eq!(ab.dim_v(), 0);
        assert!(ab.is_h_type());
        assert_eq!(ab.j_map(&unit(3, 0)).unwrap().rows(), 0);
    }

    #[test]
    fn rescaled_metric_breaks_h_type() {
        let g = Mat::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 4.0]]).unwrap();
        let a: MetricNilAlgebra<f64> = MetricNilAlgebra::new(3, &[(0, 1, 2, 1.0)], Some(&g)).unwrap();
        assert!((a.c(0, 1, 2) - 2.0).abs() < 1e-15);
        assert!(!a.is_h_type());
        assert!(h3().is_h_type());
    }

    #[test]
    fn non_orthogonal_metric_is_orthonormalized() {
        let g = Mat::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let a: MetricNilAlgebra<f64> = MetricNilAlgebra::new(3, &[(0, 1, 2, 1.0)], Some(&g)).unwrap();
        // the area form of g on v has density sqrt(det g_v)
        let expect = 1.0 / (2.0f64 - 0.25).sqrt();
        assert!((a.c(0, 1, 2).abs() - expect).abs() < 1e-14);
        let bad = Mat::from_rows(&[vec![1.0, 2.0, 0.0], vec![2.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(MetricNilAlgebra::new(3, &[(0, 1, 2, 1.0)], Some(&bad)).is_err());
    }

    #[test]
    fn rejects_non_two_step() {
        // [e1,e2]=e3, [e1,e3]=e4 is 3-step
        assert!(MetricNilAlgebra::<f64>::new(4, &[(0, 1, 2, 1.0), (0, 2, 3, 1.0)], None).is_err());
        assert!(MetricNilAlgebra::<f64>::heisenberg(0).is_err());
    }

    #[test]
    fn singularity_classes() {
        assert_eq!(h3().classify_singularity().class, Singularity::NonSingular);
        // v = e1..e4, z = e5,e6: [e1,e2]=[e3,e4]=e5, [e1,e3]=e6 gives Pf = a^2
        let a = MetricNilAlgebra::<f64>::new(6, &[(0, 1, 4, 1.0), (2, 3, 4, 1.0), (0, 2, 5, 1.0)], None).unwrap();
        let r = a.classify_singularity();
        assert_eq!(r.class, Singularity::AlmostNonSingular);
        assert!(r.exhaustive);
        // adding [e2,e4]=e6 gives Pf = a^2 - b^2 with simple roots
        let b =
            MetricNilAlgebra::<f64>::new(6, &[(0, 1, 4, 1.0), (2, 3, 4, 1.0), (0, 2, 5, 1.0), (1, 3, 5, 1.0)], None)
                .unwrap();
        assert_eq!(b.classify_singularity().class, Singularity::AlmostNonSingular);
        // [e1,e3]=e6, [e2,e4]=-e6 gives Pf = a^2 + b^2
        let c =
            MetricNilAlgebra::<f64>::new(6, &[(0, 1, 4, 1.0), (2, 3, 4, 1.0), (0, 2, 5, 1.0), (1, 3, 5, -1.0)], None)
                .unwrap();
        assert!(c.is_h_type());
        assert_eq!(c.classify_singularity().class, Singularity::NonSingular);
        // odd dimensional v
        let d = MetricNilAlgebra::<f64>::new(5, &[(0, 1, 3, 1.0), (1, 2, 4, 1.0)], None).unwrap();
        assert_eq!(d.dim_v(), 3);
        assert_eq!(d.classify_singularity().class, Singularity::Singular);
        // H3 x R has ker j = R: j(e4) = 0
        let e = h3().with_abelian_factor(1);
        assert_eq!(e.classify_singularity().class, Singularity::AlmostNonSingular);
    }

    #[test]
    fn sampled_classification_of_large_center() {
        // H3 x R^2: dim z = 3, j vanishes on a 2-plane
        let a = h3().with_abelian_factor(2);
        let r = a.classify_singularity();
        assert_eq!(r.class, Singularity::AlmostNonSingular);
        assert!(!r.exhaustive);
    }

    #[test]
    fn levi_civita_rules() {
        let a = h3();
        let z = unit(3, 2);
        assert_eq!(a.levi_civita(&z, &z).unwrap(), vec![0.0; 3]);
        let r = a.levi_civita(&z, &unit(3, 0)).unwrap();
        assert!(dist(&r, &[0.0, -0.5, 0.0]) < 1e-15);
        let x = vec![0.7, -0.2, 0.0];
        assert!(linalg::norm(&a.levi_civita(&x, &x).unwrap()) < 1e-15);
    }

    #[test]
    fn def_round_trip() {
        let a = MetricNilAlgebra::<f64>::quaternionic(1).unwrap();
        let def = a.to_def();
        let json = serde_json::to_string(&def).unwrap();
        let back: AlgebraDef = serde_json::from_str(&json).unwrap();
        let b = MetricNilAlgebra::<f64>::from_def(&back).unwrap();
        assert_eq!(a.structure(), b.structure());
        let parsed: AlgebraDef = serde_json::from_str(r#"{"dim":3,"brackets":[[1,2,3,1]]}"#).unwrap();
        let h = MetricNilAlgebra::<f64>::from_def(&parsed).unwrap();
        assert_eq!(h.structure(), h3().structure());
    }

    #[test]
    fn sturm_counts() {
        // (s-1)(s+2) = s^2 + s - 2
        assert_eq!(real_root_count(&[-2.0, 1.0, 1.0], 1e-12), 2);
        assert_eq!(real_root_count(&[1.0, 0.0, 1.0], 1e-12), 0);
        // double root s^2
        assert_eq!(real_root_count(&[0.0, 0.0, 1.0], 1e-12), 1);
        assert_eq!(real_root_count(&[1.0, -2.0, 1.0], 1e-12), 1);
    }
}
