//! Small dense linear algebra, generic over [`Real`].
//!
//! Every matrix in this crate is at most a few dozen rows, so the routines
//! favour accuracy and simplicity (Jacobi-type iterations) over blocking.

use std::ops::{Index, IndexMut};

use crate::scalar::Real;

/// Relative cutoff under which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-10;

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<T: Real>(s: T, a: &[T]) -> Vec<T> {
    a.iter().map(|&x| s * x).collect()
}

/// `y += s * x`
pub fn axpy<T: Real>(s: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + s * xi;
    }
}

pub fn zeros<T: Real>(n: usize) -> Vec<T> {
    vec![T::zero(); n]
}

pub fn unit<T: Real>(n: usize, i: usize) -> Vec<T> {
    let mut e = zeros(n);
    e[i] = T::one();
    e
}

pub fn max_abs<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

pub fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    norm(&sub(a, b))
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from rows; returns `None` when rows are ragged.
    pub fn from_rows(rows: &[Vec<T>]) -> Option<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return None;
        }
        Some(Self::from_fn(r, c, |i, j| rows[i][j]))
    }

    /// Matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_columns(rows: usize, cols: &[Vec<T>]) -> Self {
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product shape");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "matrix-vector shape");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| s * x).collect() }
    }

    pub fn frobenius(&self) -> T {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> T {
        max_abs(&self.data)
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &Self) -> T {
        dot(&self.data, &other.data)
    }

    /// Largest entry of `|A + A^T|`.
    pub fn skew_defect(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                m = m.max((self[(i, j)] + self[(j, i)]).abs());
            }
        }
        m
    }

    /// `max |A^T A - I|`
    pub fn orthogonality_defect(&self) -> T {
        self.transpose().mul(self).sub(&Self::identity(self.cols)).max_abs()
    }

    /// Conjugation `P^T A P` for a basis matrix `P` (columns).
    pub fn restrict(&self, basis: &Self) -> Self {
        basis.transpose().mul(self).mul(basis)
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Singular values (descending) and right singular vectors (columns of
/// `v`) of `a`, by one-sided Jacobi rotations.
pub fn svd_right<T: Real>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    let m = a.rows();
    let n = a.cols();
    let mut u = a.clone();
    let mut v = Mat::<T>::identity(n);
    let eps = T::epsilon();

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = T::zero();
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    alpha = alpha + up * up;
                    beta = beta + uq * uq;
                    gamma = gamma + up * uq;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(T, usize)> = (0..n).map(|j| (norm(&u.column(j)), j)).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let sigmas = order.iter().map(|&(s, _)| s).collect();
    let v_sorted = Mat::from_fn(n, n, |i, j| v[(i, order[j].1)]);
    (sigmas, v_sorted)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues ascending; eigenvectors are the columns of the second value.
pub fn sym_eigen<T: Real>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Mat::<T>::identity(n);
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + m[(p, q)] * m[(p, q)];
            }
        }
        if off <= T::min_positive_value() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<(T, usize)> = (0..n).map(|i| (m[(i, i)], i)).collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let vals = order.iter().map(|&(l, _)| l).collect();
    let vecs = Mat::from_fn(n, n, |i, j| v[(i, order[j].1)]);
    (vals, vecs)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve<T: Real>(a: &Mat<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return None;
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.max_abs();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| m[(i, k)].abs().partial_cmp(&m[(j, k)].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if m[(piv, k)].abs() <= T::epsilon() * scale {
            return None;
        }
        if piv != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
            x.swap(k, piv);
        }
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                m[(i, j)] = m[(i, j)] - f * m[(k, j)];
            }
            x[i] = x[i] - f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n {
            s = s - m[(k, j)] * x[j];
        }
        x[k] = s / m[(k, k)];
    }
    Some(x)
}

/// Pfaffian of a skew-symmetric matrix (Parlett-Reid elimination with
/// pivoting). Zero for odd order; one for the empty matrix.
pub fn pfaffian<T: Real>(a: &Mat<T>) -> T {
    let n = a.rows();
    if n % 2 == 1 {
        return T::zero();
    }
    let mut m = a.clone();
    let mut pf = T::one();
    let mut k = 0;
    while k + 1 < n {
        let kp = ((k + 1)..n)
            .max_by(|&i, &j| m[(i, k)].abs().partial_cmp(&m[(j, k)].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(k + 1);
        if kp != k + 1 {
            for j in 0..n {
                let tmp = m[(k + 1, j)];
                m[(k + 1, j)] = m[(kp, j)];
                m[(kp, j)] = tmp;
            }
            for i in 0..n {
                let tmp = m[(i, k + 1)];
                m[(i, k + 1)] = m[(i, kp)];
                m[(i, kp)] = tmp;
            }
            pf = -pf;
        }
        let pivot = m[(k, k + 1)];
        if pivot == T::zero() {
            return T::zero();
        }
        pf = pf * pivot;
        if k + 2 < n {
            let tau: Vec<T> = ((k + 2)..n).map(|j| m[(k, j)] / pivot).collect();
            let col: Vec<T> = ((k + 2)..n).map(|i| m[(i, k + 1)]).collect();
            for (ii, i) in ((k + 2)..n).enumerate() {
                for (jj, j) in ((k + 2)..n).enumerate() {
                    m[(i, j)] = m[(i, j)] + tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
        k += 2;
    }
    pf
}

/// Orthogonal projector onto the span of an orthonormal basis.
pub fn projector<T: Real>(basis: &[Vec<T>], n: usize) -> Mat<T> {
    let mut p = Mat::zeros(n, n);
    for b in basis {
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] = p[(i, j)] + b[i] * b[j];
            }
        }
    }
    p
}

/// Orthonormal basis of the span of `vectors` (all of length `n`), in the
/// canonical form produced by [`canonicalize`].
pub fn span_basis<T: Real>(vectors: &[Vec<T>], n: usize) -> Vec<Vec<T>> {
    if vectors.is_empty() || n == 0 {
        return Vec::new();
    }
    let a = Mat::from_rows(vectors).expect("equal-length vectors");
    let (sig, v) = svd_right(&a);
    let smax = sig.first().copied().unwrap_or_else(T::zero);
    if smax <= T::min_positive_value() {
        return Vec::new();
    }
    let cut = T::tol(RANK_TOL) * smax;
    let basis: Vec<Vec<T>> = sig.iter().enumerate().filter(|(_, &s)| s > cut).map(|(j, _)| v.column(j)).collect();
    canonicalize(&basis, n)
}

/// Orthonormal basis of the null space of `a`.
pub fn null_space<T: Real>(a: &Mat<T>) -> Vec<Vec<T>> {
    let n = a.cols();
    let (sig, v) = svd_right(a);
    let smax = sig.first().copied().unwrap_or_else(T::zero);
    let cut = T::tol(RANK_TOL) * smax;
    let basis: Vec<Vec<T>> = sig
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax <= T::min_positive_value() || s <= cut)
        .map(|(j, _)| v.column(j))
        .collect();
    canonicalize(&basis, n)
}

/// Rewrites an orthonormal basis of a subspace `W` into the basis obtained by
/// pivoted Gram-Schmidt on the projections of the standard basis onto `W`.
/// Coordinate subspaces come back as standard basis vectors, in index order.
pub fn canonicalize<T: Real>(basis: &[Vec<T>], n: usize) -> Vec<Vec<T>> {
    let r = basis.len();
    if r == 0 {
        return Vec::new();
    }
    let p = projector(basis, n);
    let mut cands: Vec<Vec<T>> = (0..n).map(|i| p.column(i)).collect();
    let mut out: Vec<Vec<T>> = Vec::with_capacity(r);
    let mut used = vec![false; n];
    while out.len() < r {
        let mut best: Option<(usize, T)> = None;
        for (i, c) in cands.iter().enumerate() {
            if used[i] {
                continue;
            }
            let nc = norm(c);
            // strict comparison keeps the lowest index on exact ties
            if best.is_none_or(|(_, b)| nc > b * (T::one() + T::c(1e-12))) {
                best = Some((i, nc));
            }
        }
        let Some((i, nc)) = best else { break };
        used[i] = true;
        let mut q = scale(T::one() / nc, &cands[i]);
        for prev in &out {
            let d = dot(&q, prev);
            axpy(-d, prev, &mut q);
        }
        let nq = norm(&q);
        q = scale(T::one() / nq, &q);
        for c in cands.iter_mut() {
            let d = dot(c, &q);
            axpy(-d, &q, c);
        }
        out.push(q);
    }
    out
}

/// Canonical orthonormal basis of the orthogonal complement of `basis` in `R^n`.
pub fn complement<T: Real>(basis: &[Vec<T>], n: usize) -> Vec<Vec<T>> {
    let p = projector(basis, n);
    let q = Mat::<T>::identity(n).sub(&p);
    let m = n - basis.len();
    if m == 0 {
        return Vec::new();
    }
    // the complement projector is already symmetric idempotent; reuse canonicalize
    // on an orthonormal basis extracted from its columns
    let cols: Vec<Vec<T>> = (0..n).map(|i| q.column(i)).collect();
    let raw = span_basis(&cols, n);
    debug_assert_eq!(raw.len(), m);
    raw
}

/// Orthogonal projection of `x` onto the span of an orthonormal basis.
pub fn project<T: Real>(basis: &[Vec<T>], x: &[T]) -> Vec<T> {
    let mut out = zeros(x.len());
    for b in basis {
        axpy(dot(b, x), b, &mut out);
    }
    out
}
