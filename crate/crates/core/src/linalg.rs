//! Dense linear algebra and symmetric eigensolvers.
//!
//! Two eigensolver routes are provided. The dense route reduces to
//! tridiagonal form with Householder reflections and diagonalizes with the
//! implicit QL algorithm. The iterative route is Lanczos with full
//! reorthogonalization, used for the few largest-magnitude eigenpairs of large
//! operators such as adjacency matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::rng;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds an `n x 1` column matrix.
    pub fn column_vector(values: &[f64]) -> Self {
        Self { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self[(i, j)] = *v;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`, without forming the transpose.
    pub fn tr_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, found: other.rows });
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a = self.row(r);
            let b = other.row(r);
            for (i, ai) in a.iter().enumerate() {
                if *ai == 0.0 {
                    continue;
                }
                let dst = out.row_mut(i);
                for (d, bj) in dst.iter_mut().zip(b) {
                    *d += ai * bj;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.data.len(), found: other.data.len() });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Spectral norm, via the largest eigenvalue of the smaller Gram matrix.
    pub fn spectral_norm(&self) -> f64 {
        let gram = if self.rows >= self.cols {
            self.tr_matmul(self)
        } else {
            self.transpose().tr_matmul(&self.transpose())
        };
        let gram = match gram {
            Ok(g) => g,
            Err(_) => return 0.0,
        };
        if gram.rows == 0 {
            return 0.0;
        }
        match symmetric_eigen(&gram) {
            Ok(eig) => libm::sqrt(eig.values.last().copied().unwrap_or(0.0).max(0.0)),
            Err(_) => 0.0,
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// A real symmetric linear operator `y = A x`.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// Writes `A x` into `y`; both slices have length `dim()`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Materializes the operator. The default applies it to unit vectors.
    fn to_dense(&self) -> Matrix {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            out.set_column(j, &col);
            e[j] = 0.0;
        }
        out
    }
}

impl SymmetricOperator for Matrix {
    fn dim(&self) -> usize {
        self.rows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }

    fn to_dense(&self) -> Matrix {
        self.clone()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Pairwise (cascade) summation; the result depends only on element order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Flips `v` so its largest-magnitude entry is positive.
///
/// Entries within a relative `1e-12` of the maximum magnitude count as tied;
/// the lowest such index decides the sign.
pub fn orient_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let cut = max * (1.0 - 1e-12);
    if let Some(lead) = v.iter().find(|x| x.abs() >= cut) {
        if *lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Eigendecomposition of a symmetric matrix; `vectors` holds eigenvectors in
/// columns matching `values`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymmetricEigen {
    /// Reorders pairs by decreasing algebraic value.
    pub fn sorted_descending(self) -> Self {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]).then(a.cmp(&b)));
        self.permuted(&order)
    }

    /// Reorders pairs by decreasing magnitude, positive first among equal magnitudes.
    pub fn sorted_by_magnitude(self) -> Self {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| {
            let (va, vb) = (self.values[a], self.values[b]);
            vb.abs().total_cmp(&va.abs()).then(vb.total_cmp(&va)).then(a.cmp(&b))
        });
        self.permuted(&order)
    }

    fn permuted(self, order: &[usize]) -> Self {
        let n = self.vectors.rows();
        let values = order.iter().map(|&i| self.values[i]).collect();
        let vectors = Matrix::from_fn(n, order.len(), |r, c| self.vectors[(r, order[c])]);
        Self { values, vectors }
    }

    /// Keeps the first `k` pairs.
    pub fn truncated(self, k: usize) -> Self {
        let k = k.min(self.values.len());
        let n = self.vectors.rows();
        let vectors = Matrix::from_fn(n, k, |r, c| self.vectors[(r, c)]);
        Self { values: self.values[..k].to_vec(), vectors }
    }

    /// Applies [`orient_sign`] to every eigenvector.
    pub fn oriented(mut self) -> Self {
        for j in 0..self.vectors.cols() {
            let mut col = self.vectors.column(j);
            orient_sign(&mut col);
            self.vectors.set_column(j, &col);
        }
        self
    }
}

/// Full eigendecomposition of a symmetric matrix (values ascending).
///
/// Only the lower triangle is read.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(SymmetricEigen { values: Vec::new(), vectors: Matrix::zeros(0, 0) });
    }
    let mut v = Matrix::from_fn(n, n, |i, j| if i >= j { a[(i, j)] } else { a[(j, i)] });
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiagonalize(&mut v, &mut d, &mut e);
    tridiagonal_ql(&mut d, &mut e, &mut v)?;
    Ok(SymmetricEigen { values: d, vectors: v })
}

/// Eigendecomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off[i]` couples `i` and `i + 1`).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<SymmetricEigen> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    for i in 1..n {
        e[i] = off[i - 1];
    }
    let mut v = Matrix::identity(n);
    tridiagonal_ql(&mut d, &mut e, &mut v)?;
    Ok(SymmetricEigen { values: d, vectors: v })
}

// Householder reduction to tridiagonal form, accumulating the transform in `v`.
// On exit `d` is the diagonal and `e[1..]` the subdiagonal.
fn householder_tridiagonalize(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit QL iterations on a tridiagonal matrix, rotating the columns of `v`.
// Eigenvalues are returned in ascending order with matching columns.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], v: &mut Matrix) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let rows = v.rows();
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::EigenNonConvergence { iterations: iter, residual: e[l].abs() });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..rows {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    // selection sort keeps the column swaps cheap to reason about
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, dj) in d.iter().enumerate().skip(i + 1) {
            if *dj < p {
                k = j;
                p = *dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for r in 0..rows {
                let tmp = v[(r, i)];
                v[(r, i)] = v[(r, k)];
                v[(r, k)] = tmp;
            }
        }
    }
    Ok(())
}

/// Eigensolver route selection for [`top_eigenpairs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Dense for small operators or many requested pairs, Lanczos otherwise.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Operators at or below this size always use the dense route.
pub const DENSE_THRESHOLD: usize = 64;

/// Relative residual at which a Ritz pair counts as converged.
pub const LANCZOS_TOLERANCE: f64 = 1e-10;

/// The `k` largest-magnitude eigenpairs of `op`, in decreasing magnitude, with
/// eigenvectors oriented by [`orient_sign`].
pub fn top_eigenpairs<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    method: EigenMethod,
) -> Result<SymmetricEigen> {
    let n = op.dim();
    if k > n {
        return Err(Error::InvalidInput(alloc::format!("requested {k} eigenpairs of a {n}x{n} operator")));
    }
    let dense = match method {
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
        EigenMethod::Auto => n <= DENSE_THRESHOLD || 4 * k >= n,
    };
    let eig = if dense {
        symmetric_eigen(&op.to_dense())?.sorted_by_magnitude().truncated(k)
    } else {
        lanczos(op, k)?
    };
    Ok(eig.oriented())
}

fn lanczos<O: SymmetricOperator + ?Sized>(op: &O, k: usize) -> Result<SymmetricEigen> {
    let n = op.dim();
    if k == 0 {
        return Ok(SymmetricEigen { values: Vec::new(), vectors: Matrix::zeros(n, 0) });
    }
    let max_dim = n.min((20 * k).max(300));
    let min_dim = n.min(k + 20);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_dim);
    let mut alphas: Vec<f64> = Vec::with_capacity(max_dim);
    let mut betas: Vec<f64> = Vec::with_capacity(max_dim);
    let mut restarts = 0u64;

    let mut q = start_vector(n, restarts, &basis);
    let mut w = vec![0.0; n];
    let mut scale = 0.0f64;
    let mut last_residual = f64::INFINITY;
    loop {
        op.apply(&q, &mut w);
        let alpha = dot(&q, &w);
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi -= alpha * qi;
        }
        if let (Some(prev), Some(&beta)) = (basis.last(), betas.last()) {
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= beta * pi;
            }
        }
        basis.push(q);
        alphas.push(alpha);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let beta = norm(&w);
        scale = scale.max(alpha.abs() + beta);
        let j = basis.len();
        let breakdown = beta <= 1e-13 * scale.max(f64::MIN_POSITIVE);

        let check = j >= min_dim && (j % 5 == 0 || breakdown || j == max_dim);
        if check || j == n {
            let off = &betas[..j - 1];
            let t = tridiagonal_eigen(&alphas, off)?.sorted_by_magnitude();
            let top = t.values[0].abs().max(f64::MIN_POSITIVE);
            let coupling = if breakdown { 0.0 } else { beta };
            let worst = (0..k.min(j))
                .map(|c| (coupling * t.vectors[(j - 1, c)]).abs())
                .fold(0.0f64, f64::max);
            last_residual = worst;
            if j == n || (j >= k && worst <= LANCZOS_TOLERANCE * top) {
                return Ok(ritz_vectors(&basis, t.truncated(k)));
            }
            if j >= max_dim {
                return Err(Error::EigenNonConvergence { iterations: j, residual: last_residual });
            }
        }
        if j >= max_dim {
            return Err(Error::EigenNonConvergence { iterations: j, residual: last_residual });
        }
        if breakdown {
            restarts += 1;
            betas.push(0.0);
            q = start_vector(n, restarts, &basis);
        } else {
            betas.push(beta);
            q = w.iter().map(|x| x / beta).collect();
        }
    }
}

fn ritz_vectors(basis: &[Vec<f64>], t: SymmetricEigen) -> SymmetricEigen {
    let n = basis[0].len();
    let k = t.values.len();
    let mut vectors = Matrix::zeros(n, k);
    for c in 0..k {
        let mut col = vec![0.0; n];
        for (b, qb) in basis.iter().enumerate() {
            let y = t.vectors[(b, c)];
            if y != 0.0 {
                for (ci, qi) in col.iter_mut().zip(qb) {
                    *ci += y * qi;
                }
            }
        }
        let nrm = norm(&col);
        if nrm > 0.0 {
            col.iter_mut().for_each(|x| *x /= nrm);
        }
        vectors.set_column(c, &col);
    }
    SymmetricEigen { values: t.values, vectors }
}

// Deterministic pseudo-random unit vector orthogonal to `basis`.
fn start_vector(n: usize, attempt: u64, basis: &[Vec<f64>]) -> Vec<f64> {
    let mut r = rng::stream(0x1a2c_2005, rng::TAG_SOLVER, n as u64, attempt);
    let mut v: Vec<f64> = (0..n).map(|_| rng::uniform(&mut r) - 0.5).collect();
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, &v);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
    }
    let nrm = norm(&v);
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    v
}

/// Thin singular value decomposition `a = u · diag(s) · vᵀ` of a small matrix
/// with at least as many rows as columns, by one-sided Jacobi rotations.
///
/// Columns of `u` belonging to zero singular values are completed to an
/// orthonormal set.
pub fn jacobi_svd(a: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(Error::InvalidInput(alloc::format!("jacobi_svd needs rows >= cols, got {m}x{n}")));
    }
    let mut u = a.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (up, uq) = (u[(i, p)], u[(i, q)]);
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma == 0.0 || gamma.abs() <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..m {
                    let (up, uq) = (u[(i, p)], u[(i, q)]);
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
                for i in 0..n {
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s = vec![0.0; n];
    let largest = (0..n).map(|j| norm(&u.column(j))).fold(0.0f64, f64::max);
    let mut deficient = Vec::new();
    for (j, sj) in s.iter_mut().enumerate() {
        let col = u.column(j);
        let nrm = norm(&col);
        *sj = nrm;
        if nrm > 1e-14 * largest.max(f64::MIN_POSITIVE) {
            let unit: Vec<f64> = col.iter().map(|x| x / nrm).collect();
            u.set_column(j, &unit);
        } else {
            *sj = 0.0;
            deficient.push(j);
        }
    }
    // complete the rank-deficient columns with Gram-Schmidt on unit vectors
    let mut candidate = 0;
    for j in deficient {
        loop {
            let mut e = vec![0.0; m];
            e[candidate % m] = 1.0;
            candidate += 1;
            for c in 0..n {
                if c == j || (s[c] == 0.0 && c > j) {
                    continue;
                }
                let col = u.column(c);
                let d = dot(&col, &e);
                for (ei, ci) in e.iter_mut().zip(&col) {
                    *ei -= d * ci;
                }
            }
            let nrm = norm(&e);
            if nrm > 1e-8 {
                let unit: Vec<f64> = e.iter().map(|x| x / nrm).collect();
                u.set_column(j, &unit);
                break;
            }
            if candidate > 4 * m {
                return Err(Error::InvalidInput("svd completion failed".into()));
            }
        }
    }
    Ok((u, s, v))
}

/// Orthogonal polar factor `u vᵀ` of a square matrix.
pub fn polar_factor(a: &Matrix) -> Result<Matrix> {
    let (u, _, v) = jacobi_svd(a)?;
    u.matmul(&v.transpose())
}
