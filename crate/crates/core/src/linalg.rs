//! Dense linear algebra for small symmetric problems.
//!
//! Everything here works on [`Matrix`], a row-major dense matrix. The
//! eigensolver is the cyclic Jacobi method, which is accurate and simple at
//! the sizes this crate deals with (n up to a few dozen); the factorizations
//! are an unpivoted Cholesky for positive definite systems and an unpivoted
//! LDLᵀ for the quasi-definite KKT systems produced by the conic solver.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default relative tolerance used by [`numeric_rank`].
pub const RANK_REL_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix has a non-finite entry")]
    NonFinite,
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
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

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { rows: nrows, cols: ncols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ x`
    pub fn tmatvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len());
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn scale(&self, alpha: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * alpha).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// (A + Aᵀ)/2. The result is exactly symmetric.
    pub fn symmetrized(&self) -> Matrix {
        assert!(self.is_square());
        let n = self.rows;
        let mut s = self.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Frobenius inner product `Σ_ij A_ij B_ij`.
    pub fn inner(&self, other: &Matrix) -> f64 {
        dot(&self.data, &other.data)
    }

    /// Quadratic form `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
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

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Eigenvalues sorted non-increasing, with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    /// Q Λ Qᵀ
    pub fn reconstruct(&self) -> Matrix {
        let n = self.eigenvalues.len();
        let mut out = Matrix::zeros(n, n);
        for k in 0..n {
            let lam = self.eigenvalues[k];
            for i in 0..n {
                let qik = self.eigenvectors[(i, k)] * lam;
                for j in 0..n {
                    out[(i, j)] += qik * self.eigenvectors[(j, k)];
                }
            }
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Only the upper triangle is read. Eigenvalues are returned in
/// non-increasing order.
pub fn eig_sym(a: &Matrix) -> Result<EigenDecomposition, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare { rows: a.rows, cols: a.cols });
    }
    if !a.all_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.rows;
    let mut m = a.symmetrized();
    let mut v = Matrix::identity(n);
    let max_sweeps = (100 * n * n).max(100);

    let frob = m.frobenius();
    let mut converged = n <= 1 || frob == 0.0;
    let mut sweeps = 0;
    while !converged {
        if sweeps >= max_sweeps {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                // Skip rotations that cannot change the diagonal in floating point.
                if apq.abs() * 1e18 < app.abs().min(aqq.abs()) {
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
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
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        converged = off <= 1e-15 * frob;
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the result deterministic when eigenvalues tie.
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).expect("finite eigenvalues"));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (newc, &oldc) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, newc)] = v[(r, oldc)];
        }
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// Number of eigenvalues with `|λ| > rel_tol · max|λ|`.
pub fn numeric_rank(a: &Matrix, rel_tol: f64) -> Result<usize, LinalgError> {
    Ok(rank_from_eigenvalues(&eig_sym(a)?.eigenvalues, rel_tol))
}

pub fn rank_from_eigenvalues(eigenvalues: &[f64], rel_tol: f64) -> usize {
    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    eigenvalues.iter().filter(|v| v.abs() > rel_tol * scale).count()
}

/// Threshold below which an eigenvalue counts as negative:
/// `λ < -1e-9 · max(1, spectral radius)`.
pub fn negative_threshold(eigenvalues: &[f64]) -> f64 {
    let scale = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    -1e-9 * scale.max(1.0)
}

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Fails when a pivot drops to `1e-12 · trace(A)/n` or below.
    pub fn factor(a: &Matrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare { rows: a.rows, cols: a.cols });
        }
        let n = a.rows;
        let floor = 1e-12 * (a.trace() / n.max(1) as f64).abs();
        Self::factor_with_floor(a, floor)
    }

    /// Factorization that only rejects pivots `<= floor`.
    pub fn factor_with_floor(a: &Matrix, floor: f64) -> Result<Self, LinalgError> {
        let n = a.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > floor) {
                return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let n = self.l.rows;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    /// A⁻¹, column by column.
    pub fn inverse(&self) -> Matrix {
        let n = self.l.rows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrized()
    }
}

/// Solves `A x = rhs` for symmetric positive definite `A`.
pub fn pd_solve(a: &Matrix, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if rhs.len() != a.rows {
        return Err(LinalgError::DimensionMismatch { expected: a.rows, got: rhs.len() });
    }
    let chol = Cholesky::factor(a)?;
    Ok(chol.solve(rhs))
}

/// Unpivoted `L D Lᵀ` factorization for symmetric quasi-definite matrices.
#[derive(Debug, Clone)]
pub struct Ldlt {
    l: Matrix,
    d: Vec<f64>,
}

impl Ldlt {
    pub fn factor(a: &Matrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare { rows: a.rows, cols: a.cols });
        }
        let n = a.rows;
        let mut l = Matrix::identity(n);
        let mut d = vec![0.0; n];
        let mut work = vec![0.0; n];
        for j in 0..n {
            for k in 0..j {
                work[k] = l[(j, k)] * d[k];
            }
            let mut dj = a[(j, j)];
            for k in 0..j {
                dj -= l[(j, k)] * work[k];
            }
            if dj == 0.0 || !dj.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { index: j, pivot: dj });
            }
            d[j] = dj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                let li = l.row(i);
                for k in 0..j {
                    s -= li[k] * work[k];
                }
                l[(i, j)] = s / dj;
            }
        }
        Ok(Self { l, d })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n {
            let li = self.l.row(i);
            let mut s = x[i];
            for k in 0..i {
                s -= li[k] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s;
        }
        x
    }
}

/// Householder QR of a tall matrix, kept in compact form.
#[derive(Debug, Clone)]
pub struct Qr {
    // Column j holds the Householder vector below the diagonal; R sits on
    // and above it, with its diagonal in `rdiag`.
    qr: Matrix,
    rdiag: Vec<f64>,
    beta: Vec<f64>,
}

impl Qr {
    pub fn factor(a: &Matrix) -> Result<Self, LinalgError> {
        let (m, n) = (a.rows, a.cols);
        if m < n {
            return Err(LinalgError::DimensionMismatch { expected: n, got: m });
        }
        if !a.all_finite() {
            return Err(LinalgError::NonFinite);
        }
        // Work on the transpose so each Householder column is contiguous.
        let mut t = a.transpose();
        let mut rdiag = vec![0.0; n];
        let mut beta = vec![0.0; n];
        for j in 0..n {
            let col = &mut t.data[j * m..(j + 1) * m];
            let norm = col[j..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(LinalgError::NotPositiveDefinite { index: j, pivot: 0.0 });
            }
            let alpha = if col[j] > 0.0 { -norm } else { norm };
            col[j] -= alpha;
            let vnorm2 = col[j..].iter().map(|v| v * v).sum::<f64>();
            beta[j] = if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 };
            rdiag[j] = alpha;
            let (head, tail) = t.data.split_at_mut((j + 1) * m);
            let v = &head[j * m..];
            for k in 0..(n - j - 1) {
                let other = &mut tail[k * m..(k + 1) * m];
                let s = beta[j] * (j..m).map(|i| v[i] * other[i]).sum::<f64>();
                for i in j..m {
                    other[i] -= s * v[i];
                }
            }
        }
        Ok(Self { qr: t, rdiag, beta })
    }

    fn dims(&self) -> (usize, usize) {
        (self.qr.cols, self.qr.rows)
    }

    /// Diagonal of R.
    pub fn r_diag(&self) -> &[f64] {
        &self.rdiag
    }

    /// `Qᵀb` (full length).
    pub fn qt_mul(&self, b: &[f64]) -> Vec<f64> {
        let (m, n) = self.dims();
        let mut x = b.to_vec();
        for j in 0..n {
            let v = &self.qr.data[j * m..(j + 1) * m];
            let s = self.beta[j] * (j..m).map(|i| v[i] * x[i]).sum::<f64>();
            for i in j..m {
                x[i] -= s * v[i];
            }
        }
        x
    }

    /// `Q b` (full length).
    pub fn q_mul(&self, b: &[f64]) -> Vec<f64> {
        let (m, n) = self.dims();
        let mut x = b.to_vec();
        for j in (0..n).rev() {
            let v = &self.qr.data[j * m..(j + 1) * m];
            let s = self.beta[j] * (j..m).map(|i| v[i] * x[i]).sum::<f64>();
            for i in j..m {
                x[i] -= s * v[i];
            }
        }
        x
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        // R[i][j] for i < j lives in transposed column j at row i.
        if i == j {
            self.rdiag[i]
        } else {
            self.qr.data[j * self.qr.cols + i]
        }
    }

    /// Solves `R x = b` for the leading `n` entries of `b`.
    pub fn r_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rdiag.len();
        let mut x = b[..n].to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.r(i, j) * x[j];
            }
            x[i] = s / self.rdiag[i];
        }
        x
    }

    /// Solves `Rᵀ x = b`.
    pub fn rt_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.rdiag.len();
        let mut x = b[..n].to_vec();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.r(j, i) * x[j];
            }
            x[i] = s / self.rdiag[i];
        }
        x
    }

    /// Least-squares solution of `A x ≈ b`.
    pub fn least_squares(&self, b: &[f64]) -> Vec<f64> {
        self.r_solve(&self.qt_mul(b))
    }
}

/// Orthonormal factor of a square matrix by modified Gram–Schmidt.
///
/// The implicit R has a positive diagonal, which pins the sign of every
/// column of Q. Fails if the input is numerically rank deficient.
pub fn orthonormal_factor(a: &Matrix) -> Result<Matrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare { rows: a.rows, cols: a.cols });
    }
    let n = a.rows;
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let scale = a.frobenius().max(f64::MIN_POSITIVE);
    for j in 0..n {
        for k in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let r = dot(&done[k], &rest[0]);
            for (c, q) in rest[0].iter_mut().zip(&done[k]) {
                *c -= r * q;
            }
        }
        let nrm = norm2(&cols[j]);
        if nrm <= 1e-12 * scale {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot: nrm });
        }
        cols[j].iter_mut().for_each(|c| *c /= nrm);
    }
    let mut q = Matrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            q[(i, j)] = c[i];
        }
    }
    Ok(q)
}

/// Thin SVD `A = U diag(σ) Vᵀ` of a square matrix.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

/// One-sided (Hestenes) Jacobi SVD of a square matrix. Small singular
/// values keep high relative accuracy. Fails on a zero singular value.
pub fn svd_jacobi(a: &Matrix) -> Result<Svd, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare { rows: a.rows, cols: a.cols });
    }
    if !a.all_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.rows;
    // Work on columns stored contiguously.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let max_sweeps = (100 * n * n).max(100);
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for store in [&mut cols, &mut vcols] {
                    let (lo, hi) = store.split_at_mut(q);
                    for (xp, xq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (vp, vq) = (*xp, *xq);
                        *xp = c * vp - s * vq;
                        *xq = s * vp + c * vq;
                    }
                }
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
        if sweeps >= max_sweeps {
            return Err(LinalgError::NoConvergence { sweeps });
        }
    }
    let mut u = Matrix::zeros(n, n);
    let mut v = Matrix::zeros(n, n);
    let mut sigma = vec![0.0; n];
    for j in 0..n {
        let s = norm2(&cols[j]);
        if !(s > 0.0) {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot: s });
        }
        sigma[j] = s;
        for i in 0..n {
            u[(i, j)] = cols[j][i] / s;
            v[(i, j)] = vcols[j][i];
        }
    }
    Ok(Svd { u, sigma, v })
}
