//! Dense real linear algebra for small networks.
//!
//! Two value types carry everything: [`SymMatrix`] for the n×n symmetric
//! operators (mixing matrices and everything derived from them) and
//! [`Stacked`] for row-stacked agent variables, which also serves as the
//! general rectangular matrix type (sensing blocks, non-symmetric products).
//!
//! The eigensolver is cyclic Jacobi. Spectral quantities are cached on the
//! matrix the first time they are requested.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use once_cell::race::OnceBox;

use crate::error::{Error, Result};

/// Default relative threshold below which eigenvalues are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Off-diagonal Frobenius norm target, relative to ‖A‖_F.
pub const JACOBI_TOL: f64 = 1e-13;
pub const JACOBI_MAX_SWEEPS: usize = 100;

// ---------------------------------------------------------------------------
// Stacked
// ---------------------------------------------------------------------------

/// Row-major `rows × cols` real matrix. Row `i` is agent `i`'s vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Stacked {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Stacked {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "Stacked::from_vec",
                expected: (rows, cols),
                found: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    op: "Stacked::from_rows",
                    expected: (rows.len(), cols),
                    found: (rows.len(), r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
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

    /// The consensual matrix `1 vᵀ` with `n` identical rows.
    pub fn consensual(n: usize, v: &[f64]) -> Self {
        let mut data = Vec::with_capacity(n * v.len());
        for _ in 0..n {
            data.extend_from_slice(v);
        }
        Self {
            rows: n,
            cols: v.len(),
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        libm::sqrt(self.frob_norm_sq())
    }

    /// Frobenius inner product `tr(selfᵀ other)`.
    pub fn frob_dot(&self, other: &Stacked) -> f64 {
        assert_eq!(self.shape(), other.shape(), "frob_dot shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `1ᵀ X`, one sum per column.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(i)) {
                *o += v;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, s: f64) -> Stacked {
        Stacked {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Stacked) {
        assert_eq!(self.shape(), x.shape(), "axpy shape mismatch");
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    /// `selfᵀ · other`.
    pub fn transpose_mul(&self, other: &Stacked) -> Result<Stacked> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                op: "Stacked::transpose_mul",
                expected: (self.rows, other.cols),
                found: other.shape(),
            });
        }
        let mut out = Stacked::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a = self.row(k);
            let b = other.row(k);
            for (i, ai) in a.iter().enumerate() {
                if *ai == 0.0 {
                    continue;
                }
                let orow = out.row_mut(i);
                for (o, bj) in orow.iter_mut().zip(b) {
                    *o += ai * bj;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "Stacked::mul_vec",
                expected: (self.cols, 1),
                found: (v.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn transpose(&self) -> Stacked {
        Stacked::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

impl Index<(usize, usize)> for Stacked {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

fn zip_map(a: &Stacked, b: &Stacked, f: impl Fn(f64, f64) -> f64) -> Stacked {
    assert_eq!(a.shape(), b.shape(), "Stacked shape mismatch");
    Stacked {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(x, y)| f(*x, *y)).collect(),
    }
}

impl Add for &Stacked {
    type Output = Stacked;
    fn add(self, rhs: &Stacked) -> Stacked {
        zip_map(self, rhs, |a, b| a + b)
    }
}

impl Sub for &Stacked {
    type Output = Stacked;
    fn sub(self, rhs: &Stacked) -> Stacked {
        zip_map(self, rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Stacked {
    type Output = Stacked;
    fn mul(self, rhs: f64) -> Stacked {
        self.scale(rhs)
    }
}

impl Neg for &Stacked {
    type Output = Stacked;
    fn neg(self) -> Stacked {
        self.scale(-1.0)
    }
}

impl AddAssign<&Stacked> for Stacked {
    fn add_assign(&mut self, rhs: &Stacked) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&Stacked> for Stacked {
    fn sub_assign(&mut self, rhs: &Stacked) {
        self.axpy(-1.0, rhs);
    }
}

// ---------------------------------------------------------------------------
// SymMatrix
// ---------------------------------------------------------------------------

/// Eigendecomposition `A = V diag(values) Vᵀ`, eigenvalues ascending.
/// Column `k` of `vectors` is the eigenvector for `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Stacked,
}

impl SymEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `V diag(f(λ)) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += v.get(i, k) * fl[k] * v.get(j, k);
                }
                data[i * n + j] = s;
                data[j * n + i] = s;
            }
        }
        SymMatrix::from_symmetric_data(n, data)
    }
}

/// Dense symmetric `dim × dim` matrix. Symmetry is exact: construction
/// averages `a_ij` and `a_ji`.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
    eig: OnceBox<SymEigen>,
}

impl PartialEq for SymMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.data == other.data
    }
}

impl SymMatrix {
    /// Builds from row-major data, symmetrizing by averaging.
    pub fn new(dim: usize, mut data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                op: "SymMatrix::new",
                expected: (dim, dim),
                found: (data.len(), 1),
            });
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        debug_assert!((0..dim).all(|i| (0..dim).all(|j| data[i * dim + j] == data[j * dim + i])));
        Ok(Self::from_symmetric_data(dim, data))
    }

    fn from_symmetric_data(dim: usize, data: Vec<f64>) -> Self {
        Self {
            dim,
            data,
            eig: OnceBox::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let s = Stacked::from_rows(rows)?;
        if s.rows() != s.cols() {
            return Err(Error::DimensionMismatch {
                op: "SymMatrix::from_rows",
                expected: (s.rows(), s.rows()),
                found: s.shape(),
            });
        }
        Self::new(s.rows(), s.into_vec())
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle.
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Self::from_symmetric_data(dim, data)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_symmetric_data(dim, vec![0.0; dim * dim])
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn frob_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `a·self + b·I`.
    pub fn affine(&self, a: f64, b: f64) -> SymMatrix {
        let n = self.dim;
        let mut data: Vec<f64> = self.data.iter().map(|v| a * v).collect();
        for i in 0..n {
            data[i * n + i] += b;
        }
        Self::from_symmetric_data(n, data)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        Self::from_symmetric_data(self.dim, self.data.iter().map(|v| v * s).collect())
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim, "SymMatrix dim mismatch");
        Self::from_symmetric_data(
            self.dim,
            self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim, "SymMatrix dim mismatch");
        Self::from_symmetric_data(
            self.dim,
            self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        )
    }

    /// `self · X`.
    pub fn mul_stacked(&self, x: &Stacked) -> Result<Stacked> {
        if x.rows() != self.dim {
            return Err(Error::DimensionMismatch {
                op: "SymMatrix::mul_stacked",
                expected: (self.dim, x.cols()),
                found: x.shape(),
            });
        }
        let p = x.cols();
        let mut out = Stacked::zeros(self.dim, p);
        for i in 0..self.dim {
            let orow = out.row_mut(i);
            for (j, &hij) in self.row(i).iter().enumerate() {
                if hij == 0.0 {
                    continue;
                }
                for (o, xv) in orow.iter_mut().zip(x.row(j)) {
                    *o += hij * xv;
                }
            }
        }
        Ok(out)
    }

    /// `self · X` for callers that have already checked shapes.
    pub fn apply(&self, x: &Stacked) -> Stacked {
        self.mul_stacked(x).expect("SymMatrix::apply shape mismatch")
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim, "SymMatrix::mul_vec length mismatch");
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// General (not necessarily symmetric) product `self · other`.
    pub fn mul_sym(&self, other: &SymMatrix) -> Stacked {
        let other_as = Stacked::from_vec(other.dim, other.dim, other.data.clone())
            .expect("square data");
        self.apply(&other_as)
    }

    /// Cached eigendecomposition.
    pub fn eigen(&self) -> Result<&SymEigen> {
        self.eig
            .get_or_try_init(|| eig_sym(self).map(alloc::boxed::Box::new))
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(self.eigen()?.min())
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(self.eigen()?.max())
    }

    /// Smallest eigenvalue exceeding `tol · max|λ|` (λ⁺_min for PSD input).
    pub fn lambda_min_plus(&self, tol: f64) -> Result<f64> {
        let e = self.eigen()?;
        let scale = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        e.values
            .iter()
            .copied()
            .find(|&l| l > tol * scale)
            .ok_or_else(|| Error::InvalidInput(format!("matrix has no eigenvalue above {:e}", tol * scale)))
    }

    /// Number of eigenvalues with magnitude at most `tol · max|λ|`.
    pub fn nullity(&self, tol: f64) -> Result<usize> {
        let e = self.eigen()?;
        let scale = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(e.values.iter().filter(|l| l.abs() <= tol * scale).count())
    }

    /// Inverse of a positive definite matrix.
    pub fn inverse_pd(&self, what: &'static str) -> Result<SymMatrix> {
        let e = self.eigen()?;
        if e.min() <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                what,
                min_eigenvalue: e.min(),
                advice: "cannot invert",
            });
        }
        Ok(e.map(|l| 1.0 / l))
    }

    /// Symmetric square root of a positive semidefinite matrix (negative
    /// eigenvalues from roundoff are clamped to zero).
    pub fn sqrt_psd(&self) -> Result<SymMatrix> {
        Ok(self.eigen()?.map(|l| libm::sqrt(l.max(0.0))))
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Cyclic Jacobi eigendecomposition. Eigenvalues are returned ascending.
pub fn eig_sym(a: &SymMatrix) -> Result<SymEigen> {
    eig_sym_labeled(a, "matrix")
}

pub fn eig_sym_labeled(a: &SymMatrix, label: &str) -> Result<SymEigen> {
    let n = a.dim();
    let mut m = a.as_slice().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro = a.frob_norm();
    let target = JACOBI_TOL * fro;
    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        libm::sqrt(s)
    };

    let mut converged = false;
    for _sweep in 0..=JACOBI_MAX_SWEEPS {
        if off_norm(&m) <= target {
            converged = true;
            break;
        }
        if _sweep == JACOBI_MAX_SWEEPS {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                // A ← A J
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                // A ← Jᵀ A
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence {
            label: label.into(),
            dim: n,
            sweeps: JACOBI_MAX_SWEEPS,
            off_norm: off_norm(&m),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values: Vec<f64> = order.iter().map(|&k| m[k * n + k]).collect();
    let vectors = Stacked::from_fn(n, n, |i, col| v[i * n + order[col]]);
    Ok(SymEigen { values, vectors })
}

/// Moore–Penrose pseudo-inverse of a PSD matrix. Eigenvalues at or below
/// `rank_tol · λ_max` are treated as zero.
pub fn pinv_psd(a: &SymMatrix, rank_tol: f64) -> Result<SymMatrix> {
    let e = a.eigen()?;
    let lmax = e.max().max(0.0);
    let cut = rank_tol * lmax;
    if e.min() < -cut {
        return Err(Error::NotPsd {
            eigenvalue: e.min(),
            threshold: cut,
        });
    }
    Ok(e.map(|l| if l > cut { 1.0 / l } else { 0.0 }))
}

/// `tr(Xᵀ H X)`, the squared H-weighted norm.
pub fn wnorm_sq(x: &Stacked, h: &SymMatrix) -> Result<f64> {
    wdot(x, x, h)
}

/// `tr(Xᵀ H Y)`.
pub fn wdot(x: &Stacked, y: &Stacked, h: &SymMatrix) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch {
            op: "wdot",
            expected: x.shape(),
            found: y.shape(),
        });
    }
    let hy = h.mul_stacked(y)?;
    Ok(x.frob_dot(&hy))
}

/// λ_max(B A) for B ≻ 0 and A symmetric, computed as λ_max(B^½ A B^½).
pub fn lambda_max_product(b_pd: &SymMatrix, a: &SymMatrix) -> Result<f64> {
    let r = b_pd.sqrt_psd()?;
    let ra = r.mul_sym(a);
    let rar = SymMatrix::new(a.dim(), r.mul_sym_stacked_right(&ra).into_vec())?;
    rar.lambda_max()
}

/// Solves `A x = b` by Cholesky factorization. `None` when a pivot falls
/// below `pivot_tol · max diag(A)`.
pub fn cholesky_solve(a: &SymMatrix, b: &[f64], pivot_tol: f64) -> Result<Option<Vec<f64>>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            op: "cholesky_solve",
            expected: (n, 1),
            found: (b.len(), 1),
        });
    }
    let scale = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
    let mut l = alloc::vec![0.0; n * n];
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > pivot_tol * scale) {
            return Ok(None);
        }
        let djj = libm::sqrt(d);
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[i * n + k] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            z[i] -= l[k * n + i] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    Ok(Some(z))
}

impl SymMatrix {
    /// `X · self` for a square `X`.
    fn mul_sym_stacked_right(&self, x: &Stacked) -> Stacked {
        // (self · Xᵀ)ᵀ = X · self since self is symmetric
        self.apply(&x.transpose()).transpose()
    }
}
