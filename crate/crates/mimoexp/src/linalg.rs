//! Minimal complex-Hermitian linear algebra on small dense matrices.
//!
//! Everything here is sized for correlation matrices of a handful of
//! antennas (d ≤ ~64, typically 2–8), so the implementations favour
//! robustness over asymptotic speed:
//!
//! - Eigenvalues of a Hermitian matrix are computed by cyclic Jacobi on the
//!   real symmetric embedding `[[X, -Y], [Y, X]]` of `A = X + iY`, whose
//!   spectrum is that of `A` with every eigenvalue doubled.
//! - The matrix square root reuses the same embedding: the unique PSD square
//!   root of the embedding is the embedding of the PSD square root.
//! - Determinants use Doolittle LU with partial pivoting; the real variant
//!   accumulates inner products with Neumaier-compensated summation because
//!   the determinantal formulas downstream mix entries spanning many orders
//!   of magnitude.
//!
//! Complex Gaussian sampling lives here too, on explicit value-owned RNG
//! streams so callers control reproducibility.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Relative tolerance for declaring a matrix Hermitian:
/// `max|A_ij - conj(A_ji)| <= HERMITIAN_REL_TOL * max|A_ij|`.
pub const HERMITIAN_REL_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Complex dense matrix
// ---------------------------------------------------------------------------

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Builds a matrix from a row-major entry function.
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from row-major raw entries.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::invalid(format!(
                "entry count {} does not match {}x{}",
                entries.len(),
                rows,
                cols
            )));
        }
        Ok(ComplexMatrix {
            rows,
            cols,
            entries,
        })
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

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn mul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matrix product");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..self.cols {
                    acc += self.get(i, k) * rhs.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn add(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) + rhs.get(i, j))
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) - rhs.get(i, j))
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * s)
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest Hermitian defect `max|A_ij - conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut defect: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                defect = defect.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        defect
    }

    pub fn is_hermitian(&self) -> bool {
        self.is_square() && self.hermitian_defect() <= HERMITIAN_REL_TOL * self.max_abs().max(1e-300)
    }
}

// ---------------------------------------------------------------------------
// Hermitian positive definite wrapper
// ---------------------------------------------------------------------------

/// A validated Hermitian positive definite matrix with its smallest
/// eigenvalue cached.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianPD {
    dim: usize,
    matrix: ComplexMatrix,
    min_eigenvalue: f64,
}

impl HermitianPD {
    /// Validates Hermitian symmetry and strict positive definiteness.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::invalid(format!(
                "expected square matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let defect = matrix.hermitian_defect();
        let scale = matrix.max_abs().max(1e-300);
        if defect > HERMITIAN_REL_TOL * scale {
            return Err(Error::invalid(format!(
                "matrix is not Hermitian: defect {defect:.3e} exceeds {:.3e}",
                HERMITIAN_REL_TOL * scale
            )));
        }
        let dim = matrix.rows();
        let eigs = hermitian_eigenvalues_raw(&matrix);
        let min = eigs.last().copied().unwrap_or(0.0);
        if min <= 0.0 {
            return Err(Error::invalid(format!(
                "matrix is not positive definite: smallest eigenvalue {min:.6e}"
            )));
        }
        Ok(HermitianPD {
            dim,
            matrix,
            min_eigenvalue: min,
        })
    }

    pub fn identity(n: usize) -> Self {
        HermitianPD {
            dim: n,
            matrix: ComplexMatrix::identity(n),
            min_eigenvalue: 1.0,
        }
    }

    /// Real diagonal matrix with strictly positive entries.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let m = ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        HermitianPD::new(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// True when the matrix equals the identity within the Hermitian tolerance.
    pub fn is_identity(&self) -> bool {
        let mut defect: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((self.matrix.get(i, j) - target).norm());
            }
        }
        defect <= HERMITIAN_REL_TOL
    }

    /// Determinant, always real and positive for a PD matrix.
    pub fn det(&self) -> f64 {
        hermitian_eigenvalues_raw(&self.matrix).iter().product()
    }

    pub fn ln_det(&self) -> f64 {
        hermitian_eigenvalues_raw(&self.matrix)
            .iter()
            .map(|l| l.ln())
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Eigenvalues via the real symmetric embedding
// ---------------------------------------------------------------------------

/// Embeds `A = X + iY` (Hermitian, d×d) into the real symmetric 2d×2d matrix
/// `[[X, -Y], [Y, X]]`, row-major.
fn embed_hermitian(a: &ComplexMatrix) -> (Vec<f64>, usize) {
    let d = a.rows();
    let n = 2 * d;
    let mut s = vec![0.0; n * n];
    for i in 0..d {
        for j in 0..d {
            let z = a.get(i, j);
            s[i * n + j] = z.re;
            s[i * n + (j + d)] = -z.im;
            s[(i + d) * n + j] = z.im;
            s[(i + d) * n + (j + d)] = z.re;
        }
    }
    (s, n)
}

/// Cyclic Jacobi eigenvalue iteration for a real symmetric matrix given
/// row-major. Returns eigenvalues (unsorted) and, optionally, the
/// accumulated rotation matrix `V` with `A = V diag(w) V^T`.
fn jacobi_symmetric(a: &mut [f64], n: usize, want_vectors: bool) -> (Vec<f64>, Option<Vec<f64>>) {
    let mut v = if want_vectors {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        Some(id)
    } else {
        None
    };

    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        let scale: f64 = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
        if off.sqrt() <= 1e-15 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Rotation angle; numerically stable form of tan(2θ).
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                if let Some(vm) = v.as_mut() {
                    for k in 0..n {
                        let vkp = vm[k * n + p];
                        let vkq = vm[k * n + q];
                        vm[k * n + p] = c * vkp - s * vkq;
                        vm[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let w = (0..n).map(|i| a[i * n + i]).collect();
    (w, v)
}

/// Eigenvalues of a Hermitian complex matrix, descending. Does not validate.
fn hermitian_eigenvalues_raw(a: &ComplexMatrix) -> Vec<f64> {
    let d = a.rows();
    if d == 0 {
        return Vec::new();
    }
    let (mut s, n) = embed_hermitian(a);
    let (mut w, _) = jacobi_symmetric(&mut s, n, false);
    w.sort_by(|x, y| y.partial_cmp(x).unwrap());
    // The embedding doubles every eigenvalue; average each adjacent pair.
    (0..d).map(|k| 0.5 * (w[2 * k] + w[2 * k + 1])).collect()
}

/// Eigenvalues of a Hermitian PD matrix in decreasing order.
///
/// The sum of the returned values equals the trace to within 1e-10 relative.
pub fn eigenvalues_hermitian(a: &HermitianPD) -> Vec<f64> {
    hermitian_eigenvalues_raw(a.matrix())
}

/// Eigenvalues of an arbitrary Hermitian matrix (validated), descending.
pub fn eigenvalues_hermitian_matrix(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::invalid("eigenvalues need a square matrix"));
    }
    if !a.is_hermitian() {
        return Err(Error::invalid(format!(
            "matrix is not Hermitian: defect {:.3e}",
            a.hermitian_defect()
        )));
    }
    Ok(hermitian_eigenvalues_raw(a))
}

/// Hermitian PD square root: returns `S` with `S·S = a` and `S` Hermitian PD.
pub fn matrix_sqrt(a: &HermitianPD) -> ComplexMatrix {
    let d = a.dim();
    let (mut s, n) = embed_hermitian(a.matrix());
    let (w, v) = jacobi_symmetric(&mut s, n, true);
    let v = v.unwrap();
    // sqrt(S) = V diag(sqrt w) V^T is the embedding of sqrt(A).
    let sqrt_w: Vec<f64> = w.iter().map(|&x| x.max(0.0).sqrt()).collect();
    let mut root = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += v[i * n + k] * sqrt_w[k] * v[j * n + k];
            }
            root[i * n + j] = acc;
        }
    }
    ComplexMatrix::from_fn(d, d, |i, j| {
        Complex64::new(root[i * n + j], root[(i + d) * n + j])
    })
}

// ---------------------------------------------------------------------------
// LU factorizations
// ---------------------------------------------------------------------------

/// Complex LU factorization (Doolittle, partial pivoting).
pub struct ComplexLu {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
    sign: f64,
    /// min|u_ii| / max|u_ii|, a cheap reciprocal-condition indicator.
    pub rcond_estimate: f64,
}

impl ComplexLu {
    pub fn factor(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::invalid("LU factorization needs a square matrix"));
        }
        let n = a.rows();
        let mut lu: Vec<Complex64> = a.entries().to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            // Pivot on the largest magnitude in column k.
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in (k + 1)..n {
                let mag = lu[i * n + k].norm();
                if mag > best {
                    best = mag;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            if pivot.norm() == 0.0 {
                continue; // singular; determinant will be zero
            }
            for i in (k + 1)..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                for j in (k + 1)..n {
                    let delta = factor * lu[k * n + j];
                    lu[i * n + j] -= delta;
                }
            }
        }
        let mut umin = f64::INFINITY;
        let mut umax: f64 = 0.0;
        for i in 0..n {
            let d = lu[i * n + i].norm();
            umin = umin.min(d);
            umax = umax.max(d);
        }
        let rcond = if umax > 0.0 { umin / umax } else { 0.0 };
        Ok(ComplexLu {
            n,
            lu,
            piv,
            sign,
            rcond_estimate: rcond,
        })
    }

    pub fn det(&self) -> Complex64 {
        let mut d = Complex64::new(self.sign, 0.0);
        for i in 0..self.n {
            d *= self.lu[i * self.n + i];
        }
        d
    }

    /// Solves `A x = b` for each column of `b`.
    pub fn solve(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.n;
        if b.rows() != n {
            return Err(Error::invalid("solve dimension mismatch"));
        }
        for i in 0..n {
            if self.lu[i * n + i].norm() == 0.0 {
                return Err(Error::numerical(
                    "singular matrix in solve",
                    Some(self.rcond_estimate),
                ));
            }
        }
        let cols = b.cols();
        let mut x = ComplexMatrix::zeros(n, cols);
        for c in 0..cols {
            let mut y = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                let mut acc = b.get(self.piv[i], c);
                for k in 0..i {
                    acc -= self.lu[i * n + k] * y[k];
                }
                y[i] = acc;
            }
            for i in (0..n).rev() {
                let mut acc = y[i];
                for k in (i + 1)..n {
                    acc -= self.lu[i * n + k] * x.get(k, c);
                }
                x.set(i, c, acc / self.lu[i * n + i]);
            }
        }
        Ok(x)
    }
}

/// Determinant of a square complex matrix via pivoted elimination.
///
/// For Hermitian PD input the imaginary residue is at the 1e-12 level.
pub fn det_complex(a: &ComplexMatrix) -> Result<Complex64> {
    Ok(ComplexLu::factor(a)?.det())
}

/// Inverse of a square complex matrix.
pub fn inverse_complex(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let lu = ComplexLu::factor(a)?;
    lu.solve(&ComplexMatrix::identity(a.rows()))
}

// ---------------------------------------------------------------------------
// Real LU with compensated accumulation
// ---------------------------------------------------------------------------

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Dense row-major real matrix used by the determinantal formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMatrix {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.cols + j] = v;
    }

    /// Stacks `top` over `bottom` (column counts must match).
    pub fn vstack(top: &RealMatrix, bottom: &RealMatrix) -> RealMatrix {
        assert_eq!(top.cols, bottom.cols, "vstack column mismatch");
        let mut out = RealMatrix::zeros(top.rows + bottom.rows, top.cols);
        out.entries[..top.entries.len()].copy_from_slice(&top.entries);
        out.entries[top.entries.len()..].copy_from_slice(&bottom.entries);
        out
    }

    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut acc = CompensatedSum::default();
        for i in 0..self.rows {
            acc.add(self.get(i, i));
        }
        acc.value()
    }
}

/// Signed log-determinant: `det = sign * exp(ln_abs)`, sign in {-1, 0, +1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogDet {
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLogDet {
    pub fn value(&self) -> f64 {
        self.sign * self.ln_abs.exp()
    }

    /// Product of two signed-log factors.
    pub fn mul(&self, other: &SignedLogDet) -> SignedLogDet {
        SignedLogDet {
            sign: self.sign * other.sign,
            ln_abs: self.ln_abs + other.ln_abs,
        }
    }
}

/// Real LU factorization (Doolittle, partial pivoting) with
/// Neumaier-compensated inner products.
pub struct RealLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
    sign: f64,
    pub rcond_estimate: f64,
}

impl RealLu {
    pub fn factor(a: &RealMatrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::invalid("LU factorization needs a square matrix"));
        }
        let n = a.rows();
        let mut lu = a.entries.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for j in 0..n {
            // Doolittle column step with compensated dot products.
            for i in 0..n {
                let limit = i.min(j);
                let mut acc = CompensatedSum::default();
                acc.add(lu[i * n + j]);
                for k in 0..limit {
                    acc.add(-lu[i * n + k] * lu[k * n + j]);
                }
                lu[i * n + j] = acc.value();
            }
            let mut p = j;
            let mut best = lu[j * n + j].abs();
            for i in (j + 1)..n {
                let mag = lu[i * n + j].abs();
                if mag > best {
                    best = mag;
                    p = i;
                }
            }
            if p != j {
                for k in 0..n {
                    lu.swap(j * n + k, p * n + k);
                }
                piv.swap(j, p);
                sign = -sign;
            }
            let pivot = lu[j * n + j];
            if pivot != 0.0 {
                for i in (j + 1)..n {
                    lu[i * n + j] /= pivot;
                }
            }
        }
        let mut umin = f64::INFINITY;
        let mut umax: f64 = 0.0;
        for i in 0..n {
            let d = lu[i * n + i].abs();
            umin = umin.min(d);
            umax = umax.max(d);
        }
        let rcond = if umax > 0.0 { umin / umax } else { 0.0 };
        Ok(RealLu {
            n,
            lu,
            piv,
            sign,
            rcond_estimate: rcond,
        })
    }

    pub fn slogdet(&self) -> SignedLogDet {
        let mut sign = self.sign;
        let mut ln_abs = 0.0;
        for i in 0..self.n {
            let d = self.lu[i * self.n + i];
            if d == 0.0 {
                return SignedLogDet {
                    sign: 0.0,
                    ln_abs: f64::NEG_INFINITY,
                };
            }
            sign *= d.signum();
            ln_abs += d.abs().ln();
        }
        SignedLogDet { sign, ln_abs }
    }

    /// Solves `A x = b` for each column of `b`.
    pub fn solve(&self, b: &RealMatrix) -> Result<RealMatrix> {
        let n = self.n;
        if b.rows() != n {
            return Err(Error::invalid("solve dimension mismatch"));
        }
        for i in 0..n {
            if self.lu[i * n + i] == 0.0 {
                return Err(Error::numerical(
                    "singular matrix in solve",
                    Some(self.rcond_estimate),
                ));
            }
        }
        let cols = b.cols();
        let mut x = RealMatrix::zeros(n, cols);
        for c in 0..cols {
            let mut y = vec![0.0; n];
            for i in 0..n {
                let mut acc = CompensatedSum::default();
                acc.add(b.get(self.piv[i], c));
                for k in 0..i {
                    acc.add(-self.lu[i * n + k] * y[k]);
                }
                y[i] = acc.value();
            }
            for i in (0..n).rev() {
                let mut acc = CompensatedSum::default();
                acc.add(y[i]);
                for k in (i + 1)..n {
                    acc.add(-self.lu[i * n + k] * x.get(k, c));
                }
                x.set(i, c, acc.value() / self.lu[i * n + i]);
            }
        }
        Ok(x)
    }
}

/// Signed log-determinant of a real square matrix.
pub fn slogdet_real(a: &RealMatrix) -> Result<SignedLogDet> {
    Ok(RealLu::factor(a)?.slogdet())
}

// ---------------------------------------------------------------------------
// Complex Gaussian sampling
// ---------------------------------------------------------------------------

/// Value-owned random number stream.
///
/// Streams are keyed by `(seed, index)` so disjoint indices give
/// statistically independent substreams, and the draw sequence is fully
/// determined by the key — the basis of the reproducible parallel Monte
/// Carlo in [`crate::montecarlo`].
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// Substream `index` of the family keyed by `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&index.to_le_bytes());
        // Fixed domain tag so other derivations of ChaCha keys cannot collide.
        key[16..24].copy_from_slice(b"mimoexpS");
        RngStream(ChaCha8Rng::from_seed(key))
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    /// Circularly symmetric complex Gaussian with unit variance
    /// (real and imaginary parts each N(0, 1/2)).
    #[inline]
    pub fn complex_gaussian(&mut self) -> Complex64 {
        const HALF_SQRT: f64 = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(
            HALF_SQRT * self.standard_normal(),
            HALF_SQRT * self.standard_normal(),
        )
    }
}

/// Samples a matrix of i.i.d. zero-mean unit-variance complex Gaussians.
pub fn sample_gaussian_matrix(rows: usize, cols: usize, rng: &mut RngStream) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, rng.complex_gaussian());
        }
    }
    m
}

// ---------------------------------------------------------------------------
