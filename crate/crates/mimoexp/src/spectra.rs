//! Eigen-structure of correlation matrices and characteristic coefficients.
//!
//! The closed-form exponent expressions are indexed by the *distinct*
//! eigenvalues of each correlation matrix together with their
//! multiplicities, so repeated eigenvalues must be detected and grouped
//! rather than treated as nearly-equal floats. The characteristic
//! coefficients Ψ_{p,q} are the partial-fraction weights of the reciprocal
//! characteristic polynomial,
//!
//! ```text
//! ∏_p (1 + λ̄_p u)^{-m_p} = Σ_p Σ_{q=1..m_p} Ψ_{p,q} (1 + λ̄_p u)^{-q},
//! ```
//!
//! computed here by the residue/derivative formula for repeated poles in
//! exact rational arithmetic over the eigenvalue floats.

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues_hermitian, ComplexMatrix, HermitianPD};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Default relative tolerance for grouping nearly equal eigenvalues.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-6;

/// Distinct eigenvalues of a Hermitian PD matrix with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenStructure {
    distinct: Vec<f64>,
    mult: Vec<usize>,
    total: usize,
    grouping_tol: f64,
}

impl EigenStructure {
    /// Distinct eigenvalues, strictly decreasing.
    pub fn distinct(&self) -> &[f64] {
        &self.distinct
    }

    /// Multiplicities matching [`Self::distinct`]; they sum to the dimension.
    pub fn mult(&self) -> &[usize] {
        &self.mult
    }

    /// Number of distinct eigenvalues.
    pub fn group_count(&self) -> usize {
        self.distinct.len()
    }

    /// Matrix dimension = Σ multiplicities.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn grouping_tol(&self) -> f64 {
        self.grouping_tol
    }
}

/// Builds the exponential correlation matrix with entry (i,j) = ζ^{|i-j|}.
pub fn exponential_correlation(dim: usize, zeta: f64) -> Result<HermitianPD> {
    if !(0.0..1.0).contains(&zeta) {
        return Err(Error::invalid(format!(
            "exponential correlation coefficient must lie in [0,1), got {zeta}"
        )));
    }
    if dim == 0 {
        return Err(Error::invalid("correlation matrix dimension must be >= 1"));
    }
    let m = ComplexMatrix::from_fn(dim, dim, |i, j| {
        Complex64::new(zeta.powi((i as i32 - j as i32).abs()), 0.0)
    });
    HermitianPD::new(m)
}

/// Clusters the eigenvalues of `a` into groups whose internal spread is at
/// most `grouping_tol · λ_max`; each group is represented by its mean.
pub fn eigen_structure(a: &HermitianPD, grouping_tol: f64) -> EigenStructure {
    assert!(grouping_tol > 0.0, "grouping tolerance must be positive");
    let eigs = eigenvalues_hermitian(a); // descending
    let lambda_max = eigs[0];
    let gap = grouping_tol * lambda_max;

    let mut distinct = Vec::new();
    let mut mult = Vec::new();
    let mut group_start = 0usize;
    for k in 1..=eigs.len() {
        let closes = k == eigs.len() || (eigs[group_start] - eigs[k]) > gap;
        if closes {
            let group = &eigs[group_start..k];
            let mean = group.iter().sum::<f64>() / group.len() as f64;
            distinct.push(mean);
            mult.push(group.len());
            group_start = k;
        }
    }
    EigenStructure {
        distinct,
        mult,
        total: eigs.len(),
        grouping_tol,
    }
}

/// Characteristic coefficients Ψ_{p,q} of an eigen-structure.
///
/// `table[p][q-1]` holds Ψ_{p+1,q} for q = 1..m_{p+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct CharCoeffs {
    table: Vec<Vec<f64>>,
}

impl CharCoeffs {
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.table[p][q - 1]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.table
    }

    /// Evaluates the partial-fraction expansion Σ Ψ_{p,q} (1+λ̄_p u)^{-q}.
    pub fn evaluate(&self, distinct: &[f64], u: f64) -> f64 {
        let mut acc = 0.0;
        for (p, row) in self.table.iter().enumerate() {
            let base = 1.0 + distinct[p] * u;
            for (qm1, psi) in row.iter().enumerate() {
                acc += psi * base.powi(-(qm1 as i32 + 1));
            }
        }
        acc
    }
}

/// Computes the partial-fraction coefficients by the repeated-pole residue
/// formula, carried out in exact rational arithmetic over the eigenvalue
/// floats so that nearby poles cannot cause cancellation.
pub fn characteristic_coefficients(es: &EigenStructure) -> CharCoeffs {
    let rho = es.group_count();
    let lambdas: Vec<BigRational> = es
        .distinct()
        .iter()
        .map(|&l| BigRational::from_float(l).expect("eigenvalue is finite"))
        .collect();

    let mut table = Vec::with_capacity(rho);
    for p in 0..rho {
        let m_p = es.mult()[p];
        // g_p(u) = ∏_{r≠p} (1 + λ_r u)^{-m_r} expanded around u_p = -1/λ_p.
        // With t_r = λ_r λ_p / (λ_p - λ_r):
        //   ln g_p derivative of order s at u_p is (-1)^s (s-1)! Σ m_r t_r^s,
        // and Ψ_{p,q} = g_p^{(m_p - q)}(u_p) / ((m_p-q)! λ_p^{m_p-q}).
        let mut t_vals = Vec::new();
        let mut g0 = BigRational::one();
        for r in 0..rho {
            if r == p {
                continue;
            }
            let diff = &lambdas[p] - &lambdas[r];
            debug_assert!(!diff.is_zero(), "distinct eigenvalues must differ");
            let t_r = &lambdas[r] * &lambdas[p] / &diff;
            // g_p(u_p) factor: ((λ_p - λ_r)/λ_p)^{-m_r}
            let base = &diff / &lambdas[p];
            let inv = base.recip();
            for _ in 0..es.mult()[r] {
                g0 *= inv.clone();
            }
            t_vals.push((es.mult()[r], t_r));
        }

        let k_max = m_p - 1;
        // h^{(s)}(u_p) for s = 1..k_max.
        let mut h_der = vec![BigRational::zero(); k_max + 1];
        for s in 1..=k_max {
            let mut acc = BigRational::zero();
            for (m_r, t_r) in &t_vals {
                let mut pw = BigRational::one();
                for _ in 0..s {
                    pw *= t_r.clone();
                }
                acc += BigRational::from_integer(BigInt::from(*m_r)) * pw;
            }
            let fact = factorial_big(s - 1);
            let sign = if s % 2 == 0 { 1 } else { -1 };
            h_der[s] = BigRational::from_integer(BigInt::from(sign)) * fact * acc;
        }

        // g^{(k+1)} = Σ_j C(k,j) g^{(j)} h^{(k+1-j)} from g' = g·h'.
        let mut g_der = vec![BigRational::zero(); k_max + 1];
        g_der[0] = g0;
        for k in 0..k_max {
            let mut acc = BigRational::zero();
            for j in 0..=k {
                acc += binomial_big(k, j) * &g_der[j] * &h_der[k + 1 - j];
            }
            g_der[k + 1] = acc;
        }

        let mut row = vec![0.0; m_p];
        for q in 1..=m_p {
            let order = m_p - q;
            let mut denom = factorial_big(order);
            for _ in 0..order {
                denom *= lambdas[p].clone();
            }
            let psi = &g_der[order] / denom;
            row[q - 1] = rational_to_f64(&psi);
        }
        table.push(row);
    }
    CharCoeffs { table }
}

fn factorial_big(n: usize) -> BigRational {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    BigRational::from_integer(acc)
}

fn binomial_big(n: usize, k: usize) -> BigRational {
    factorial_big(n) / (factorial_big(k) * factorial_big(n - k))
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("characteristic coefficient fits in f64")
}

// ---------------------------------------------------------------------------
