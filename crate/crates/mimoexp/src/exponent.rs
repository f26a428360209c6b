//! Closed-form evaluation of the Gallager exponent kernel Ẽ₀(ρ,β,N_c) for
//! correlated block-fading MIMO channels, together with its partial
//! derivatives, the ergodic capacity, and the cutoff rate.
//!
//! With Θ the m×m quadratic form of the channel matrix and
//! η = γ/(β(1+ρ)), the kernel is
//!
//! ```text
//! Ẽ₀(ρ,β,N_c) = c(ρ,β) - (1/N_c) ln 𝒵(ρ,β,N_c),
//! c(ρ,β)      = (1+ρ)(n_T - β) + n_T (1+ρ) ln(β/n_T),
//! 𝒵           = E{ det(I_m + η Θ)^{-N_c ρ} }.
//! ```
//!
//! 𝒵 has two determinantal closed forms: an exact finite form when N_c·ρ is
//! an integer in {1,…,m} (built from the characteristic coefficients of Φ₂
//! and the Ξ matrix), and a general form valid for N_c·ρ ∉ {1,…,m-1} (built
//! from the Υ matrix and the constants T_A, T_B). For i.i.d. channels both
//! collapse to a single m×m determinant. All scalar prefactors are carried
//! in signed log-space and all determinants use compensated-LU elimination,
//! since the matrix entries span many orders of magnitude.

use crate::error::{Error, Result};
use crate::linalg::{HermitianPD, RealLu, RealMatrix, SignedLogDet};
use crate::special::{g1, g2, ln_factorial, log_pochhammer_signed, pochhammer};
use crate::spectra::{
    characteristic_coefficients, eigen_structure, exponential_correlation, CharCoeffs,
    EigenStructure, DEFAULT_GROUPING_TOL,
};

/// N_c·ρ within this distance of an integer in {1,…,m} is evaluated on the
/// integer branch, which is exact at the T_B poles {1,…,m-1}.
pub const BRANCH_SNAP_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Channel specification
// ---------------------------------------------------------------------------

/// A block-fading MIMO channel: antenna counts, coherence time, SNR, and
/// transmit/receive correlation.
///
/// SNR is supplied in dB and converted once; internally γ = 𝒫/N₀ with
/// N₀ = 1, so the total transmit power equals γ.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    n_t: usize,
    n_r: usize,
    n_c: usize,
    gamma_db: f64,
    gamma: f64,
    phi_t: HermitianPD,
    phi_r: HermitianPD,
    /// Exponential-model coefficients when built from them (kept for reporting).
    zeta: Option<(f64, f64)>,
}

impl ChannelSpec {
    /// Uncorrelated (i.i.d.) channel.
    pub fn iid(n_t: usize, n_r: usize, n_c: usize, gamma_db: f64) -> Result<Self> {
        Self::with_correlation(
            n_t,
            n_r,
            n_c,
            gamma_db,
            HermitianPD::identity(n_t),
            HermitianPD::identity(n_r),
        )
    }

    /// Exponential correlation model: Φ entries ζ^{|i-j|} on each side.
    pub fn exponential(
        n_t: usize,
        n_r: usize,
        n_c: usize,
        gamma_db: f64,
        zeta_t: f64,
        zeta_r: f64,
    ) -> Result<Self> {
        let mut spec = Self::with_correlation(
            n_t,
            n_r,
            n_c,
            gamma_db,
            exponential_correlation(n_t, zeta_t)?,
            exponential_correlation(n_r, zeta_r)?,
        )?;
        spec.zeta = Some((zeta_t, zeta_r));
        Ok(spec)
    }

    /// Explicit correlation matrices (must have unit diagonal: E|H_ij|² = 1).
    pub fn with_correlation(
        n_t: usize,
        n_r: usize,
        n_c: usize,
        gamma_db: f64,
        phi_t: HermitianPD,
        phi_r: HermitianPD,
    ) -> Result<Self> {
        if n_t < 1 || n_r < 1 {
            return Err(Error::invalid("need at least one antenna on each side"));
        }
        if n_c < 1 {
            return Err(Error::invalid("coherence time N_c must be >= 1"));
        }
        if !gamma_db.is_finite() {
            return Err(Error::invalid("SNR in dB must be finite"));
        }
        if phi_t.dim() != n_t || phi_r.dim() != n_r {
            return Err(Error::invalid(format!(
                "correlation dimensions ({}, {}) do not match antennas ({n_t}, {n_r})",
                phi_t.dim(),
                phi_r.dim()
            )));
        }
        for (name, phi) in [("transmit", &phi_t), ("receive", &phi_r)] {
            for i in 0..phi.dim() {
                let d = phi.matrix().get(i, i);
                if (d.re - 1.0).abs() > 1e-12 || d.im.abs() > 1e-12 {
                    return Err(Error::invalid(format!(
                        "{name} correlation diagonal entry {i} is {d}, expected 1 (unit channel gains)"
                    )));
                }
            }
        }
        let gamma = 10f64.powf(gamma_db / 10.0);
        Ok(ChannelSpec {
            n_t,
            n_r,
            n_c,
            gamma_db,
            gamma,
            phi_t,
            phi_r,
            zeta: None,
        })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    /// Same channel with a different coherence time.
    pub fn with_n_c(&self, n_c: usize) -> Result<Self> {
        let mut s = self.clone();
        if n_c < 1 {
            return Err(Error::invalid("coherence time N_c must be >= 1"));
        }
        s.n_c = n_c;
        Ok(s)
    }

    /// m = min(n_T, n_R).
    pub fn m(&self) -> usize {
        self.n_t.min(self.n_r)
    }

    /// n = max(n_T, n_R).
    pub fn n(&self) -> usize {
        self.n_t.max(self.n_r)
    }

    /// Linear SNR γ = 𝒫/N₀.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_db(&self) -> f64 {
        self.gamma_db
    }

    /// Total transmit power 𝒫 (equals γ with N₀ = 1).
    pub fn total_power(&self) -> f64 {
        self.gamma
    }

    pub fn phi_t(&self) -> &HermitianPD {
        &self.phi_t
    }

    pub fn phi_r(&self) -> &HermitianPD {
        &self.phi_r
    }

    /// Φ₁: the correlation on the side of the smaller antenna array
    /// (Φ_R if n_R ≤ n_T, else Φ_T), an m×m matrix.
    pub fn phi1(&self) -> &HermitianPD {
        if self.n_r <= self.n_t {
            &self.phi_r
        } else {
            &self.phi_t
        }
    }

    /// Φ₂: the correlation on the larger side, an n×n matrix.
    pub fn phi2(&self) -> &HermitianPD {
        if self.n_r <= self.n_t {
            &self.phi_t
        } else {
            &self.phi_r
        }
    }

    pub fn is_iid(&self) -> bool {
        self.phi_t.is_identity() && self.phi_r.is_identity()
    }

    /// Exponential-model coefficients when this spec was built from them.
    pub fn zeta(&self) -> Option<(f64, f64)> {
        self.zeta
    }
}

/// c(ρ,β) = (1+ρ)(n_T - β) + n_T (1+ρ) ln(β/n_T).
pub fn c_const(rho: f64, beta: f64, n_t: usize) -> f64 {
    let nt = n_t as f64;
    (1.0 + rho) * (nt - beta) + nt * (1.0 + rho) * (beta / nt).ln()
}

/// ∂c/∂ρ = (n_T - β) + n_T ln(β/n_T).
pub fn c_const_drho(beta: f64, n_t: usize) -> f64 {
    let nt = n_t as f64;
    (nt - beta) + nt * (beta / nt).ln()
}

/// ∂c/∂β = (1+ρ)(n_T - β)/β.
pub fn c_const_dbeta(rho: f64, beta: f64, n_t: usize) -> f64 {
    let nt = n_t as f64;
    (1.0 + rho) * (nt - beta) / beta
}

// ---------------------------------------------------------------------------
// Evaluator with per-spec precomputation
// ---------------------------------------------------------------------------

/// Closed-form evaluator bound to one [`ChannelSpec`].
///
/// Construction precomputes the eigen-structures, characteristic
/// coefficients, and every ρ-independent determinant entering T_B and
/// K_cor, so repeated (ρ,β) evaluations (optimizer sweeps) stay cheap.
pub struct ExponentEvaluator<'a> {
    spec: &'a ChannelSpec,
    m: usize,
    n: usize,
    nt_f: f64,
    nc_f: f64,
    iid: bool,
    es1: EigenStructure,
    es2: EigenStructure,
    cc2: CharCoeffs,
    t_a: f64,
    ln_det_phi1: f64,
    ln_det_phi2: f64,
    slog_c_m_phi1: SignedLogDet,
    slog_gbar_m_phi1: SignedLogDet,
    slog_c_n_phi2: SignedLogDet,
    c_top_phi2: RealMatrix,
}

impl<'a> ExponentEvaluator<'a> {
    pub fn new(spec: &'a ChannelSpec) -> Result<Self> {
        let m = spec.m();
        let n = spec.n();
        let es1 = eigen_structure(spec.phi1(), DEFAULT_GROUPING_TOL);
        let es2 = eigen_structure(spec.phi2(), DEFAULT_GROUPING_TOL);
        let cc2 = characteristic_coefficients(&es2);

        // T_A = m(m+1)/2 - Σ_i m_i(m_i + 1)/2 over the Φ₁ multiplicities.
        let mf = m as f64;
        let t_a = 0.5 * mf * (mf + 1.0)
            - 0.5
                * es1
                    .mult()
                    .iter()
                    .map(|&mi| (mi * (mi + 1)) as f64)
                    .sum::<f64>();

        let ln_det_phi1 = spec.phi1().ln_det();
        let ln_det_phi2 = spec.phi2().ln_det();
        let slog_c_m_phi1 = crate::linalg::slogdet_real(&c_block(&es1, m))?;
        let slog_gbar_m_phi1 = crate::linalg::slogdet_real(&gbar_block(&es1, m))?;
        let slog_c_n_phi2 = crate::linalg::slogdet_real(&c_block(&es2, n))?;
        let c_top_phi2 = c_block(&es2, n - m);

        Ok(ExponentEvaluator {
            iid: spec.is_iid(),
            spec,
            m,
            n,
            nt_f: spec.n_t() as f64,
            nc_f: spec.n_c() as f64,
            es1,
            es2,
            cc2,
            t_a,
            ln_det_phi1,
            ln_det_phi2,
            slog_c_m_phi1,
            slog_gbar_m_phi1,
            slog_c_n_phi2,
            c_top_phi2,
        })
    }

    pub fn spec(&self) -> &ChannelSpec {
        self.spec
    }

    fn eta(&self, rho: f64, beta: f64) -> f64 {
        self.spec.gamma() / (beta * (1.0 + rho))
    }

    fn validate(&self, rho: f64, beta: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::invalid(format!("rho must lie in [0,1], got {rho}")));
        }
        if !(beta > 0.0 && beta <= self.nt_f) {
            return Err(Error::invalid(format!(
                "beta must lie in (0, n_T], got {beta}"
            )));
        }
        Ok(())
    }

    /// Snaps ρ to the integer branch when N_c·ρ is within [`BRANCH_SNAP_TOL`]
    /// of an integer in {1,…,m} (correlated channels only; the i.i.d. form
    /// has no poles).
    fn effective_rho(&self, rho: f64) -> f64 {
        if self.iid {
            return rho;
        }
        let x = self.nc_f * rho;
        let k = x.round();
        if k >= 1.0 && (k as usize) <= self.m && (x - k).abs() <= BRANCH_SNAP_TOL {
            k / self.nc_f
        } else {
            rho
        }
    }

    fn nearest_excluded_integer(&self, rho: f64) -> Option<usize> {
        let x = self.nc_f * rho;
        let k = x.round();
        if k >= 1.0 && (k as usize) <= self.m - 1 && (x - k).abs() <= BRANCH_SNAP_TOL {
            Some(k as usize)
        } else {
            None
        }
    }

    // -- Ẽ₀ and ln 𝒵 ------------------------------------------------------

    /// Ẽ₀(ρ,β,N_c).
    pub fn e0(&self, rho: f64, beta: f64) -> Result<f64> {
        self.validate(rho, beta)?;
        self.e0_inner(rho, beta)
    }

    /// Internal variant that tolerates ρ slightly above 1 (analytic
    /// continuation used by finite-difference fallbacks).
    fn e0_inner(&self, rho: f64, beta: f64) -> Result<f64> {
        let rho = self.effective_rho(rho);
        Ok(c_const(rho, beta, self.spec.n_t()) - self.log_zeta_inner(rho, beta)? / self.nc_f)
    }

    /// ln 𝒵(ρ,β,N_c) via the closed determinantal forms.
    pub fn log_zeta(&self, rho: f64, beta: f64) -> Result<f64> {
        self.validate(rho, beta)?;
        self.log_zeta_inner(self.effective_rho(rho), beta)
    }

    fn log_zeta_inner(&self, rho: f64, beta: f64) -> Result<f64> {
        if rho == 0.0 {
            return Ok(0.0); // det^0 ≡ 1
        }
        if self.iid {
            return self.log_zeta_iid(rho, beta);
        }
        let x = self.nc_f * rho;
        let k = x.round();
        if k >= 1.0 && (k as usize) <= self.m && (x - k).abs() <= BRANCH_SNAP_TOL {
            self.log_zeta_integer(k as usize, beta)
        } else {
            self.log_zeta_general(rho, beta)
        }
    }

    /// Integer branch: 𝒵 = K_cor^{-1} det[ C_(m-N_cρ)(Φ₁) ; Ξ(ρ,β) ] for
    /// N_c·ρ = k ∈ {1,…,m}. Exact at the T_B poles.
    pub fn log_zeta_integer(&self, k: usize, beta: f64) -> Result<f64> {
        if k < 1 || k > self.m {
            return Err(Error::invalid(format!(
                "integer branch needs N_c·rho in 1..={}, got {k}",
                self.m
            )));
        }
        let rho = k as f64 / self.nc_f;
        let eta = self.eta(rho, beta);

        let xi = self.xi_matrix(k, eta)?;
        let top = c_block(&self.es1, self.m - k);
        let stacked = RealMatrix::vstack(&top, &xi);
        let lu = RealLu::factor(&stacked)?;
        let det = lu.slogdet();

        // K_cor = det(Φ₁)^{N_cρ} det{C_(m)(Φ₁)} ∏_{j=1}^{N_cρ} (j-1)!
        let mut ln_kcor = k as f64 * self.ln_det_phi1 + self.slog_c_m_phi1.ln_abs;
        for j in 1..=k {
            ln_kcor += ln_factorial(j - 1);
        }
        let sign = det.sign * self.slog_c_m_phi1.sign;
        if sign <= 0.0 {
            return Err(Error::numerical(
                "integer-branch determinant has non-positive sign",
                Some(lu.rcond_estimate),
            ));
        }
        Ok(det.ln_abs - ln_kcor)
    }

    /// General branch: 𝒵 = η^{-T_A} T_B(ρ,N_c) det[ C_(n-m)(Φ₂) ; Υ(ρ,β) ],
    /// valid for N_c·ρ ∉ {1,…,m-1}.
    pub fn log_zeta_general(&self, rho: f64, beta: f64) -> Result<f64> {
        let eta = self.eta(rho, beta);
        let nc_rho = self.nc_f * rho;

        let ups = self.upsilon(eta, nc_rho)?;
        let stacked = RealMatrix::vstack(&self.c_top_phi2, &ups);
        let lu = RealLu::factor(&stacked)?;
        let det = lu.slogdet();

        let tb = self.t_b_signed_log(nc_rho)?;
        let sign = det.sign * tb.sign;
        if sign <= 0.0 {
            return Err(Error::numerical(
                "general-branch determinant has non-positive sign",
                Some(lu.rcond_estimate),
            ));
        }
        Ok(-self.t_a * eta.ln() + tb.ln_abs + det.ln_abs)
    }

    /// i.i.d. form: 𝒵 = K_iid^{-1} det Υ_iid(ρ,β), valid for every ρ.
    pub fn log_zeta_iid(&self, rho: f64, beta: f64) -> Result<f64> {
        let eta = self.eta(rho, beta);
        let nc_rho = self.nc_f * rho;
        let ups = self.upsilon_iid(eta, nc_rho)?;
        let lu = RealLu::factor(&ups)?;
        let det = lu.slogdet();
        if det.sign <= 0.0 {
            return Err(Error::numerical(
                "iid determinant has non-positive sign",
                Some(lu.rcond_estimate),
            ));
        }
        Ok(det.ln_abs - self.ln_k_iid())
    }

    fn ln_k_iid(&self) -> f64 {
        (1..=self.m)
            .map(|k| ln_factorial(self.n - k) + ln_factorial(k - 1))
            .sum()
    }

    /// T_B(ρ,N_c) in signed log-space.
    fn t_b_signed_log(&self, nc_rho: f64) -> Result<SignedLogDet> {
        let base = nc_rho - self.m as f64 + 1.0;
        let mut sign = 1.0f64;
        let mut ln_abs = -(self.m as f64) * self.ln_det_phi2;

        for part in [&self.slog_gbar_m_phi1, &self.slog_c_n_phi2] {
            if part.sign == 0.0 {
                return Err(Error::numerical(
                    "degenerate eigen-structure determinant in T_B",
                    None,
                ));
            }
            sign *= part.sign;
            ln_abs -= part.ln_abs;
        }

        for &mi in self.es1.mult() {
            for j in 1..=mi {
                let (s, l) = log_pochhammer_signed(base, j - 1);
                if s == 0 {
                    return Err(Error::numerical(
                        format!("T_B Pochhammer zero at N_c·rho = {nc_rho}"),
                        None,
                    ));
                }
                sign *= s as f64;
                ln_abs += l;
            }
        }
        for k in 1..=self.m {
            let (s, l) = log_pochhammer_signed(base, k - 1);
            if s == 0 {
                return Err(Error::numerical(
                    format!("T_B pole at N_c·rho = {nc_rho}"),
                    None,
                ));
            }
            sign *= s as f64;
            ln_abs -= l;
        }
        Ok(SignedLogDet { sign, ln_abs })
    }

    // -- Partial derivatives ------------------------------------------------

    /// ∂Ẽ₀/∂β. Analytic on the general branch; central finite differences of
    /// the integer-branch Ẽ₀ when N_c·ρ ∈ {1,…,m-1}.
    pub fn d_e0_dbeta(&self, rho: f64, beta: f64) -> Result<f64> {
        self.validate(rho, beta)?;
        if rho == 0.0 {
            return Ok(c_const_dbeta(0.0, beta, self.spec.n_t())); // 𝒵 ≡ 1
        }
        let nt = self.spec.n_t();
        if self.iid {
            let eta = self.eta(rho, beta);
            let nc_rho = self.nc_f * rho;
            let ups = self.upsilon_iid(eta, nc_rho)?;
            let dups = self.upsilon_iid_dbeta(eta, nc_rho, rho, beta)?;
            let tr = trace_of_solve(&ups, &dups)?;
            return Ok(c_const_dbeta(rho, beta, nt) - tr / self.nc_f);
        }
        let rho = self.effective_rho(rho);
        if self.nearest_excluded_integer(rho).is_some() {
            // Exact integer-branch values, differentiated numerically in β.
            let h = 1e-5 * beta;
            let hi = self.e0_inner(rho, (beta + h).min(self.nt_f))?;
            let lo = self.e0_inner(rho, beta - h)?;
            return Ok((hi - lo) / ((beta + h).min(self.nt_f) - (beta - h)));
        }
        let eta = self.eta(rho, beta);
        let nc_rho = self.nc_f * rho;
        let ups = self.upsilon(eta, nc_rho)?;
        let dups = self.upsilon_dbeta(eta, nc_rho, rho, beta)?;
        let stacked = RealMatrix::vstack(&self.c_top_phi2, &ups);
        let zero_top = RealMatrix::zeros(self.n - self.m, self.n);
        let rhs = RealMatrix::vstack(&zero_top, &dups);
        let tr = trace_of_solve(&stacked, &rhs)?;
        Ok(c_const_dbeta(rho, beta, nt) - self.t_a / (self.nc_f * beta) - tr / self.nc_f)
    }

    /// ∂Ẽ₀/∂ρ. Analytic wherever N_c·ρ ∉ {1,…,m-1}; near those points a
    /// central finite difference with a straddle-avoiding step is used.
    pub fn d_e0_drho(&self, rho: f64, beta: f64) -> Result<f64> {
        self.validate(rho, beta)?;
        let nt = self.spec.n_t();
        if self.iid {
            let eta = self.eta(rho, beta);
            let nc_rho = self.nc_f * rho;
            let ups = self.upsilon_iid(eta, nc_rho)?;
            let dups = self.upsilon_iid_drho(eta, nc_rho, rho, beta)?;
            let tr = trace_of_solve(&ups, &dups)?;
            return Ok(c_const_drho(beta, nt) - tr / self.nc_f);
        }
        let rho_eff = self.effective_rho(rho);
        if self.nearest_excluded_integer(rho_eff).is_some() {
            // Step keeps both evaluation points a fixed distance (in N_c·ρ
            // units) from the pole and away from other excluded integers.
            let h = 1e-3 / self.nc_f;
            let hi = self.e0_inner(rho_eff + h, beta)?;
            let lo = self.e0_inner(rho_eff - h, beta)?;
            return Ok((hi - lo) / (2.0 * h));
        }
        let eta = self.eta(rho_eff, beta);
        let nc_rho = self.nc_f * rho_eff;

        let mut acc = c_const_drho(beta, nt) - self.t_a / (self.nc_f * (1.0 + rho_eff));
        for (&_li, &mi) in self.es1.distinct().iter().zip(self.es1.mult()) {
            for j in 1..=(mi.saturating_sub(1)) {
                acc -= j as f64 / (nc_rho - self.m as f64 + mi as f64 - j as f64);
            }
        }
        for k in 1..self.m {
            acc += k as f64 / (nc_rho - k as f64);
        }

        let ups = self.upsilon(eta, nc_rho)?;
        let dups = self.upsilon_drho(eta, nc_rho, rho_eff, beta)?;
        let stacked = RealMatrix::vstack(&self.c_top_phi2, &ups);
        let zero_top = RealMatrix::zeros(self.n - self.m, self.n);
        let rhs = RealMatrix::vstack(&zero_top, &dups);
        let tr = trace_of_solve(&stacked, &rhs)?;
        Ok(acc - tr / self.nc_f)
    }

    // -- Capacity and cutoff rate -------------------------------------------

    /// Ergodic capacity ⟨C⟩ in nats/symbol via the Λ-matrix trace formula.
    /// Independent of N_c by construction.
    pub fn ergodic_capacity(&self) -> Result<f64> {
        let eta0 = self.spec.gamma() / self.nt_f;
        let ups = self.upsilon(eta0, 0.0)?; // Υ(0, n_T)
        let lam = self.lambda_capacity(eta0)?;
        let stacked = RealMatrix::vstack(&self.c_top_phi2, &ups);
        let zero_top = RealMatrix::zeros(self.n - self.m, self.n);
        let rhs = RealMatrix::vstack(&zero_top, &lam);
        let tr = trace_of_solve(&stacked, &rhs)?;

        let mut cap = tr - (self.m as f64 - 1.0);
        for &mi in self.es1.mult() {
            for j in 1..=(mi.saturating_sub(1)) {
                cap += j as f64 / ((self.m - mi + j) as f64);
            }
        }
        Ok(cap)
    }

    /// Cutoff rate R₀ = Ẽ₀(1, n_T, N_c) in nats/symbol.
    pub fn cutoff_rate(&self) -> Result<f64> {
        self.e0(1.0, self.nt_f)
    }

    // -- Table-driven matrix builders ----------------------------------------

    /// Ξ(ρ,β) ∈ R^{k×m} for the integer branch, k = N_c·ρ.
    fn xi_matrix(&self, k: usize, eta: f64) -> Result<RealMatrix> {
        let mut xi = RealMatrix::zeros(k, self.m);
        let mut col0 = 0usize;
        for (kb, (&l1, &m1)) in self
            .es1
            .distinct()
            .iter()
            .zip(self.es1.mult())
            .enumerate()
        {
            for j in 1..=m1 {
                for i in 1..=k {
                    let mut acc = 0.0;
                    for (p, &l2) in self.es2.distinct().iter().enumerate() {
                        for q in 1..=self.es2.mult()[p] {
                            let psi = self.cc2.get(p, q);
                            if psi == 0.0 {
                                continue;
                            }
                            acc += psi * g1(i + j - 1, eta * l2, l1, 1.0 - q as f64)?;
                        }
                    }
                    xi.set(i - 1, col0 + j - 1, acc);
                }
            }
            let _ = kb;
            col0 += m1;
        }
        Ok(xi)
    }

    /// Υ(ρ,β) ∈ R^{m×n} with blocks over (Φ₁, Φ₂) eigenvalue groups.
    fn upsilon(&self, eta: f64, nc_rho: f64) -> Result<RealMatrix> {
        let mut ups = RealMatrix::zeros(self.m, self.n);
        let mut row0 = 0usize;
        for (&l1, &m1) in self.es1.distinct().iter().zip(self.es1.mult()) {
            let mut col0 = 0usize;
            for (&l2, &m2) in self.es2.distinct().iter().zip(self.es2.mult()) {
                for i in 1..=m1 {
                    let mu = -nc_rho + (self.m - i + 1) as f64;
                    for j in 1..=m2 {
                        ups.set(row0 + i - 1, col0 + j - 1, g1(i + j - 1, eta * l1, l2, mu)?);
                    }
                }
                col0 += m2;
            }
            row0 += m1;
        }
        Ok(ups)
    }

    /// Υ^{(β)} = ∂Υ/∂β.
    fn upsilon_dbeta(&self, eta: f64, nc_rho: f64, rho: f64, beta: f64) -> Result<RealMatrix> {
        let scale = self.spec.gamma() / (beta * beta * (1.0 + rho));
        let mut out = RealMatrix::zeros(self.m, self.n);
        let mut row0 = 0usize;
        for (&l1, &m1) in self.es1.distinct().iter().zip(self.es1.mult()) {
            let mut col0 = 0usize;
            for (&l2, &m2) in self.es2.distinct().iter().zip(self.es2.mult()) {
                for i in 1..=m1 {
                    let factor = scale * (nc_rho - (self.m - i) as f64) * l1;
                    let mu = -nc_rho + (self.m - i) as f64;
                    for j in 1..=m2 {
                        out.set(
                            row0 + i - 1,
                            col0 + j - 1,
                            factor * g1(i + j, eta * l1, l2, mu)?,
                        );
                    }
                }
                col0 += m2;
            }
            row0 += m1;
        }
        Ok(out)
    }

    /// Υ^{(ρ)} = ∂Υ/∂ρ = (β/(1+ρ)) Υ^{(β)} - N_c · [G₂ entries].
    fn upsilon_drho(&self, eta: f64, nc_rho: f64, rho: f64, beta: f64) -> Result<RealMatrix> {
        let dbeta = self.upsilon_dbeta(eta, nc_rho, rho, beta)?;
        let chain = beta / (1.0 + rho);
        let mut out = RealMatrix::zeros(self.m, self.n);
        let mut row0 = 0usize;
        for (&l1, &m1) in self.es1.distinct().iter().zip(self.es1.mult()) {
            let mut col0 = 0usize;
            for (&l2, &m2) in self.es2.distinct().iter().zip(self.es2.mult()) {
                for i in 1..=m1 {
                    let mu = -nc_rho + (self.m - i + 1) as f64;
                    for j in 1..=m2 {
                        let v = chain * dbeta.get(row0 + i - 1, col0 + j - 1)
                            - self.nc_f * g2(i + j - 1, eta * l1, l2, mu)?;
                        out.set(row0 + i - 1, col0 + j - 1, v);
                    }
                }
                col0 += m2;
            }
            row0 += m1;
        }
        Ok(out)
    }

    fn upsilon_iid(&self, eta: f64, nc_rho: f64) -> Result<RealMatrix> {
        let base = self.n - self.m;
        let mut ups = RealMatrix::zeros(self.m, self.m);
        for i in 1..=self.m {
            for j in 1..=self.m {
                ups.set(
                    i - 1,
                    j - 1,
                    g1(base + i + j - 1, eta, 1.0, 1.0 - nc_rho)?,
                );
            }
        }
        Ok(ups)
    }

    fn upsilon_iid_dbeta(&self, eta: f64, nc_rho: f64, rho: f64, beta: f64) -> Result<RealMatrix> {
        let base = self.n - self.m;
        let scale = nc_rho * self.spec.gamma() / (beta * beta * (1.0 + rho));
        let mut out = RealMatrix::zeros(self.m, self.m);
        for i in 1..=self.m {
            for j in 1..=self.m {
                out.set(i - 1, j - 1, scale * g1(base + i + j, eta, 1.0, -nc_rho)?);
            }
        }
        Ok(out)
    }

    fn upsilon_iid_drho(&self, eta: f64, nc_rho: f64, rho: f64, beta: f64) -> Result<RealMatrix> {
        let base = self.n - self.m;
        let dbeta = self.upsilon_iid_dbeta(eta, nc_rho, rho, beta)?;
        let chain = beta / (1.0 + rho);
        let mut out = RealMatrix::zeros(self.m, self.m);
        for i in 1..=self.m {
            for j in 1..=self.m {
                let v = chain * dbeta.get(i - 1, j - 1)
                    - self.nc_f * g2(base + i + j - 1, eta, 1.0, 1.0 - nc_rho)?;
                out.set(i - 1, j - 1, v);
            }
        }
        Ok(out)
    }

    /// Λ for the capacity corollary: Λ_{p,q,ij} = G_{i+j-1,2}(γλ̄₁_p/n_T, λ̄₂_q, m-i+1).
    fn lambda_capacity(&self, eta0: f64) -> Result<RealMatrix> {
        let mut lam = RealMatrix::zeros(self.m, self.n);
        let mut row0 = 0usize;
        for (&l1, &m1) in self.es1.distinct().iter().zip(self.es1.mult()) {
            let mut col0 = 0usize;
            for (&l2, &m2) in self.es2.distinct().iter().zip(self.es2.mult()) {
                for i in 1..=m1 {
                    let mu = (self.m - i + 1) as f64;
                    for j in 1..=m2 {
                        lam.set(row0 + i - 1, col0 + j - 1, g2(i + j - 1, eta0 * l1, l2, mu)?);
                    }
                }
                col0 += m2;
            }
            row0 += m1;
        }
        Ok(lam)
    }
}

/// C_(ν)(Ψ): ν×p matrix with block-k (i,j) entry
/// (-1)^{i-j} (i-j+1)_{j-1} λ̄_k^{j-i}.
fn c_block(es: &EigenStructure, nu: usize) -> RealMatrix {
    let p = es.total();
    let mut out = RealMatrix::zeros(nu, p);
    let mut col0 = 0usize;
    for (&lk, &mk) in es.distinct().iter().zip(es.mult()) {
        for j in 1..=mk {
            for i in 1..=nu {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                let v = sign
                    * pochhammer((i as f64) - (j as f64) + 1.0, j - 1)
                    * lk.powi(j as i32 - i as i32);
                out.set(i - 1, col0 + j - 1, v);
            }
        }
        col0 += mk;
    }
    out
}

/// Ḡ_(ν)(Ψ): like C_(ν) but with λ̄_k^{i-j}.
fn gbar_block(es: &EigenStructure, nu: usize) -> RealMatrix {
    let p = es.total();
    let mut out = RealMatrix::zeros(nu, p);
    let mut col0 = 0usize;
    for (&lk, &mk) in es.distinct().iter().zip(es.mult()) {
        for j in 1..=mk {
            for i in 1..=nu {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                let v = sign
                    * pochhammer((i as f64) - (j as f64) + 1.0, j - 1)
                    * lk.powi(i as i32 - j as i32);
                out.set(i - 1, col0 + j - 1, v);
            }
        }
        col0 += mk;
    }
    out
}

/// tr(A⁻¹ B) via LU solve.
fn trace_of_solve(a: &RealMatrix, b: &RealMatrix) -> Result<f64> {
    let lu = RealLu::factor(a)?;
    Ok(lu.solve(b)?.trace())
}

// ---------------------------------------------------------------------------
// Free-function API
// ---------------------------------------------------------------------------

/// Ẽ₀(ρ,β,N_c) for the given channel.
pub fn e0_tilde(spec: &ChannelSpec, rho: f64, beta: f64) -> Result<f64> {
    ExponentEvaluator::new(spec)?.e0(rho, beta)
}

/// ln 𝒵(ρ,β,N_c); `exp` of this is directly comparable to the Monte Carlo
/// estimate of E{det(I + ηΘ)^{-N_cρ}}.
pub fn log_zeta(spec: &ChannelSpec, rho: f64, beta: f64) -> Result<f64> {
    ExponentEvaluator::new(spec)?.log_zeta(rho, beta)
}

/// ∂Ẽ₀/∂β.
pub fn d_e0_dbeta(spec: &ChannelSpec, rho: f64, beta: f64) -> Result<f64> {
    ExponentEvaluator::new(spec)?.d_e0_dbeta(rho, beta)
}

/// ∂Ẽ₀/∂ρ. At (0, n_T) this is the ergodic capacity.
pub fn d_e0_drho(spec: &ChannelSpec, rho: f64, beta: f64) -> Result<f64> {
    ExponentEvaluator::new(spec)?.d_e0_drho(rho, beta)
}

/// Ergodic capacity ⟨C⟩ in nats/symbol.
pub fn ergodic_capacity(spec: &ChannelSpec) -> Result<f64> {
    ExponentEvaluator::new(spec)?.ergodic_capacity()
}

/// Cutoff rate R₀ in nats/symbol.
pub fn cutoff_rate(spec: &ChannelSpec) -> Result<f64> {
    ExponentEvaluator::new(spec)?.cutoff_rate()
}

/// Nat → bit conversion for presentation.
pub fn nats_to_bits(x: f64) -> f64 {
    x / std::f64::consts::LN_2
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_dbeta(ev: &ExponentEvaluator, rho: f64, beta: f64) -> f64 {
        let h = 1e-5 * beta;
        let hi = ev.e0(rho, beta + h).unwrap();
        let lo = ev.e0(rho, beta - h).unwrap();
        (hi - lo) / (2.0 * h)
    }

    fn fd_drho(ev: &ExponentEvaluator, rho: f64, beta: f64) -> f64 {
        let h = 1e-5;
        let hi = ev.e0_inner(rho + h, beta).unwrap();
        let lo = ev.e0_inner(rho - h, beta).unwrap();
        (hi - lo) / (2.0 * h)
    }

    #[test]
    fn e0_vanishes_at_rho_zero_beta_nt() {
        let spec = ChannelSpec::iid(3, 3, 5, 15.0).unwrap();
        assert_eq!(e0_tilde(&spec, 0.0, 3.0).unwrap(), 0.0);
        // At other beta, Ẽ₀(0,β) = c(0,β) exactly.
        let beta = 1.7;
        assert_eq!(
            e0_tilde(&spec, 0.0, beta).unwrap(),
            c_const(0.0, beta, 3)
        );
    }

    #[test]
    fn iid_formula_matches_correlated_integer_branch() {
        // With identity correlations, the correlated integer-branch path and
        // the dedicated i.i.d. form must agree.
        for (nt, nr) in [(2, 2), (3, 3), (2, 3)] {
            let spec = ChannelSpec::iid(nt, nr, 2, 10.0).unwrap();
            let ev = ExponentEvaluator::new(&spec).unwrap();
            let m = spec.m();
            for k in 1..=m {
                let rho = k as f64 / 2.0;
                if rho > 1.0 {
                    continue;
                }
                for beta in [0.6 * nt as f64, nt as f64] {
                    let a = ev.log_zeta_integer(k, beta).unwrap();
                    let b = ev.log_zeta_iid(rho, beta).unwrap();
                    assert!(
                        (a - b).abs() < 1e-8,
                        "branch mismatch nt={nt} nr={nr} k={k} beta={beta}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn general_branch_matches_iid_formula_off_integers() {
        // The general correlated path evaluated with identity correlations
        // should also reproduce the i.i.d. form away from the poles.
        let spec = ChannelSpec::iid(3, 3, 5, 12.0).unwrap();
        let ev = ExponentEvaluator::new(&spec).unwrap();
        for rho in [0.07, 0.33, 0.68, 0.9] {
            let beta = 2.4;
            let a = ev.log_zeta_general(rho, beta).unwrap();
            let b = ev.log_zeta_iid(rho, beta).unwrap();
            assert!(
                (a - b).abs() < 1e-7,
                "general vs iid at rho={rho}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn branch_consistency_at_integer_points() {
        // Integer-branch value equals the general branch extrapolated from
        // both sides.
        let spec = ChannelSpec::exponential(3, 3, 5, 15.0, 0.5, 0.7).unwrap();
        let ev = ExponentEvaluator::new(&spec).unwrap();
        let beta = 2.5;
        for k in 1..=3usize {
            let rho = k as f64 / 5.0;
            let exact = ev.e0(rho, beta).unwrap();
            let d = 1e-4;
            let above = ev.e0(rho + d, beta).unwrap();
            let below = ev.e0(rho - d, beta).unwrap();
            let extrapolated = 0.5 * (above + below);
            assert!(
                (exact - extrapolated).abs() < 1e-6,
                "k={k}: integer branch {exact} vs extrapolation {extrapolated}"
            );
        }
    }

    #[test]
    fn dbeta_matches_finite_difference() {
        let spec = ChannelSpec::iid(3, 3, 5, 15.0).unwrap();
        let ev = ExponentEvaluator::new(&spec).unwrap();
        for (rho, beta) in [(0.5, 2.0), (0.9, 2.8), (0.21, 1.2)] {
            let analytic = ev.d_e0_dbeta(rho, beta).unwrap();
            let fd = fd_dbeta(&ev, rho, beta);
            assert!(
                (analytic - fd).abs() <= 1e-5 * analytic.abs().max(1e-3),
                "rho={rho} beta={beta}: analytic {analytic} vs fd {fd}"
            );
        }
        let spec = ChannelSpec::exponential(2, 3, 4, 10.0, 0.4, 0.6).unwrap();
        let ev = ExponentEvaluator::new(&spec).unwrap();
        for (rho, beta) in [(0.3, 1.5), (0.9, 1.9)] {
            let analytic = ev.d_e0_dbeta(rho, beta).unwrap();
            let fd = fd_dbeta(&ev, rho, beta);
            assert!(
                (analytic - fd).abs() <= 1e-5 * analytic.abs().max(1e-3),
                "corr rho={rho} beta={beta}: analytic {analytic} vs fd {fd}"
            );
        }
    }

    #[test]
    fn dbeta_at_rho_zero_is_constant_term() {
        let spec = ChannelSpec::exponential(3, 3, 5, 15.0, 0.5, 0.7).unwrap();
        let beta = 2.2;
        let got = d_e0_dbeta(&spec, 0.0, beta).unwrap();
        assert_eq!(got, (3.0 - beta) / beta);
    }

    #[test]
    fn drho_matches_finite_difference() {
        let spec = ChannelSpec::iid(3, 3, 1, 15.0).unwrap();
        let ev = ExponentEvaluator::new(&spec).unwrap();
        for (rho, beta) in [(0.3, 2.5), (0.77, 3.0)] {
            let analytic = ev.d_e0_drho(rho, beta).unwrap();
            let fd = fd_drho(&ev, rho, beta);
            assert!(
                (analytic - fd).abs() <= 1e-5 * analytic.abs().max(1e-3),
                "rho={rho} beta={beta}: analytic {analytic} vs fd {fd}"
            );
        }
        let spec = ChannelSpec::exponential(3, 3, 5, 15.0, 0.5, 0.7).unwrap();
        let ev = ExponentEvaluator::new(&spec).unwrap();
        for (rho, beta) in [(0.33, 2.5), (0.91, 3.0)] {
            let analytic = ev.d_e0_drho(rho, beta).unwrap();
            let fd = fd_drho(&ev, rho, beta);
            assert!(
                (analytic - fd).abs() <= 1e-5 * analytic.abs().max(1e-3),
                "corr rho={rho} beta={beta}: analytic {analytic} vs fd {fd}"
            );
        }
    }

    #[test]
    fn capacity_via_corollary_matches_drho_at_origin() {
        for spec in [
            ChannelSpec::iid(3, 3, 5, 15.0).unwrap(),
            ChannelSpec::exponential(3, 3, 5, 15.0, 0.5, 0.7).unwrap(),
            ChannelSpec::exponential(2, 4, 3, 8.0, 0.3, 0.6).unwrap(),
        ] {
            let ev = ExponentEvaluator::new(&spec).unwrap();
            let cap = ev.ergodic_capacity().unwrap();
            let slope = ev.d_e0_drho(0.0, spec.n_t() as f64).unwrap();
            assert!(
                (cap - slope).abs() < 1e-8 * cap.max(1.0),
                "capacity {cap} vs dE0/drho {slope}"
            );
            assert!(cap > 0.0);
        }
    }

    #[test]
    fn capacity_independent_of_coherence_time() {
        let caps: Vec<f64> = [1usize, 5, 10]
            .iter()
            .map(|&nc| {
                let spec = ChannelSpec::exponential(3, 3, nc, 15.0, 0.5, 0.7).unwrap();
                let ev = ExponentEvaluator::new(&spec).unwrap();
                ev.d_e0_drho(0.0, 3.0).unwrap()
            })
            .collect();
        assert!((caps[0] - caps[1]).abs() < 1e-6);
        assert!((caps[0] - caps[2]).abs() < 1e-6);
    }

    #[test]
    fn cutoff_rate_positive_and_below_capacity() {
        for spec in [
            ChannelSpec::iid(3, 3, 1, 15.0).unwrap(),
            ChannelSpec::iid(3, 3, 5, 15.0).unwrap(),
            ChannelSpec::exponential(3, 3, 4, 15.0, 0.5, 0.7).unwrap(),
        ] {
            let r0 = cutoff_rate(&spec).unwrap();
            let cap = ergodic_capacity(&spec).unwrap();
            assert!(r0 > 0.0, "cutoff rate must be positive");
            assert!(r0 < cap, "cutoff rate {r0} should be below capacity {cap}");
        }
    }

    #[test]
    fn cutoff_rate_near_zero_at_tiny_snr() {
        let spec = ChannelSpec::iid(2, 2, 3, -80.0).unwrap();
        let r0 = cutoff_rate(&spec).unwrap();
        assert!(r0.abs() < 1e-6, "cutoff at -80 dB should be ~0, got {r0}");
    }

    #[test]
    fn e0_monotone_decreasing_in_nc() {
        let gammas = [(0.5, 2.5), (1.0, 3.0), (0.3, 1.8)];
        for &(rho, beta) in &gammas {
            let mut prev = f64::INFINITY;
            for nc in 1..=6usize {
                let spec = ChannelSpec::exponential(3, 3, nc, 12.0, 0.4, 0.4).unwrap();
                let v = e0_tilde(&spec, rho, beta).unwrap();
                assert!(
                    v < prev + 1e-12,
                    "E0 should decrease with Nc at rho={rho}, beta={beta}: {v} vs {prev}"
                );
                prev = v;
            }
        }
    }

    #[test]
    fn e0_concave_in_beta() {
        let spec = ChannelSpec::exponential(3, 3, 5, 15.0, 0.5, 0.7).unwrap();
        let ev = ExponentEvaluator::new(&spec).unwrap();
        for rho in [0.2, 0.5, 1.0] {
            for beta in [0.8, 1.5, 2.4] {
                let d = 0.3;
                let lo = ev.e0(rho, beta - d).unwrap();
                let mid = ev.e0(rho, beta).unwrap();
                let hi = ev.e0(rho, beta + d).unwrap();
                assert!(
                    mid >= 0.5 * (lo + hi) - 1e-9,
                    "midpoint concavity fails at rho={rho}, beta={beta}"
                );
            }
        }
    }

    #[test]
    fn large_nc_limit_approaches_constant_term() {
        let rho = 0.5;
        let beta = 1.6;
        let spec = ChannelSpec::iid(2, 2, 10_000, 10.0).unwrap();
        let v = e0_tilde(&spec, rho, beta).unwrap();
        let c = c_const(rho, beta, 2);
        assert!(
            (v - c).abs() < 0.01,
            "large-Nc limit: E0 {v} vs c {c} (diff {})",
            v - c
        );
    }

    #[test]
    fn spec_validation() {
        assert!(ChannelSpec::iid(0, 2, 1, 10.0).is_err());
        assert!(ChannelSpec::iid(2, 2, 0, 10.0).is_err());
        assert!(ChannelSpec::iid(2, 2, 1, f64::NAN).is_err());
        // Non-unit diagonal rejected.
        let bad = HermitianPD::from_diagonal(&[2.0, 1.0]).unwrap();
        assert!(
            ChannelSpec::with_correlation(2, 2, 1, 10.0, bad, HermitianPD::identity(2)).is_err()
        );
        let spec = ChannelSpec::iid(2, 3, 2, 10.0).unwrap();
        assert!(e0_tilde(&spec, -0.1, 2.0).is_err());
        assert!(e0_tilde(&spec, 0.5, 0.0).is_err());
        assert!(e0_tilde(&spec, 0.5, 2.5).is_err());
    }
}
