//! Required-codeword-length estimation.
//!
//! Given a target error probability and a rate R below capacity, the random
//! coding bound with the optimal Gaussian-codebook parameters reads
//!
//! ```text
//! P_e = (8π/n_T) (n_T - β̂(ρ))² N_b N_c e^{-N_b N_c E_r(R,N_c) + 2}
//! ```
//!
//! which is solved for the number of coherence blocks N_b on its decreasing
//! branch N_b > 1/(N_c E_r); the reported codeword length is
//! L = N_c ⌈N_b⌉ symbols.

use crate::error::{Error, Result};
use crate::exponent::ChannelSpec;
use crate::optimizer::{operating_point, ExponentPoint};

/// Residual tolerance when re-substituting the solved N_b.
const ROOT_REL_TOL: f64 = 1e-12;
const NB_BRACKET_MAX: f64 = 1e12;

/// A solved codeword-length plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodewordPlan {
    /// Target block error probability.
    pub target_pe: f64,
    /// Rate in nats/symbol.
    pub rate: f64,
    /// Optimizing ρ at this rate (pinned to 1 below the critical rate).
    pub rho_opt: f64,
    /// β̂(ρ) at the operating point.
    pub beta_opt: f64,
    /// Random coding exponent E_r(R, N_c) in nats/symbol.
    pub exponent: f64,
    /// Solved number of coherence blocks (real-valued root).
    pub n_b: f64,
    /// Codeword length in symbols: N_c · ⌈N_b⌉.
    pub length: u64,
}

/// Right side of the error-probability equation in log form.
fn log_pe_bound(ln_prefactor: f64, nc_er: f64, n_b: f64) -> f64 {
    ln_prefactor + n_b.ln() - n_b * nc_er + 2.0
}

/// Solves for the codeword length achieving `target_pe` at `rate_nats`.
pub fn required_length(spec: &ChannelSpec, rate_nats: f64, target_pe: f64) -> Result<CodewordPlan> {
    if !(0.0 < target_pe && target_pe < 1.0) {
        return Err(Error::invalid(format!(
            "target error probability must lie in (0,1), got {target_pe}"
        )));
    }
    let op = operating_point(spec, rate_nats)?; // domain-checks rate < capacity
    plan_from_point(spec, &op, target_pe)
}

fn plan_from_point(
    spec: &ChannelSpec,
    op: &ExponentPoint,
    target_pe: f64,
) -> Result<CodewordPlan> {
    let n_t = spec.n_t() as f64;
    let n_c = spec.n_c() as f64;
    let e_r = op.exponent;
    if e_r <= 0.0 {
        return Err(Error::domain(format!(
            "reliable communication impossible at this rate (exponent {e_r:.3e})"
        )));
    }

    // P_e = (8π/n_T)(n_T-β̂)² N_c · N_b e^{-N_b N_c E_r + 2}
    let prefactor = 8.0 * std::f64::consts::PI / n_t * (n_t - op.beta_star).powi(2) * n_c;
    let ln_prefactor = prefactor.ln();
    let nc_er = n_c * e_r;
    let ln_target = target_pe.ln();

    let n_b_peak = 1.0 / nc_er;
    let f = |n_b: f64| log_pe_bound(ln_prefactor, nc_er, n_b) - ln_target;

    let n_b = if f(n_b_peak) <= 0.0 {
        // The bound is below the target everywhere on the valid branch;
        // a single coherence block per the peak suffices.
        n_b_peak
    } else {
        // Bracket the root on the decreasing branch and bisect on the
        // monotone log form.
        let mut hi = (2.0 * n_b_peak).max(1.0);
        while f(hi) > 0.0 {
            hi *= 4.0;
            if hi > NB_BRACKET_MAX {
                return Err(Error::numerical(
                    "codeword-length root exceeds bracket",
                    Some(hi),
                ));
            }
        }
        let mut lo = n_b_peak;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) <= ROOT_REL_TOL * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };

    // Substituting back must reproduce the target (root residual).
    let achieved = log_pe_bound(ln_prefactor, nc_er, n_b);
    if f(n_b_peak) > 0.0 && (achieved - ln_target).abs() > 1e-9 * ln_target.abs().max(1.0) {
        return Err(Error::numerical(
            "codeword-length root residual too large",
            Some((achieved - ln_target).abs()),
        ));
    }

    Ok(CodewordPlan {
        target_pe,
        rate: op.rate,
        rho_opt: op.rho,
        beta_opt: op.beta_star,
        exponent: e_r,
        n_b,
        length: spec.n_c() as u64 * (n_b.ceil().max(1.0) as u64),
    })
}

/// A row of a codeword-length table: one channel and its plan, or an
/// impossibility marker when the rate is not achievable.
#[derive(Debug, Clone)]
pub struct LengthRow {
    pub spec_id: String,
    pub n_t: usize,
    pub n_r: usize,
    pub n_c: usize,
    pub gamma_db: f64,
    pub zeta_t: Option<f64>,
    pub zeta_r: Option<f64>,
    pub rate_bits: f64,
    pub target_pe: f64,
    pub plan: Option<CodewordPlan>,
}

/// Plans every spec at a common rate/error target; infeasible rows carry
/// `plan: None` instead of failing the whole table.
pub fn length_table(
    specs: &[(String, ChannelSpec)],
    rate_nats: f64,
    target_pe: f64,
) -> Result<Vec<LengthRow>> {
    let mut rows = Vec::with_capacity(specs.len());
    for (id, spec) in specs {
        let plan = match required_length(spec, rate_nats, target_pe) {
            Ok(p) => Some(p),
            Err(Error::Domain(_)) => None,
            Err(e) => return Err(e),
        };
        rows.push(LengthRow {
            spec_id: id.clone(),
            n_t: spec.n_t(),
            n_r: spec.n_r(),
            n_c: spec.n_c(),
            gamma_db: spec.gamma_db(),
            zeta_t: spec.zeta().map(|z| z.0),
            zeta_r: spec.zeta().map(|z| z.1),
            rate_bits: rate_nats / std::f64::consts::LN_2,
            target_pe,
            plan,
        });
    }
    Ok(rows)
}

/// CSV header matching [`length_table_csv`] rows.
pub const LENGTH_CSV_HEADER: &str =
    "spec-id,nT,nR,Nc,gamma_dB,zetaT,zetaR,rate_bits,target_pe,rho_opt,beta_opt,exponent_nats,Nb,L";

/// Serializes table rows as CSV ("-" marks infeasible rows).
pub fn length_table_csv(rows: &[LengthRow]) -> String {
    let mut out = String::from(LENGTH_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let zt = r
            .zeta_t
            .map(|z| z.to_string())
            .unwrap_or_else(|| "-".to_string());
        let zr = r
            .zeta_r
            .map(|z| z.to_string())
            .unwrap_or_else(|| "-".to_string());
        match &r.plan {
            Some(p) => out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.spec_id,
                r.n_t,
                r.n_r,
                r.n_c,
                r.gamma_db,
                zt,
                zr,
                r.rate_bits,
                r.target_pe,
                p.rho_opt,
                p.beta_opt,
                p.exponent,
                p.n_b,
                p.length
            )),
            None => out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},-,-,-,-,-\n",
                r.spec_id, r.n_t, r.n_r, r.n_c, r.gamma_db, zt, zr, r.rate_bits, r.target_pe
            )),
        }
    }
    out
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    const RATE_8_BITS: f64 = 8.0 * std::f64::consts::LN_2;

    #[test]
    fn plan_solves_the_bound() {
        let spec = ChannelSpec::iid(3, 3, 5, 15.0).unwrap();
        let plan = required_length(&spec, RATE_8_BITS, 1e-6).unwrap();
        assert!(plan.length % 5 == 0, "length is a whole number of blocks");
        assert!(plan.n_b > 1.0 / (5.0 * plan.exponent), "decreasing branch");
        // Residual check.
        let n_t = 3.0;
        let pre = 8.0 * std::f64::consts::PI / n_t * (n_t - plan.beta_opt).powi(2) * 5.0;
        let back = log_pe_bound(pre.ln(), 5.0 * plan.exponent, plan.n_b);
        assert!(
            (back - (1e-6f64).ln()).abs() <= 1e-9 * (1e-6f64).ln().abs(),
            "root residual {back}"
        );
    }

    #[test]
    fn impossible_above_capacity() {
        // 2×2 at 10 dB has capacity well below 8 bits/symbol.
        let spec = ChannelSpec::iid(2, 2, 5, 10.0).unwrap();
        assert!(matches!(
            required_length(&spec, RATE_8_BITS, 1e-6),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn table_marks_impossible_rows() {
        let specs: Vec<(String, ChannelSpec)> = [8.0, 16.0]
            .iter()
            .map(|&db| {
                (
                    format!("2x2-{db}dB"),
                    ChannelSpec::iid(2, 2, 5, db).unwrap(),
                )
            })
            .collect();
        let rows = length_table(&specs, RATE_8_BITS, 1e-6).unwrap();
        assert!(rows[0].plan.is_none(), "8 dB is below the capacity threshold");
        assert!(rows[1].plan.is_some(), "16 dB is feasible");
        let csv = length_table_csv(&rows);
        assert!(csv.starts_with(LENGTH_CSV_HEADER));
        assert!(csv.contains(",-,-,-,-,-"));
        // Single-spec table equals required_length.
        let single = required_length(&specs[1].1, RATE_8_BITS, 1e-6).unwrap();
        assert_eq!(rows[1].plan.unwrap().length, single.length);
    }

    #[test]
    fn length_monotone_in_coherence_time() {
        let mut prev = 0u64;
        for nc in [1usize, 3, 5, 8] {
            let spec = ChannelSpec::iid(3, 3, nc, 15.0).unwrap();
            let plan = required_length(&spec, RATE_8_BITS, 1e-6).unwrap();
            assert!(
                plan.length >= prev,
                "L should not decrease with Nc: {} then {}",
                prev,
                plan.length
            );
            prev = plan.length;
        }
    }

    #[test]
    fn length_monotone_in_correlation() {
        let mut prev = 0u64;
        for zeta in [0.0, 0.3, 0.5, 0.7] {
            let spec = ChannelSpec::exponential(3, 3, 5, 15.0, zeta, zeta).unwrap();
            let plan = required_length(&spec, RATE_8_BITS, 1e-6).unwrap();
            assert!(
                plan.length >= prev,
                "L should not decrease with zeta: {} then {}",
                prev,
                plan.length
            );
            prev = plan.length;
        }
    }

    #[test]
    fn larger_arrays_need_shorter_codes() {
        let l3 = required_length(&ChannelSpec::iid(3, 3, 5, 16.0).unwrap(), RATE_8_BITS, 1e-6)
            .unwrap()
            .length;
        let l4 = required_length(&ChannelSpec::iid(4, 4, 5, 16.0).unwrap(), RATE_8_BITS, 1e-6)
            .unwrap()
            .length;
        assert!(l4 < l3, "4x4 ({l4}) should beat 3x3 ({l3})");
    }

    #[test]
    fn rejects_bad_target() {
        let spec = ChannelSpec::iid(2, 2, 1, 16.0).unwrap();
        assert!(required_length(&spec, RATE_8_BITS, 0.0).is_err());
        assert!(required_length(&spec, RATE_8_BITS, 1.0).is_err());
    }
}
