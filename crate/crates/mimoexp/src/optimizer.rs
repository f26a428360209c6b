//! Maximization of the exponent kernel over (ρ, β) and the parametric
//! reliability–rate curve.
//!
//! For each ρ the maximizer β̂(ρ) of Ẽ₀(ρ,·,N_c) is the unique stationary
//! point of the concave kernel on (0, n_T], or the boundary n_T itself.
//! The parametric curve is then
//!
//! ```text
//! E_r(R, N_c) = Ẽ₀(ρ, β̂(ρ), N_c) - ρ R,     R = ∂Ẽ₀/∂ρ |_{β=β̂(ρ)},
//! ```
//!
//! swept over ρ ∈ [0,1]. R(0) is the ergodic capacity, R(1) the critical
//! rate; below the critical rate ρ pins at 1 and the curve continues with
//! slope −1 down to the zero-rate exponent.

use crate::error::{Error, Result};
use crate::exponent::{ChannelSpec, ExponentEvaluator};
use rayon::prelude::*;

/// Root tolerance on |∂Ẽ₀/∂β| at the reported maximizer.
const BETA_GRAD_TOL: f64 = 1e-8;
const BETA_MAX_ITER: usize = 200;

/// One sample of the parametric tradeoff curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentPoint {
    pub rho: f64,
    pub beta_star: f64,
    /// Ẽ₀ at the optimum.
    pub e0: f64,
    /// Rate in nats/symbol.
    pub rate: f64,
    /// Random coding exponent E_r = e0 - rho·rate.
    pub exponent: f64,
}

/// The reliability–rate tradeoff curve with its summary quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    /// Points ordered by increasing ρ, i.e. decreasing rate.
    pub points: Vec<ExponentPoint>,
    /// Ergodic capacity ⟨C⟩ (rate at ρ = 0), nats/symbol.
    pub capacity: f64,
    /// Critical rate R_cr (rate at ρ = 1), nats/symbol.
    pub critical_rate: f64,
    /// Cutoff rate R₀ = Ẽ₀(1, n_T, N_c), nats/symbol.
    pub cutoff_rate: f64,
    /// Zero-rate exponent E₀ = Ẽ₀(1, β̂(1), N_c).
    pub zero_rate_exponent: f64,
}

/// β̂(ρ): the maximizer of Ẽ₀(ρ,·,N_c) over (0, n_T].
pub fn beta_star(spec: &ChannelSpec, rho: f64) -> Result<f64> {
    let ev = ExponentEvaluator::new(spec)?;
    beta_star_with(&ev, rho)
}

/// β̂(ρ) using a prepared evaluator.
pub fn beta_star_with(ev: &ExponentEvaluator, rho: f64) -> Result<f64> {
    let nt = ev.spec().n_t() as f64;
    if rho == 0.0 {
        return Ok(nt); // ∂Ẽ₀/∂β = (n_T-β)/β > 0 on (0, n_T)
    }
    let g_hi = ev.d_e0_dbeta(rho, nt)?;
    if g_hi >= 0.0 {
        return Ok(nt); // boundary maximum
    }

    // Bracket: the gradient diverges to +∞ as β → 0.
    let mut lo = 0.5 * nt;
    let mut g_lo = ev.d_e0_dbeta(rho, lo)?;
    while g_lo <= 0.0 {
        lo *= 0.5;
        if lo < 1e-6 * nt {
            return Err(Error::numerical(
                "failed to bracket the beta maximizer",
                None,
            ));
        }
        g_lo = ev.d_e0_dbeta(rho, lo)?;
    }

    // Safeguarded Newton: secant steps on the monotone gradient, clipped to
    // the bisection bracket; concavity guarantees a single crossing.
    let mut hi = nt;
    let mut g_hi = g_hi;
    let mut x = 0.5 * (lo + hi);
    let mut g_x = ev.d_e0_dbeta(rho, x)?;
    for _ in 0..BETA_MAX_ITER {
        if g_x.abs() <= BETA_GRAD_TOL {
            return Ok(x);
        }
        if g_x > 0.0 {
            lo = x;
            g_lo = g_x;
        } else {
            hi = x;
            g_hi = g_x;
        }
        // Secant through the bracket endpoints, falling back to bisection
        // when the step leaves the bracket interior.
        let denom = g_hi - g_lo;
        let mut next = if denom != 0.0 {
            lo - g_lo * (hi - lo) / denom
        } else {
            0.5 * (lo + hi)
        };
        let margin = 1e-3 * (hi - lo);
        if !(next > lo + margin && next < hi - margin) {
            next = 0.5 * (lo + hi);
        }
        x = next;
        g_x = ev.d_e0_dbeta(rho, x)?;
        if hi - lo < 1e-14 * nt {
            break;
        }
    }
    if g_x.abs() <= 1e-6 {
        // Gradient scale can defeat the strict tolerance at extreme SNR.
        return Ok(x);
    }
    Err(Error::numerical(
        "beta maximizer search did not converge",
        Some(g_x.abs()),
    ))
}

/// Default ρ grid: 41 Chebyshev points on [0,1] (dense near both ends,
/// where the rate varies fastest), with interior points nudged off the
/// excluded set N_c·ρ ∈ {1,…,m-1}.
pub fn default_rho_grid(spec: &ChannelSpec) -> Vec<f64> {
    let n = 41usize;
    let nc = spec.n_c() as f64;
    let m = spec.m();
    let mut grid: Vec<f64> = (0..n)
        .map(|k| 0.5 * (1.0 - (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()))
        .collect();
    for rho in grid.iter_mut().take(n - 1).skip(1) {
        let x = *rho * nc;
        let k = x.round();
        if k >= 1.0 && (k as usize) <= m - 1 && (x - k).abs() < 1e-4 {
            *rho += 1e-4; // keep the analytic ρ-derivative on its valid branch
        }
    }
    grid
}

/// Sweeps the parametric curve over the given ρ grid (ascending, containing
/// 0 and 1). Grid points are evaluated in parallel.
pub fn tradeoff_curve(spec: &ChannelSpec, rho_grid: &[f64]) -> Result<TradeoffCurve> {
    if rho_grid.first() != Some(&0.0) || rho_grid.last() != Some(&1.0) {
        return Err(Error::invalid("rho grid must start at 0 and end at 1"));
    }
    if rho_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("rho grid must be strictly ascending"));
    }
    let points: Result<Vec<ExponentPoint>> = rho_grid
        .par_iter()
        .map(|&rho| {
            let ev = ExponentEvaluator::new(spec)?;
            curve_point(&ev, rho)
        })
        .collect();
    let points = points?;

    let ev = ExponentEvaluator::new(spec)?;
    let capacity = points[0].rate;
    let last = points.last().unwrap();
    Ok(TradeoffCurve {
        capacity,
        critical_rate: last.rate,
        zero_rate_exponent: last.e0,
        cutoff_rate: ev.cutoff_rate()?,
        points,
    })
}

fn curve_point(ev: &ExponentEvaluator, rho: f64) -> Result<ExponentPoint> {
    let beta = beta_star_with(ev, rho)?;
    let e0 = ev.e0(rho, beta)?;
    let rate = ev.d_e0_drho(rho, beta)?;
    Ok(ExponentPoint {
        rho,
        beta_star: beta,
        e0,
        rate,
        exponent: e0 - rho * rate,
    })
}

/// The exact operating point (ρ*, β̂(ρ*), E_r) at a target rate, solving
/// R(ρ*) = rate on the parametric curve; ρ pins to 1 below the critical
/// rate. This is the solve underlying [`exponent_at_rate`], exposed for the
/// codeword-length planner.
pub fn operating_point(spec: &ChannelSpec, rate: f64) -> Result<ExponentPoint> {
    let ev = ExponentEvaluator::new(spec)?;
    let capacity = ev.d_e0_drho(0.0, spec.n_t() as f64)?;
    if rate >= capacity {
        return Err(Error::domain(format!(
            "rate {rate:.6} nats/symbol is unachievable with positive exponent (capacity {capacity:.6})"
        )));
    }
    if rate <= 0.0 {
        return Err(Error::invalid("rate must be positive"));
    }
    let at_one = curve_point(&ev, 1.0)?;
    if rate <= at_one.rate {
        // Linear segment: slope -1, ρ = 1.
        return Ok(ExponentPoint {
            rho: 1.0,
            beta_star: at_one.beta_star,
            e0: at_one.e0,
            rate,
            exponent: at_one.e0 - rate,
        });
    }

    // R(ρ) decreases from capacity to the critical rate; bisect.
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut point = at_one;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        point = curve_point(&ev, mid)?;
        if point.rate > rate {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 || (point.rate - rate).abs() <= 1e-10 * (1.0 + rate) {
            break;
        }
    }
    // Re-anchor the exponent at the exact requested rate (first-order exact:
    // dE_r/dR = -ρ along the curve).
    Ok(ExponentPoint {
        exponent: point.e0 - point.rho * rate,
        rate,
        ..point
    })
}

/// E_r(R) from a previously computed curve: monotone piecewise-cubic
/// interpolation above the critical rate, the exact slope −1 line below it.
pub fn exponent_at_rate(curve: &TradeoffCurve, rate: f64) -> Result<f64> {
    if rate >= curve.capacity {
        return Err(Error::domain(format!(
            "rate {rate:.6} nats/symbol is unachievable with positive exponent (capacity {:.6})",
            curve.capacity
        )));
    }
    if rate < 0.0 {
        return Err(Error::invalid("rate must be nonnegative"));
    }
    if rate <= curve.critical_rate {
        return Ok(curve.zero_rate_exponent - rate);
    }
    // Ascending-rate arrays for interpolation.
    let mut rates: Vec<f64> = curve.points.iter().map(|p| p.rate).rev().collect();
    let mut exps: Vec<f64> = curve.points.iter().map(|p| p.exponent).rev().collect();
    // Guard against non-strictly-monotone numerical artifacts.
    let mut keep = vec![true; rates.len()];
    for i in 1..rates.len() {
        if rates[i] <= rates[i - 1] {
            keep[i] = false;
        }
    }
    let mut it = keep.iter();
    rates.retain(|_| *it.next().unwrap());
    let mut it = keep.iter();
    exps.retain(|_| *it.next().unwrap());
    Ok(monotone_cubic(&rates, &exps, rate))
}

/// Fritsch–Carlson monotone piecewise-cubic interpolation.
fn monotone_cubic(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    assert!(n >= 2, "need at least two knots");
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    // Secant slopes and limited tangents.
    let mut d = vec![0.0; n - 1];
    for i in 0..n - 1 {
        d[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    }
    let mut t = vec![0.0; n];
    t[0] = d[0];
    t[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        t[i] = if d[i - 1] * d[i] <= 0.0 {
            0.0
        } else {
            0.5 * (d[i - 1] + d[i])
        };
    }
    for i in 0..n - 1 {
        if d[i] == 0.0 {
            t[i] = 0.0;
            t[i + 1] = 0.0;
            continue;
        }
        let a = t[i] / d[i];
        let b = t[i + 1] / d[i];
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            t[i] = tau * a * d[i];
            t[i + 1] = tau * b * d[i];
        }
    }
    // Locate the segment.
    let seg = xs.partition_point(|&v| v <= x).saturating_sub(1);
    let h = xs[seg + 1] - xs[seg];
    let s = (x - xs[seg]) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    h00 * ys[seg] + h10 * h * t[seg] + h01 * ys[seg + 1] + h11 * h * t[seg + 1]
}

// ---------------------------------------------------------------------------
