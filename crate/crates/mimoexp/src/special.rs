//! Scalar special functions: Pochhammer symbols, log-gamma, and the
//! semi-infinite integral
//!
//! ```text
//! G_{κ,ν}(a,b,μ) = ∫₀^∞ (1+ax)^{μ-1} ln^{ν-1}(1+ax) x^{κ-1} e^{-x/b} dx
//! ```
//!
//! with κ ≥ 1, ν ∈ {1,2}, a,b > 0 and μ real (often a large negative
//! number). Every determinant entry of the closed-form exponent reduces to
//! evaluations of this integral, so it is computed here from the integral
//! definition by adaptive Gauss–Kronrod quadrature rather than through
//! Meijer-G machinery.
//!
//! Numerical strategy: substitute x = b·t so the weight becomes e^{-t},
//! split [0,∞) at the integrand's small-t feature scale, at t = 1 and at
//! t = 50, run adaptive G7–K15 on the finite pieces, and fold the remaining
//! tail onto (0,1] with u = e^{-(t-50)}. The integrand is evaluated in
//! log-space throughout, which keeps very negative μ (large N_c·ρ) from
//! under/overflowing intermediate factors.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

/// Pochhammer symbol (a)_n = a(a+1)···(a+n-1), with (a)_0 = 1.
pub fn pochhammer(a: f64, n: usize) -> f64 {
    let mut acc = 1.0;
    for k in 0..n {
        acc *= a + k as f64;
    }
    acc
}

/// Pochhammer symbol in signed log-space: returns `(sign, ln|value|)` with
/// `sign · exp(ln|value|) = (a)_n`. A zero factor yields `(0, -∞)`.
pub fn log_pochhammer_signed(a: f64, n: usize) -> (i8, f64) {
    let mut sign = 1i8;
    let mut ln_mag = 0.0;
    for k in 0..n {
        let factor = a + k as f64;
        if factor == 0.0 {
            return (0, f64::NEG_INFINITY);
        }
        if factor < 0.0 {
            sign = -sign;
        }
        ln_mag += factor.abs().ln();
    }
    (sign, ln_mag)
}

/// Natural log of the gamma function for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma requires a positive argument");
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection keeps small arguments accurate.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.999_999_999_999_809_9;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// ln(n!) for integer n ≥ 0.
pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

// ---------------------------------------------------------------------------
// G_{κ,ν}(a,b,μ)
// ---------------------------------------------------------------------------

/// Parameters of the semi-infinite integral G_{κ,ν}(a,b,μ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GIntegralParams {
    pub kappa: usize,
    pub nu: u8,
    pub a: f64,
    pub b: f64,
    pub mu: f64,
}

impl GIntegralParams {
    pub fn new(kappa: usize, nu: u8, a: f64, b: f64, mu: f64) -> Result<Self> {
        if kappa < 1 {
            return Err(Error::invalid("g_integral requires kappa >= 1"));
        }
        if nu != 1 && nu != 2 {
            return Err(Error::invalid("g_integral requires nu in {1, 2}"));
        }
        if !(a > 0.0) || !(b > 0.0) {
            return Err(Error::invalid("g_integral requires a > 0 and b > 0"));
        }
        if !mu.is_finite() {
            return Err(Error::invalid("g_integral requires finite mu"));
        }
        Ok(GIntegralParams { kappa, nu, a, b, mu })
    }
}

/// Evaluates G_{κ,ν}(a,b,μ) to ~1e-10 relative accuracy.
pub fn g_integral(p: &GIntegralParams) -> Result<f64> {
    g_eval(p.kappa, p.nu, p.a, p.b, p.mu)
}

/// G_{κ,1}(a,b,μ) convenience wrapper.
pub(crate) fn g1(kappa: usize, a: f64, b: f64, mu: f64) -> Result<f64> {
    g_eval(kappa, 1, a, b, mu)
}

/// G_{κ,2}(a,b,μ) convenience wrapper.
pub(crate) fn g2(kappa: usize, a: f64, b: f64, mu: f64) -> Result<f64> {
    g_eval(kappa, 2, a, b, mu)
}

const TAIL_CUT: f64 = 50.0;
const REL_TOL: f64 = 1e-10;
const REL_TOL_ACCEPT: f64 = 1e-9;
const MAX_INTERVALS: usize = 4096;

fn g_eval(kappa: usize, nu: u8, a: f64, b: f64, mu: f64) -> Result<f64> {
    let p = GIntegralParams::new(kappa, nu, a, b, mu)?;
    let c = p.a * p.b;
    let km1 = (p.kappa - 1) as f64;
    let log_weight = move |t: f64| -> f64 {
        let lp = (c * t).ln_1p();
        let mut acc = -t;
        if p.mu != 1.0 {
            acc += (p.mu - 1.0) * lp;
        }
        if p.kappa > 1 {
            acc += km1 * t.ln();
        }
        if p.nu == 2 {
            acc += lp.ln(); // -inf at t = 0 is fine: exp gives 0
        }
        acc
    };
    let feature = if p.mu < 1.0 {
        Some(1.0 / (c * (1.0 - p.mu).max(1.0)))
    } else {
        None
    };
    let total = integrate_exp_log_semiinfinite(&log_weight, feature).map_err(|e| match e {
        Error::Numerical { diagnostic, .. } => Error::numerical(
            format!(
                "g_integral quadrature did not converge for kappa={kappa} nu={nu} a={a:.6e} b={b:.6e} mu={mu:.6e}"
            ),
            diagnostic,
        ),
        other => other,
    })?;
    Ok(p.b.powi(p.kappa as i32) * total)
}

/// Expectation of ∏_k (1 + c_k t)^{-power} under t ~ Gamma(shape, 1).
///
/// This is the scale-conditioned kernel behind the variance-reduced Monte
/// Carlo estimator in [`crate::montecarlo`]: conditioning a Gaussian matrix
/// on its direction leaves exactly this one-dimensional integral over the
/// squared Frobenius norm.
pub fn gamma_weighted_product(shape: usize, coeffs: &[f64], power: f64) -> Result<f64> {
    if shape < 1 {
        return Err(Error::invalid("gamma shape must be >= 1"));
    }
    if coeffs.iter().any(|&c| c < 0.0) {
        return Err(Error::invalid("product coefficients must be nonnegative"));
    }
    let ln_norm = ln_gamma(shape as f64);
    let sm1 = (shape - 1) as f64;
    let log_weight = move |t: f64| -> f64 {
        let mut acc = -t - ln_norm;
        if shape > 1 {
            acc += sm1 * t.ln();
        }
        for &c in coeffs {
            acc -= power * (c * t).ln_1p();
        }
        acc
    };
    let c_max = coeffs.iter().cloned().fold(0.0, f64::max);
    let feature = if c_max > 0.0 && power > 0.0 {
        Some(1.0 / (c_max * power.max(1.0)))
    } else {
        None
    };
    integrate_exp_log_semiinfinite(&log_weight, feature)
}

/// Adaptive G7–K15 integration of exp(log_weight(t)) over [0, ∞).
///
/// The integrand must decay at least like e^{-t}; `feature_scale` marks an
/// optional small-t breakpoint to seed the subdivision. [0, ∞) is split at
/// the feature scale, 1, and 50; the remaining tail is folded onto (0,1]
/// with u = e^{-(t-50)}, whose Jacobian cancels the e^{-t} factor.
fn integrate_exp_log_semiinfinite(
    log_weight: &impl Fn(f64) -> f64,
    feature_scale: Option<f64>,
) -> Result<f64> {
    let finite = |t: f64| log_weight(t).exp();
    let tail = |u: f64| {
        let t = TAIL_CUT - u.ln();
        (log_weight(t) + t - TAIL_CUT).exp()
    };

    let mut pts = vec![0.0, 1.0, TAIL_CUT];
    if let Some(t0) = feature_scale {
        if t0 > 1e-280 && t0 < 0.5 {
            pts.push(t0);
            let t1 = (t0 * 64.0).min(0.9);
            if t1 > t0 * 4.0 {
                pts.push(t1);
            }
        }
    }
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let mut heap: BinaryHeap<Piece> = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in pts.windows(2) {
        let (v, e) = gk15(&finite, w[0], w[1]);
        total += v;
        total_err += e;
        heap.push(Piece {
            lo: w[0],
            hi: w[1],
            value: v,
            error: e,
            is_tail: false,
        });
    }
    {
        let (v, e) = gk15(&tail, 0.0, 1.0);
        total += v;
        total_err += e;
        heap.push(Piece {
            lo: 0.0,
            hi: 1.0,
            value: v,
            error: e,
            is_tail: true,
        });
    }

    let mut count = heap.len();
    while total_err > REL_TOL * total.abs().max(f64::MIN_POSITIVE) && count < MAX_INTERVALS {
        let worst = heap.pop().expect("heap cannot be empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval at machine resolution; its error estimate is pure
            // roundoff, so stop charging it against the budget.
            total_err -= worst.error;
            continue;
        }
        total -= worst.value;
        total_err -= worst.error;
        for (lo, hi) in [(worst.lo, mid), (mid, worst.hi)] {
            let (v, e) = if worst.is_tail {
                gk15(&tail, lo, hi)
            } else {
                gk15(&finite, lo, hi)
            };
            total += v;
            total_err += e;
            heap.push(Piece {
                lo,
                hi,
                value: v,
                error: e,
                is_tail: worst.is_tail,
            });
        }
        count += 1;
    }

    let achieved = total_err / total.abs().max(f64::MIN_POSITIVE);
    if achieved > REL_TOL_ACCEPT {
        return Err(Error::numerical(
            "semi-infinite quadrature did not converge",
            Some(achieved),
        ));
    }
    Ok(total)
}

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    is_tail: bool,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// One G7–K15 panel on [lo, hi]: returns (Kronrod value, error estimate).
fn gk15(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let half = 0.5 * (hi - lo);
    let center = 0.5 * (lo + hi);

    let fc = f(center);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut resabs = resk.abs();
    let mut fv = [0.0f64; 15];
    fv[7] = fc;

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            // XGK[1], XGK[3], XGK[5] are the Gauss-7 nodes.
            resg += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * 1.0f64.min((200.0 * err / resasc).powf(1.5));
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err)
}

// ---------------------------------------------------------------------------
