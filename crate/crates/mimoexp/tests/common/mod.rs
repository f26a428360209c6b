//! Shared test oracles, deliberately independent of the library's
//! closed-form evaluation paths.

#![allow(dead_code)]

/// Composite Simpson quadrature on [0, cut].
pub fn simpson(f: impl Fn(f64) -> f64, cut: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = cut / n as f64;
    let mut acc = f(0.0) + f(cut);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// Generalized Laguerre polynomial L_k^{(alpha)}(x) by recurrence.
pub fn laguerre(k: usize, alpha: f64, x: f64) -> f64 {
    let mut l0 = 1.0;
    if k == 0 {
        return l0;
    }
    let mut l1 = 1.0 + alpha - x;
    for i in 1..k {
        let i = i as f64;
        let next = ((2.0 * i + 1.0 + alpha - x) * l1 - (i + alpha) * l0) / (i + 1.0);
        l0 = l1;
        l1 = next;
    }
    l1
}

/// Ergodic capacity of the i.i.d. channel by the classical
/// Laguerre-polynomial eigenvalue-density quadrature:
///
/// C = ∫ ln(1+γλ/n_T) Σ_{k<m} k!/(k+n-m)! [L_k^{(n-m)}(λ)]² λ^{n-m} e^{-λ} dλ
pub fn iid_capacity_oracle(n_t: usize, n_r: usize, gamma: f64) -> f64 {
    let m = n_t.min(n_r);
    let n = n_t.max(n_r);
    let d = (n - m) as f64;
    let f = |lam: f64| -> f64 {
        if lam <= 0.0 {
            return 0.0;
        }
        let mut density = 0.0;
        for k in 0..m {
            let kfact: f64 = (1..=k).map(|i| i as f64).product();
            let knm: f64 = (1..=(k + n - m)).map(|i| i as f64).product();
            let l = laguerre(k, d, lam);
            density += kfact / knm * l * l;
        }
        (1.0 + gamma * lam / n_t as f64).ln() * density * lam.powf(d) * (-lam).exp()
    };
    simpson(f, 200.0, 400_000)
}

/// Central finite difference with step h.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
