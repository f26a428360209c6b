//! Brute-force Monte Carlo oracle for every closed-form expectation.
//!
//! Channels are sampled directly from the Kronecker model
//! `H = Φ_R^{1/2} H₀ Φ_T^{1/2}` and the determinant expectations are
//! averaged sample-by-sample, giving an estimator that shares nothing with
//! the determinantal formulas it validates.
//!
//! Reproducibility: samples are generated in fixed-size batches, each batch
//! drawing from its own RNG substream keyed by `(seed, batch index)`.
//! Batches are reduced in index order, so the result is bit-identical for a
//! given `(seed, samples, spec)` regardless of how many worker threads rayon
//! uses. Standard errors come from the spread of batch means, which is
//! robust for the heavy-tailed determinant powers at large N_c·ρ.

use crate::error::{Error, Result};
use crate::exponent::ChannelSpec;
use crate::linalg::{
    det_complex, eigenvalues_hermitian_matrix, matrix_sqrt, sample_gaussian_matrix,
    CompensatedSum, ComplexLu, ComplexMatrix, HermitianPD, RngStream,
};
use num_complex::Complex64;
use rayon::prelude::*;

/// Monte Carlo sampling configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Samples per accumulation block; must divide `samples`.
    pub batch: u64,
}

impl McConfig {
    /// Picks a batch size near `samples/1000` (at least 32) that divides
    /// `samples`.
    pub fn new(samples: u64, seed: u64) -> Result<Self> {
        if samples < 1_000 {
            return Err(Error::invalid("Monte Carlo needs at least 1000 samples"));
        }
        let target = (samples / 1_000).max(32);
        let mut batch = target;
        while batch > 1 && samples % batch != 0 {
            batch -= 1;
        }
        Self::with_batch(samples, seed, batch.max(1))
    }

    pub fn with_batch(samples: u64, seed: u64, batch: u64) -> Result<Self> {
        if samples < 1_000 {
            return Err(Error::invalid("Monte Carlo needs at least 1000 samples"));
        }
        if batch == 0 || samples % batch != 0 {
            return Err(Error::invalid(format!(
                "batch size {batch} must divide the sample count {samples}"
            )));
        }
        Ok(McConfig {
            samples,
            seed,
            batch,
        })
    }

    fn batch_count(&self) -> u64 {
        self.samples / self.batch
    }
}

/// A Monte Carlo expectation with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Standardized distance to a reference value.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.mean - reference) / self.std_err.max(f64::MIN_POSITIVE)
    }
}

/// Draws one channel matrix `H = Φ_R^{1/2} H₀ Φ_T^{1/2}` (n_R × n_T).
pub fn sample_channel(spec: &ChannelSpec, rng: &mut RngStream) -> ComplexMatrix {
    let sqrt_r = matrix_sqrt(spec.phi_r());
    let sqrt_t = matrix_sqrt(spec.phi_t());
    let h0 = sample_gaussian_matrix(spec.n_r(), spec.n_t(), rng);
    sqrt_r.mul(&h0).mul(&sqrt_t)
}

/// Per-sample eigenvalues of Θ = HH† or H†H, whichever is m×m.
struct ChannelSampler {
    n_r: usize,
    n_t: usize,
    sqrt_r: ComplexMatrix,
    sqrt_t: ComplexMatrix,
    want_gram_of_rows: bool,
}

impl ChannelSampler {
    fn new(spec: &ChannelSpec) -> Self {
        ChannelSampler {
            n_r: spec.n_r(),
            n_t: spec.n_t(),
            sqrt_r: matrix_sqrt(spec.phi_r()),
            sqrt_t: matrix_sqrt(spec.phi_t()),
            want_gram_of_rows: spec.n_r() <= spec.n_t(),
        }
    }

    fn draw_h(&self, rng: &mut RngStream) -> ComplexMatrix {
        let h0 = sample_gaussian_matrix(self.n_r, self.n_t, rng);
        self.sqrt_r.mul(&h0).mul(&self.sqrt_t)
    }

    fn theta_eigs(&self, h: &ComplexMatrix) -> Vec<f64> {
        let theta = if self.want_gram_of_rows {
            h.mul(&h.dagger())
        } else {
            h.dagger().mul(&h)
        };
        // Symmetrize away roundoff before the eigensolve.
        let sym = theta
            .add(&theta.dagger())
            .scale(Complex64::new(0.5, 0.0));
        eigenvalues_hermitian_matrix(&sym).expect("gram matrix is Hermitian")
    }

    /// Eigenvalues of Θ for one draw, descending.
    fn draw_theta_eigs(&self, rng: &mut RngStream) -> Vec<f64> {
        let h = self.draw_h(rng);
        self.theta_eigs(&h)
    }

    /// One draw split into the whitened squared Frobenius norm and the
    /// eigenvalues of the colored quadratic form.
    fn draw_scale_and_eigs(&self, rng: &mut RngStream) -> (f64, Vec<f64>) {
        let g = sample_gaussian_matrix(self.n_r, self.n_t, rng);
        let sigma2: f64 = g.entries().iter().map(|z| z.norm_sqr()).sum();
        let h = self.sqrt_r.mul(&g).mul(&self.sqrt_t);
        (sigma2, self.theta_eigs(&h))
    }
}

/// Generic batched estimator: `values(rng, out)` fills one sample's
/// contribution for each tracked quantity.
fn batched_expectation<F>(cfg: &McConfig, width: usize, values: F) -> Vec<McEstimate>
where
    F: Fn(&mut RngStream, &mut [f64]) + Sync,
{
    let batches = cfg.batch_count();
    let batch_means: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::substream(cfg.seed, b);
            let mut sums = vec![CompensatedSum::default(); width];
            let mut buf = vec![0.0; width];
            for _ in 0..cfg.batch {
                values(&mut rng, &mut buf);
                for (s, &v) in sums.iter_mut().zip(buf.iter()) {
                    s.add(v);
                }
            }
            sums.iter().map(|s| s.value() / cfg.batch as f64).collect()
        })
        .collect();

    (0..width)
        .map(|k| {
            let mut mean_acc = CompensatedSum::default();
            for bm in &batch_means {
                mean_acc.add(bm[k]);
            }
            let mean = mean_acc.value() / batches as f64;
            let mut var_acc = CompensatedSum::default();
            for bm in &batch_means {
                let d = bm[k] - mean;
                var_acc.add(d * d);
            }
            let std_err = if batches > 1 {
                (var_acc.value() / ((batches - 1) as f64 * batches as f64)).sqrt()
            } else {
                0.0
            };
            McEstimate {
                mean,
                std_err,
                samples: cfg.samples,
                seed: cfg.seed,
            }
        })
        .collect()
}

/// Monte Carlo estimate of 𝒵(ρ,β,N_c) = E{det(I_m + γΘ/(β(1+ρ)))^{-N_cρ}}.
pub fn mc_zeta(spec: &ChannelSpec, rho: f64, beta: f64, cfg: &McConfig) -> Result<McEstimate> {
    Ok(mc_zeta_grid(spec, &[(rho, beta)], cfg)?.pop().unwrap())
}

/// 𝒵 estimates for several (ρ,β) points sharing one set of channel draws;
/// point k of the result is reproducible bit-exactly regardless of which
/// other points are in the grid.
pub fn mc_zeta_grid(
    spec: &ChannelSpec,
    points: &[(f64, f64)],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>> {
    for &(rho, beta) in points {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::invalid(format!("rho must lie in [0,1], got {rho}")));
        }
        if !(beta > 0.0 && beta <= spec.n_t() as f64) {
            return Err(Error::invalid(format!(
                "beta must lie in (0, n_T], got {beta}"
            )));
        }
    }
    let sampler = ChannelSampler::new(spec);
    let gamma = spec.gamma();
    let nc = spec.n_c() as f64;
    let params: Vec<(f64, f64)> = points
        .iter()
        .map(|&(rho, beta)| (gamma / (beta * (1.0 + rho)), nc * rho))
        .collect();
    Ok(batched_expectation(cfg, points.len(), |rng, out| {
        let eigs = sampler.draw_theta_eigs(rng);
        for (slot, &(eta, nc_rho)) in out.iter_mut().zip(&params) {
            let log_det: f64 = eigs.iter().map(|&l| (eta * l).ln_1p()).sum();
            *slot = (-nc_rho * log_det).exp();
        }
    }))
}

/// Scale-conditioned estimator of 𝒵(ρ,β,N_c), for the heavy-tailed regime
/// N_c·ρ > m at high SNR where the plain sample mean is dominated by
/// near-singular channels too rare to draw.
///
/// Writing the whitened channel as G = σV with σ² = ‖G‖²_F ~ Gamma(n_T n_R)
/// independent of the direction V, and Θ(G) = σ²Θ(V), the conditional
/// expectation over σ² is the one-dimensional integral
///
/// ```text
/// E[det(I + ηΘ)^{-N_cρ} | V] = E_{t~Gamma(n_T n_R)} ∏_k (1 + η t μ_k(V))^{-N_cρ},
/// ```
///
/// evaluated by quadrature per draw. Averaging these conditional values is
/// unbiased for 𝒵 and integrates the rare small-scale events analytically,
/// so the estimator concentrates where the plain one cannot.
pub fn mc_zeta_conditioned(
    spec: &ChannelSpec,
    rho: f64,
    beta: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("rho must lie in [0,1], got {rho}")));
    }
    if !(beta > 0.0 && beta <= spec.n_t() as f64) {
        return Err(Error::invalid(format!(
            "beta must lie in (0, n_T], got {beta}"
        )));
    }
    let sampler = ChannelSampler::new(spec);
    let eta = spec.gamma() / (beta * (1.0 + rho));
    let nc_rho = spec.n_c() as f64 * rho;
    let dof = spec.n_t() * spec.n_r();
    if nc_rho == 0.0 {
        return Ok(McEstimate {
            mean: 1.0,
            std_err: 0.0,
            samples: cfg.samples,
            seed: cfg.seed,
        });
    }
    Ok(batched_expectation(cfg, 1, |rng, out| {
        let (sigma2, eigs) = sampler.draw_scale_and_eigs(rng);
        let coeffs: Vec<f64> = eigs.iter().map(|&l| (eta * l / sigma2).max(0.0)).collect();
        out[0] = crate::special::gamma_weighted_product(dof, &coeffs, nc_rho)
            .expect("conditional scale integral converges");
    })
    .pop()
    .unwrap())
}

/// Monte Carlo ergodic capacity E{ln det(I_m + (γ/n_T)Θ)} in nats/symbol.
pub fn mc_capacity(spec: &ChannelSpec, cfg: &McConfig) -> Result<McEstimate> {
    let sampler = ChannelSampler::new(spec);
    let eta = spec.gamma() / spec.n_t() as f64;
    Ok(
        batched_expectation(cfg, 1, |rng, out| {
            let eigs = sampler.draw_theta_eigs(rng);
            out[0] = eigs.iter().map(|&l| (eta * l).ln_1p()).sum();
        })
        .pop()
        .unwrap(),
    )
}

/// Monte Carlo estimate of the Gaussian-input exponent kernel for a general
/// input covariance Q (trace ≤ 𝒫):
///
/// ```text
/// E₀(Q,ρ,r,N_c) = r𝒫(1+ρ) + (1+ρ) ln det(I - rQ)
///                 - (1/N_c) ln E{det(I + H(Q⁻¹-rI)⁻¹H†/(1+ρ))^{-N_cρ}}
/// ```
///
/// The returned mean is the kernel value; the standard error is the
/// delta-method propagation of the expectation's error through the log.
pub fn mc_e0_general_q(
    spec: &ChannelSpec,
    q: &HermitianPD,
    rho: f64,
    r: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    if q.dim() != spec.n_t() {
        return Err(Error::invalid("Q must be n_T × n_T"));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("rho must lie in [0,1], got {rho}")));
    }
    if r < 0.0 {
        return Err(Error::invalid("r must be nonnegative"));
    }
    let power = spec.total_power();
    let trace_q = q.matrix().trace().re;
    if trace_q > power * (1.0 + 1e-9) {
        return Err(Error::invalid(format!(
            "tr(Q) = {trace_q:.6} exceeds the power budget {power:.6}"
        )));
    }
    let n_t = spec.n_t();
    // I - rQ must stay positive definite (r below the smallest pole).
    let mut i_minus_rq = ComplexMatrix::identity(n_t);
    for i in 0..n_t {
        for j in 0..n_t {
            let v = i_minus_rq.get(i, j) - q.matrix().get(i, j) * Complex64::new(r, 0.0);
            i_minus_rq.set(i, j, v);
        }
    }
    let gate = HermitianPD::new(i_minus_rq.clone())
        .map_err(|_| Error::domain("I - rQ is not positive definite".to_string()))?;

    // W = (Q⁻¹ - rI)⁻¹ = Q (I - rQ)⁻¹ (functions of Q commute).
    let lu = ComplexLu::factor(&i_minus_rq)?;
    let w = q.matrix().mul(&lu.solve(&ComplexMatrix::identity(n_t))?);

    let sampler = ChannelSampler::new(spec);
    let n_r = spec.n_r();
    let scale = Complex64::new(1.0 / (1.0 + rho), 0.0);
    let nc_rho = spec.n_c() as f64 * rho;
    let expectation = batched_expectation(cfg, 1, |rng, out| {
        let h = sampler.draw_h(rng);
        let m = h.mul(&w).mul(&h.dagger()).scale(scale);
        let inner = ComplexMatrix::identity(n_r).add(&m);
        let det = det_complex(&inner).expect("square by construction").re;
        out[0] = det.powf(-nc_rho);
    })
    .pop()
    .unwrap();

    let deterministic = r * power * (1.0 + rho) + (1.0 + rho) * gate.ln_det();
    let nc = spec.n_c() as f64;
    Ok(McEstimate {
        mean: deterministic - expectation.mean.ln() / nc,
        std_err: expectation.std_err / (nc * expectation.mean),
        samples: expectation.samples,
        seed: expectation.seed,
    })
}

/// Monte Carlo check of the Gaussian quadratic-form identity
///
/// ```text
/// E{etr(-A S S†)} = det(I + ΣA)^{-n} etr{-(A⁻¹+Σ)⁻¹ M M†}
/// ```
///
/// for `S ~ Gaussian(M, Σ, I_n)` (m×n). Returns the sampled left side and
/// the closed-form right side.
pub fn verify_lemma1(
    m_rows: usize,
    n_cols: usize,
    sigma: &HermitianPD,
    m_mean: &ComplexMatrix,
    a: &HermitianPD,
    cfg: &McConfig,
) -> Result<(McEstimate, f64)> {
    if sigma.dim() != m_rows || a.dim() != m_rows {
        return Err(Error::invalid("Sigma and A must be m × m"));
    }
    if m_mean.rows() != m_rows || m_mean.cols() != n_cols {
        return Err(Error::invalid("mean matrix must be m × n"));
    }

    // Right side.
    let sigma_a = sigma.matrix().mul(a.matrix());
    let mut i_plus = ComplexMatrix::identity(m_rows);
    i_plus = i_plus.add(&sigma_a);
    let det = det_complex(&i_plus)?.re;
    let a_inv = ComplexLu::factor(a.matrix())?.solve(&ComplexMatrix::identity(m_rows))?;
    let inner = a_inv.add(sigma.matrix());
    let inner_inv = ComplexLu::factor(&inner)?.solve(&ComplexMatrix::identity(m_rows))?;
    let mmh = m_mean.mul(&m_mean.dagger());
    let rhs = det.powi(-(n_cols as i32)) * (-inner_inv.mul(&mmh).trace().re).exp();

    // Left side by sampling S = M + Σ^{1/2} G.
    let sqrt_sigma = matrix_sqrt(sigma);
    let a_mat = a.matrix().clone();
    let lhs = batched_expectation(cfg, 1, |rng, out| {
        let g = sample_gaussian_matrix(m_rows, n_cols, rng);
        let s = m_mean.add(&sqrt_sigma.mul(&g));
        let quad = a_mat.mul(&s).mul(&s.dagger());
        out[0] = (-quad.trace().re).exp();
    })
    .pop()
    .unwrap();

    Ok((lhs, rhs))
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{e0_tilde, log_zeta};

    fn smoke_cfg(seed: u64) -> McConfig {
        McConfig::with_batch(20_000, seed, 500).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(999, 1).is_err());
        assert!(McConfig::with_batch(1000, 1, 3).is_err());
        let cfg = McConfig::new(1_000_000, 7).unwrap();
        assert_eq!(cfg.samples % cfg.batch, 0);
        assert!(cfg.batch >= 32);
    }

    #[test]
    fn channel_moments_identity() {
        let spec = ChannelSpec::iid(3, 3, 1, 10.0).unwrap();
        let mut rng = RngStream::from_seed(5);
        let draws = 20_000usize;
        let mut pow = 0.0;
        let mut mean = Complex64::new(0.0, 0.0);
        for _ in 0..draws {
            let h = sample_channel(&spec, &mut rng);
            pow += h.get(1, 2).norm_sqr();
            mean += h.get(1, 2);
        }
        let pow = pow / draws as f64;
        let mean = mean / draws as f64;
        assert!((pow - 1.0).abs() < 0.02, "E|H_ij|^2 = {pow}");
        assert!(mean.norm() < 0.02, "E H_ij = {mean}");
    }

    #[test]
    fn channel_transmit_correlation() {
        // E[H_{i1} conj(H_{i2})] = Φ_R[i,i] · Φ_T[1,2] = ζ_T.
        let spec = ChannelSpec::exponential(3, 3, 1, 10.0, 0.5, 0.0).unwrap();
        let mut rng = RngStream::from_seed(11);
        let draws = 50_000usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..draws {
            let h = sample_channel(&spec, &mut rng);
            acc += h.get(0, 0) * h.get(0, 1).conj();
        }
        let acc = acc / draws as f64;
        assert!(
            (acc.re - 0.5).abs() < 0.02 && acc.im.abs() < 0.02,
            "transmit correlation estimate {acc}"
        );
    }

    #[test]
    fn channel_sampling_deterministic() {
        let spec = ChannelSpec::exponential(2, 3, 1, 10.0, 0.3, 0.6).unwrap();
        let a = sample_channel(&spec, &mut RngStream::from_seed(9));
        let b = sample_channel(&spec, &mut RngStream::from_seed(9));
        assert_eq!(a, b);
    }

    #[test]
    fn gram_sides_share_nonzero_eigenvalues() {
        let spec = ChannelSpec::iid(4, 2, 1, 10.0).unwrap();
        let mut rng = RngStream::from_seed(3);
        let h = sample_channel(&spec, &mut rng);
        let hh = h.mul(&h.dagger()); // 2×2
        let hth = h.dagger().mul(&h); // 4×4
        let e_small = eigenvalues_hermitian_matrix(&hh).unwrap();
        let e_big = eigenvalues_hermitian_matrix(&hth).unwrap();
        for (a, b) in e_small.iter().zip(e_big.iter()) {
            assert!((a - b).abs() < 1e-9 * a.max(1.0), "{a} vs {b}");
        }
        for &l in &e_big[2..] {
            assert!(l.abs() < 1e-9, "extra eigenvalue should vanish: {l}");
        }
    }

    #[test]
    fn zeta_exact_cases() {
        let spec = ChannelSpec::iid(2, 2, 2, 10.0).unwrap();
        let est = mc_zeta(&spec, 0.0, 2.0, &smoke_cfg(1)).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_err, 0.0);

        // γ → 0: determinant is 1 to machine precision, exactly 1 at -300 dB.
        let spec = ChannelSpec::iid(2, 2, 2, -300.0).unwrap();
        let est = mc_zeta(&spec, 0.7, 1.5, &smoke_cfg(2)).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_err, 0.0);
    }

    #[test]
    fn zeta_matches_closed_form_smoke() {
        let spec = ChannelSpec::iid(2, 2, 2, 10.0).unwrap();
        let cfg = McConfig::with_batch(100_000, 42, 1000).unwrap();
        let est = mc_zeta(&spec, 0.5, 2.0, &cfg).unwrap();
        let closed = log_zeta(&spec, 0.5, 2.0).unwrap().exp();
        let z = est.z_score(closed);
        assert!(z.abs() <= 3.0, "z = {z}: mc {} vs closed {closed}", est.mean);
    }

    #[test]
    fn zeta_deterministic_across_thread_counts() {
        let spec = ChannelSpec::exponential(2, 2, 3, 8.0, 0.4, 0.2).unwrap();
        let cfg = smoke_cfg(77);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| mc_zeta(&spec, 0.5, 1.7, &cfg).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| mc_zeta(&spec, 0.5, 1.7, &cfg).unwrap());
        assert_eq!(single.mean.to_bits(), multi.mean.to_bits());
        assert_eq!(single.std_err.to_bits(), multi.std_err.to_bits());
    }

    #[test]
    fn zeta_grid_matches_single_point() {
        let spec = ChannelSpec::iid(2, 3, 2, 10.0).unwrap();
        let cfg = smoke_cfg(13);
        let grid = mc_zeta_grid(&spec, &[(0.3, 1.0), (0.8, 2.0)], &cfg).unwrap();
        let single = mc_zeta(&spec, 0.8, 2.0, &cfg).unwrap();
        assert_eq!(grid[1].mean.to_bits(), single.mean.to_bits());
        for e in &grid {
            assert!(e.mean > 0.0 && e.mean <= 1.0, "zeta in (0,1]: {}", e.mean);
        }
    }

    #[test]
    fn conditioned_zeta_agrees_with_plain_and_closed_form() {
        // In the light-tailed regime both estimators are valid and must
        // agree with the closed form.
        let spec = ChannelSpec::iid(2, 2, 2, 10.0).unwrap();
        let cfg = McConfig::with_batch(50_000, 33, 500).unwrap();
        let closed = log_zeta(&spec, 0.5, 2.0).unwrap().exp();
        let plain = mc_zeta(&spec, 0.5, 2.0, &cfg).unwrap();
        let cond = mc_zeta_conditioned(&spec, 0.5, 2.0, &cfg).unwrap();
        assert!(plain.z_score(closed).abs() <= 3.0);
        assert!(cond.z_score(closed).abs() <= 3.0, "conditioned {} vs {}", cond.mean, closed);
        // Conditioning on the direction strictly reduces the variance.
        assert!(
            cond.std_err < plain.std_err,
            "conditioned std err {} should beat plain {}",
            cond.std_err,
            plain.std_err
        );
    }

    #[test]
    fn conditioned_zeta_handles_heavy_tail() {
        // N_c·rho well above m at high SNR: the plain sample mean misses the
        // rare near-singular channels that dominate; the conditioned
        // estimator integrates them out analytically.
        let spec = ChannelSpec::iid(3, 3, 5, 15.0).unwrap();
        let cfg = McConfig::with_batch(20_000, 9, 500).unwrap();
        let closed = log_zeta(&spec, 1.0, 1.5).unwrap().exp();
        let cond = mc_zeta_conditioned(&spec, 1.0, 1.5, &cfg).unwrap();
        let z = cond.z_score(closed);
        assert!(
            z.abs() <= 3.0,
            "conditioned {} +- {} vs closed {closed} (z = {z:.2})",
            cond.mean,
            cond.std_err
        );
        assert!(
            cond.std_err < 0.05 * closed,
            "estimator should concentrate: {} vs mean {closed}",
            cond.std_err
        );
    }

    #[test]
    fn capacity_gamma_zero() {
        let spec = ChannelSpec::iid(3, 3, 1, -300.0).unwrap();
        let est = mc_capacity(&spec, &smoke_cfg(4)).unwrap();
        assert!(est.mean.abs() < 1e-12);
    }

    #[test]
    fn general_q_equal_power_reduces_to_kernel() {
        // Q = (𝒫/n_T) I with β = n_T - r𝒫.
        let spec = ChannelSpec::iid(2, 2, 2, 10.0).unwrap();
        let power = spec.total_power();
        let q = HermitianPD::from_diagonal(&[power / 2.0, power / 2.0]).unwrap();
        let cfg = McConfig::with_batch(100_000, 21, 1000).unwrap();

        // r = 0 corresponds to beta = n_T.
        let est = mc_e0_general_q(&spec, &q, 0.6, 0.0, &cfg).unwrap();
        let closed = e0_tilde(&spec, 0.6, 2.0).unwrap();
        assert!(
            est.z_score(closed).abs() <= 3.0,
            "r=0: mc {} vs closed {closed}",
            est.mean
        );

        // r > 0: beta = n_T - r𝒫.
        let r = 0.05;
        let beta = 2.0 - r * power;
        let est = mc_e0_general_q(&spec, &q, 0.4, r, &cfg).unwrap();
        let closed = e0_tilde(&spec, 0.4, beta).unwrap();
        assert!(
            est.z_score(closed).abs() <= 3.0,
            "r={r}: mc {} vs closed {closed}",
            est.mean
        );
    }

    #[test]
    fn general_q_trivial_zero() {
        let spec = ChannelSpec::iid(2, 2, 2, 10.0).unwrap();
        let q = HermitianPD::from_diagonal(&[1.0, 1.0]).unwrap();
        let est = mc_e0_general_q(&spec, &q, 0.0, 0.0, &smoke_cfg(3)).unwrap();
        assert!(est.mean.abs() < 1e-12, "E0(rho=0, r=0) = {}", est.mean);
    }

    #[test]
    fn general_q_rejects_indefinite_gate() {
        let spec = ChannelSpec::iid(2, 2, 2, 10.0).unwrap();
        let q = HermitianPD::from_diagonal(&[5.0, 4.0]).unwrap();
        // r = 1 makes I - rQ indefinite.
        assert!(matches!(
            mc_e0_general_q(&spec, &q, 0.5, 1.0, &smoke_cfg(5)),
            Err(Error::Domain(_)) | Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn lemma1_identity_and_limits() {
        // A → 0: both sides → 1.
        let eps = HermitianPD::from_diagonal(&[1e-8, 1e-8]).unwrap();
        let sigma = HermitianPD::identity(2);
        let mean = ComplexMatrix::zeros(2, 2);
        let (lhs, rhs) = verify_lemma1(2, 2, &sigma, &mean, &eps, &smoke_cfg(6)).unwrap();
        assert!((lhs.mean - 1.0).abs() < 1e-6);
        assert!((rhs - 1.0).abs() < 1e-7);

        // M = 0, Σ = I, A = I, m = n = 2: rhs = det(2I)^{-2} = 1/16.
        let a = HermitianPD::identity(2);
        let (lhs, rhs) = verify_lemma1(2, 2, &sigma, &mean, &a, &smoke_cfg(7)).unwrap();
        assert!((rhs - 1.0 / 16.0).abs() < 1e-12);
        assert!(lhs.z_score(rhs).abs() <= 3.0, "lhs {} vs 1/16", lhs.mean);
    }
}
