//! Numerical consequences of the determinantal derivation, checked at small
//! sizes against routes that do not share code with the closed forms.

mod common;

use mimoexp::exponent::{ergodic_capacity, ChannelSpec, ExponentEvaluator};
use mimoexp::linalg::{det_complex, sample_gaussian_matrix, ComplexMatrix, RngStream};
use mimoexp::spectra::{characteristic_coefficients, eigen_structure, exponential_correlation};
use num_complex::Complex64;

/// Kronecker product of two complex matrices.
fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = (a.rows(), a.cols());
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a.get(i / br, j / bc) * b.get(i % br, j % bc)
    })
}

/// For integer N_c·ρ = k, the expectation E{det(I_m + ηΘ)^{-N_cρ}} equals
/// E_S{det(I_{kn} + η (S†Φ₁S) ⊗ Φ₂)^{-1}} with S an m×k standard complex
/// Gaussian — a completely different random-matrix route than the
/// closed-form determinant. Check both against each other.
#[test]
fn integer_branch_matches_kronecker_route() {
    for (spec, k) in [
        (ChannelSpec::exponential(2, 2, 2, 8.0, 0.4, 0.6).unwrap(), 1usize),
        (ChannelSpec::exponential(2, 2, 2, 8.0, 0.4, 0.6).unwrap(), 2),
        (ChannelSpec::exponential(3, 2, 4, 10.0, 0.5, 0.7).unwrap(), 2),
    ] {
        let ev = ExponentEvaluator::new(&spec).unwrap();
        let beta = 0.8 * spec.n_t() as f64;
        let rho = k as f64 / spec.n_c() as f64;
        let eta = spec.gamma() / (beta * (1.0 + rho));
        let closed = ev.log_zeta_integer(k, beta).unwrap().exp();

        let m = spec.m();
        let n = spec.n();
        let phi1 = spec.phi1().matrix().clone();
        let phi2 = spec.phi2().matrix().clone();
        let samples = 200_000usize;
        let batches = 200usize;
        let per = samples / batches;
        let mut batch_means = Vec::with_capacity(batches);
        for b in 0..batches {
            let mut rng = RngStream::substream(991, b as u64);
            let mut acc = 0.0;
            for _ in 0..per {
                let s = sample_gaussian_matrix(m, k, &mut rng);
                let z = s.dagger().mul(&phi1).mul(&s);
                let big = kron(&z, &phi2).scale(Complex64::new(eta, 0.0));
                let inner = ComplexMatrix::identity(k * n).add(&big);
                acc += 1.0 / det_complex(&inner).unwrap().re;
            }
            batch_means.push(acc / per as f64);
        }
        let mean: f64 = batch_means.iter().sum::<f64>() / batches as f64;
        let var: f64 = batch_means
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / ((batches - 1) as f64 * batches as f64);
        let z_score = (mean - closed) / var.sqrt();
        assert!(
            z_score.abs() <= 3.0,
            "{}x{} k={k}: closed {closed:.6e} vs kron-route {mean:.6e} (z = {z_score:.2})",
            spec.n_t(),
            spec.n_r()
        );
    }
}

/// The scalar channel admits a direct one-dimensional quadrature of the
/// determinant expectation; the general branch must reproduce it at
/// non-integer N_c·ρ.
#[test]
fn general_branch_matches_scalar_quadrature() {
    let spec = ChannelSpec::iid(1, 1, 3, 12.0).unwrap();
    let ev = ExponentEvaluator::new(&spec).unwrap();
    for rho in [0.21, 0.5, 0.9] {
        let beta = 0.77;
        let eta = spec.gamma() / (beta * (1.0 + rho));
        let nc_rho = 3.0 * rho;
        // E{(1+η|h|²)^{-N_cρ}} with |h|² ~ Exp(1).
        let oracle = common::simpson(
            |x| (1.0 + eta * x).powf(-nc_rho) * (-x).exp(),
            80.0,
            200_000,
        );
        let got = ev.log_zeta_general(rho, beta).unwrap().exp();
        assert!(
            (got - oracle).abs() <= 1e-8 * oracle,
            "rho={rho}: general branch {got:.12e} vs quadrature {oracle:.12e}"
        );
    }
}

/// One-sided reduction: with Φ₂ = I the correlated path must agree with a
/// direct Monte Carlo estimate of the determinant expectation.
#[test]
fn one_sided_correlation_matches_monte_carlo() {
    use mimoexp::montecarlo::{mc_zeta, McConfig};
    // n_R < n_T puts Φ₁ = Φ_R (correlated) and Φ₂ = Φ_T = I.
    let phi_r = exponential_correlation(2, 0.6).unwrap();
    let spec = ChannelSpec::with_correlation(
        3,
        2,
        2,
        10.0,
        mimoexp::linalg::HermitianPD::identity(3),
        phi_r,
    )
    .unwrap();
    let cfg = McConfig::with_batch(400_000, 5150, 1000).unwrap();
    let ev = ExponentEvaluator::new(&spec).unwrap();
    for (rho, beta) in [(0.5, 2.4), (1.0, 3.0)] {
        let est = mc_zeta(&spec, rho, beta, &cfg).unwrap();
        let closed = ev.log_zeta(rho, beta).unwrap().exp();
        let z = est.z_score(closed);
        assert!(
            z.abs() <= 3.0,
            "one-sided (rho={rho}, beta={beta}): closed {closed:.5e} vs mc {:.5e} (z={z:.2})",
            est.mean
        );
    }
}

/// Capacity from the Λ-trace formula against the classical i.i.d.
/// eigenvalue-density quadrature.
#[test]
fn capacity_matches_laguerre_density_oracle() {
    for (nt, nr, db) in [
        (2usize, 2usize, 10.0),
        (3, 3, 15.0),
        (2, 3, 8.0),
        (4, 2, 12.0),
    ] {
        let spec = ChannelSpec::iid(nt, nr, 1, db).unwrap();
        let ours = ergodic_capacity(&spec).unwrap();
        let oracle = common::iid_capacity_oracle(nt, nr, spec.gamma());
        assert!(
            (ours - oracle).abs() <= 1e-8 * oracle,
            "{nt}x{nr} @{db} dB: {ours:.12} vs oracle {oracle:.12}"
        );
    }
}

/// The characteristic-coefficient expansion reproduces the reciprocal
/// determinant det(I + u Φ)⁻¹ pointwise, including repeated eigenvalues.
#[test]
fn reciprocal_determinant_expansion() {
    let mats = [
        exponential_correlation(3, 0.7).unwrap(), // distinct eigenvalues
        mimoexp::linalg::HermitianPD::identity(4), // single repeated eigenvalue
        exponential_correlation(4, 0.3).unwrap(),
    ];
    for phi in mats {
        let es = eigen_structure(&phi, 1e-6);
        let cc = characteristic_coefficients(&es);
        for k in 0..20 {
            let u = 0.1 + 0.45 * k as f64;
            let scaled = phi
                .matrix()
                .scale(Complex64::new(u, 0.0))
                .add(&ComplexMatrix::identity(phi.dim()));
            let direct = 1.0 / det_complex(&scaled).unwrap().re;
            let expanded = cc.evaluate(es.distinct(), u);
            assert!(
                (direct - expanded).abs() <= 1e-9,
                "dim {} at u={u}: det route {direct} vs expansion {expanded}",
                phi.dim()
            );
        }
    }
}
