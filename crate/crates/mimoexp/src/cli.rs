//! Command front end: builds channels from inline parameters or matrix
//! files, dispatches the capacity/cutoff/curve/length/validate commands,
//! and serializes results as CSV or JSON.
//!
//! Floats are serialized with Rust's shortest round-trip formatting, so
//! every emission re-parses to exactly the computed value. Given the same
//! [`RunConfig`] (including the Monte Carlo seed) the output is
//! byte-identical.

use crate::error::{Error, Result};
use crate::exponent::{self, ChannelSpec, ExponentEvaluator};
use crate::linalg::{ComplexMatrix, HermitianPD};
use crate::montecarlo::{mc_capacity, mc_zeta_grid, McConfig};
use crate::optimizer::{default_rho_grid, tradeoff_curve};
use crate::planner::{length_table, length_table_csv};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Output serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Channel source: inline exponential-model parameters, or explicit
/// correlation matrix files.
#[derive(Debug, Clone)]
pub enum ChannelInput {
    Inline {
        n_t: usize,
        n_r: usize,
        n_c: usize,
        gamma_db: f64,
        zeta_t: f64,
        zeta_r: f64,
    },
    Files {
        n_c: usize,
        gamma_db: f64,
        phi_t_path: PathBuf,
        phi_r_path: PathBuf,
    },
}

/// Which analysis to run.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Capacity,
    Cutoff,
    Curve { grid_points: usize },
    Length { rate_bits: f64, target_pe: f64 },
    Validate,
}

/// A fully resolved invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub channel: ChannelInput,
    pub format: OutputFormat,
    /// Present output rates/exponents in bits instead of nats.
    pub bits: bool,
    /// Monte Carlo settings for `validate`.
    pub mc: Option<McConfig>,
}

/// Maps an error to the process exit status: 1 for unparseable inputs,
/// 2 for domain/validation errors, 3 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_) => 1,
        Error::Invalid(_) | Error::Domain(_) => 2,
        Error::Numerical { .. } => 3,
    }
}

#[derive(Deserialize)]
struct MatrixFile {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

/// Loads a correlation matrix from the JSON format
/// `{"dim": d, "entries": [[re, im], ...]}` (row-major), validating
/// Hermitian positive definiteness and the unit diagonal.
pub fn load_correlation_file(path: &Path) -> Result<HermitianPD> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::parse(format!("cannot read {}: {e}", path.display())))?;
    let parsed: MatrixFile = serde_json::from_str(&text).map_err(|e| {
        Error::parse(format!(
            "{}: invalid matrix JSON at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    let d = parsed.dim;
    if parsed.entries.len() != d * d {
        return Err(Error::parse(format!(
            "{}: expected {} entries for dim {d}, found {}",
            path.display(),
            d * d,
            parsed.entries.len()
        )));
    }
    let m = ComplexMatrix::from_fn(d, d, |i, j| {
        let [re, im] = parsed.entries[i * d + j];
        Complex64::new(re, im)
    });
    for i in 0..d {
        let v = m.get(i, i);
        if (v.re - 1.0).abs() > 1e-12 || v.im.abs() > 1e-12 {
            return Err(Error::parse(format!(
                "{}: diagonal entry ({i},{i}) = {v} violates the unit-diagonal invariant",
                path.display()
            )));
        }
    }
    HermitianPD::new(m).map_err(|e| {
        Error::parse(format!(
            "{}: correlation matrix invariant violated: {e}",
            path.display()
        ))
    })
}

/// Builds the channel described by a [`ChannelInput`].
pub fn build_channel(input: &ChannelInput) -> Result<ChannelSpec> {
    match input {
        ChannelInput::Inline {
            n_t,
            n_r,
            n_c,
            gamma_db,
            zeta_t,
            zeta_r,
        } => ChannelSpec::exponential(*n_t, *n_r, *n_c, *gamma_db, *zeta_t, *zeta_r),
        ChannelInput::Files {
            n_c,
            gamma_db,
            phi_t_path,
            phi_r_path,
        } => {
            let phi_t = load_correlation_file(phi_t_path)?;
            let phi_r = load_correlation_file(phi_r_path)?;
            let (n_t, n_r) = (phi_t.dim(), phi_r.dim());
            ChannelSpec::with_correlation(n_t, n_r, *n_c, *gamma_db, phi_t, phi_r)
        }
    }
}

fn unit_label(bits: bool) -> &'static str {
    if bits {
        "bits/symbol"
    } else {
        "nats/symbol"
    }
}

fn present(value_nats: f64, bits: bool) -> f64 {
    if bits {
        exponent::nats_to_bits(value_nats)
    } else {
        value_nats
    }
}

#[derive(Serialize)]
struct ScalarOut<'a> {
    quantity: &'a str,
    value: f64,
    unit: &'a str,
}

#[derive(Serialize)]
struct CurvePointOut {
    rho: f64,
    beta_star: f64,
    rate: f64,
    exponent: f64,
}

#[derive(Serialize)]
struct CurveOut<'a> {
    unit: &'a str,
    capacity: f64,
    critical_rate: f64,
    cutoff_rate: f64,
    zero_rate_exponent: f64,
    points: Vec<CurvePointOut>,
}

#[derive(Serialize)]
struct ValidateRowOut {
    check: String,
    rho: Option<f64>,
    beta: Option<f64>,
    closed_form: f64,
    mc_mean: f64,
    mc_std_err: f64,
    z_score: f64,
}

/// Executes the configured command and returns the serialized output.
pub fn run(config: &RunConfig) -> Result<String> {
    let spec = build_channel(&config.channel)?;
    match &config.command {
        Command::Capacity => {
            let v = exponent::ergodic_capacity(&spec)?;
            scalar_output(config, "capacity", v)
        }
        Command::Cutoff => {
            let v = exponent::cutoff_rate(&spec)?;
            scalar_output(config, "cutoff_rate", v)
        }
        Command::Curve { grid_points } => curve_output(config, &spec, *grid_points),
        Command::Length {
            rate_bits,
            target_pe,
        } => {
            let rate_nats = rate_bits * std::f64::consts::LN_2;
            let label = spec_label(&spec);
            let rows = length_table(&[(label, spec)], rate_nats, *target_pe)?;
            match config.format {
                OutputFormat::Csv => Ok(length_table_csv(&rows)),
                OutputFormat::Json => {
                    #[derive(Serialize)]
                    struct LengthOut {
                        spec_id: String,
                        rate_bits: f64,
                        target_pe: f64,
                        feasible: bool,
                        rho_opt: Option<f64>,
                        beta_opt: Option<f64>,
                        exponent_nats: Option<f64>,
                        n_b: Option<f64>,
                        length_symbols: Option<u64>,
                    }
                    let r = &rows[0];
                    let out = LengthOut {
                        spec_id: r.spec_id.clone(),
                        rate_bits: r.rate_bits,
                        target_pe: r.target_pe,
                        feasible: r.plan.is_some(),
                        rho_opt: r.plan.map(|p| p.rho_opt),
                        beta_opt: r.plan.map(|p| p.beta_opt),
                        exponent_nats: r.plan.map(|p| p.exponent),
                        n_b: r.plan.map(|p| p.n_b),
                        length_symbols: r.plan.map(|p| p.length),
                    };
                    to_json(&out)
                }
            }
        }
        Command::Validate => validate_output(config, &spec),
    }
}

fn spec_label(spec: &ChannelSpec) -> String {
    format!(
        "{}x{}-nc{}-{}dB",
        spec.n_t(),
        spec.n_r(),
        spec.n_c(),
        spec.gamma_db()
    )
}

fn scalar_output(config: &RunConfig, quantity: &str, value_nats: f64) -> Result<String> {
    let value = present(value_nats, config.bits);
    let unit = unit_label(config.bits);
    match config.format {
        OutputFormat::Csv => Ok(format!("quantity,value,unit\n{quantity},{value},{unit}\n")),
        OutputFormat::Json => to_json(&ScalarOut {
            quantity,
            value,
            unit,
        }),
    }
}

fn curve_output(config: &RunConfig, spec: &ChannelSpec, grid_points: usize) -> Result<String> {
    let grid = if grid_points == 0 || grid_points == 41 {
        default_rho_grid(spec)
    } else {
        custom_rho_grid(spec, grid_points)?
    };
    let curve = tradeoff_curve(spec, &grid)?;
    let b = config.bits;
    let points: Vec<CurvePointOut> = curve
        .points
        .iter()
        .map(|p| CurvePointOut {
            rho: p.rho,
            beta_star: p.beta_star,
            rate: present(p.rate, b),
            exponent: present(p.exponent, b),
        })
        .collect();
    match config.format {
        OutputFormat::Csv => {
            let unit = if b { "bits" } else { "nats" };
            let mut out = format!("rho,beta_star,rate_{unit},exponent_{unit}\n");
            for p in &points {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    p.rho, p.beta_star, p.rate, p.exponent
                ));
            }
            Ok(out)
        }
        OutputFormat::Json => to_json(&CurveOut {
            unit: unit_label(b),
            capacity: present(curve.capacity, b),
            critical_rate: present(curve.critical_rate, b),
            cutoff_rate: present(curve.cutoff_rate, b),
            zero_rate_exponent: present(curve.zero_rate_exponent, b),
            points,
        }),
    }
}

fn custom_rho_grid(spec: &ChannelSpec, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid("curve grid needs at least 2 points"));
    }
    let nc = spec.n_c() as f64;
    let m = spec.m();
    let mut grid: Vec<f64> = (0..n)
        .map(|k| 0.5 * (1.0 - (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()))
        .collect();
    for rho in grid.iter_mut().take(n - 1).skip(1) {
        let x = *rho * nc;
        let k = x.round();
        if k >= 1.0 && (k as usize) <= m.saturating_sub(1) && (x - k).abs() < 1e-4 {
            *rho += 1e-4;
        }
    }
    Ok(grid)
}

fn validate_output(config: &RunConfig, spec: &ChannelSpec) -> Result<String> {
    let cfg = config
        .mc
        .unwrap_or(McConfig::with_batch(1_000_000, 42, 1_000)?);
    let ev = ExponentEvaluator::new(spec)?;
    let mut rows: Vec<ValidateRowOut> = Vec::new();

    let cap_closed = ev.ergodic_capacity()?;
    let cap_mc = mc_capacity(spec, &cfg)?;
    rows.push(ValidateRowOut {
        check: "capacity".to_string(),
        rho: None,
        beta: None,
        closed_form: cap_closed,
        mc_mean: cap_mc.mean,
        mc_std_err: cap_mc.std_err,
        z_score: cap_mc.z_score(cap_closed),
    });

    let nt = spec.n_t() as f64;
    let points: Vec<(f64, f64)> = [0.25, 0.5, 0.75, 1.0]
        .iter()
        .flat_map(|&rho| [(rho, 0.5 * nt), (rho, nt)])
        .collect();
    let estimates = mc_zeta_grid(spec, &points, &cfg)?;
    for (&(rho, beta), est) in points.iter().zip(&estimates) {
        let closed = ev.log_zeta(rho, beta)?.exp();
        rows.push(ValidateRowOut {
            check: "zeta".to_string(),
            rho: Some(rho),
            beta: Some(beta),
            closed_form: closed,
            mc_mean: est.mean,
            mc_std_err: est.std_err,
            z_score: est.z_score(closed),
        });
    }

    match config.format {
        OutputFormat::Csv => {
            let mut out =
                String::from("check,rho,beta,closed_form,mc_mean,mc_std_err,z_score\n");
            for r in &rows {
                let rho = r.rho.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
                let beta = r.beta.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
                out.push_str(&format!(
                    "{},{rho},{beta},{},{},{},{}\n",
                    r.check, r.closed_form, r.mc_mean, r.mc_std_err, r.z_score
                ));
            }
            Ok(out)
        }
        OutputFormat::Json => to_json(&rows),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::numerical(format!("JSON serialization failed: {e}"), None))
}

// ---------------------------------------------------------------------------
