//! `mimoexp` — reliability–rate analysis for correlated block-fading MIMO
//! channels from the command line. Thin argument-parsing shell over the
//! library; see `mimoexp <command> --help`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use mimoexp::cli::{self, ChannelInput, Command, OutputFormat, RunConfig};
use mimoexp::montecarlo::McConfig;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "mimoexp",
    version,
    about = "Error exponents, capacity, cutoff rate, and codeword-length planning for correlated MIMO block-fading channels"
)]
struct CliArgs {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Ergodic capacity of the channel.
    Capacity(ChannelArgs),
    /// Cutoff rate R0 at the configured coherence time.
    Cutoff(ChannelArgs),
    /// Error-exponent versus rate tradeoff curve.
    Curve(CurveArgs),
    /// Required codeword length for a target error probability.
    Length(LengthArgs),
    /// Cross-check the closed forms against Monte Carlo sampling.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ChannelArgs {
    /// Transmit antennas.
    #[arg(long)]
    nt: usize,
    /// Receive antennas.
    #[arg(long)]
    nr: usize,
    /// Coherence time in symbols.
    #[arg(long, default_value_t = 1)]
    nc: usize,
    /// Average SNR per receive antenna, in dB.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: f64,
    /// Transmit-side exponential correlation coefficient.
    #[arg(long, default_value_t = 0.0, conflicts_with = "phi_t")]
    zt: f64,
    /// Receive-side exponential correlation coefficient.
    #[arg(long, default_value_t = 0.0, conflicts_with = "phi_r")]
    zr: f64,
    /// Transmit correlation matrix file (JSON {"dim", "entries"}).
    #[arg(long = "phi-t")]
    phi_t: Option<PathBuf>,
    /// Receive correlation matrix file.
    #[arg(long = "phi-r")]
    phi_r: Option<PathBuf>,
    /// Report rates in bits/symbol instead of nats/symbol.
    #[arg(long)]
    bits: bool,
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Write output to a file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Number of rho grid points (Chebyshev spaced).
    #[arg(long, default_value_t = 41)]
    grid_points: usize,
}

#[derive(Args)]
struct LengthArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Information rate in bits/symbol.
    #[arg(long = "rate-bits")]
    rate_bits: f64,
    /// Target block error probability.
    #[arg(long = "pe")]
    target_pe: f64,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Monte Carlo seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

fn channel_input(args: &ChannelArgs) -> ChannelInput {
    match (&args.phi_t, &args.phi_r) {
        (Some(t), Some(r)) => ChannelInput::Files {
            n_c: args.nc,
            gamma_db: args.snr_db,
            phi_t_path: t.clone(),
            phi_r_path: r.clone(),
        },
        (None, None) => ChannelInput::Inline {
            n_t: args.nt,
            n_r: args.nr,
            n_c: args.nc,
            gamma_db: args.snr_db,
            zeta_t: args.zt,
            zeta_r: args.zr,
        },
        _ => {
            // Mixed sources: fall back to inline and let one side default;
            // clap conflicts prevent zt/phi-t overlap, but require both files.
            eprintln!("error: --phi-t and --phi-r must be given together");
            std::process::exit(2);
        }
    }
}

fn main() {
    if let Ok(threads) = std::env::var("MIMOEXP_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }

    let args = CliArgs::parse();
    let (channel_args, command, mc) = match &args.command {
        CliCommand::Capacity(c) => (c, Command::Capacity, None),
        CliCommand::Cutoff(c) => (c, Command::Cutoff, None),
        CliCommand::Curve(c) => (
            &c.channel,
            Command::Curve {
                grid_points: c.grid_points,
            },
            None,
        ),
        CliCommand::Length(c) => (
            &c.channel,
            Command::Length {
                rate_bits: c.rate_bits,
                target_pe: c.target_pe,
            },
            None,
        ),
        CliCommand::Validate(c) => {
            let cfg = match McConfig::new(c.samples, c.seed) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    std::process::exit(cli::exit_code(&e));
                }
            };
            (&c.channel, Command::Validate, Some(cfg))
        }
    };

    let config = RunConfig {
        command,
        channel: channel_input(channel_args),
        format: channel_args.format.into(),
        bits: channel_args.bits,
        mc,
    };

    match cli::run(&config) {
        Ok(output) => {
            if let Some(path) = &channel_args.output {
                if let Err(e) = std::fs::write(path, &output) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    std::process::exit(1);
                }
            } else {
                let mut stdout = std::io::stdout().lock();
                let _ = stdout.write_all(output.as_bytes());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(cli::exit_code(&e));
        }
    }
}
