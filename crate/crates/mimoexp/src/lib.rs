//! Reliability–rate analysis for spatially correlated block-fading MIMO
//! channels: the random coding error exponent, ergodic capacity, cutoff
//! rate, and required-codeword-length planning, all in closed
//! determinantal form with a Monte Carlo oracle for cross-validation.
//!
//! The channel model is Rayleigh block fading with Kronecker-structured
//! spatial correlation, `H = Φ_R^{1/2} H₀ Φ_T^{1/2}`, constant over `N_c`
//! symbols per coherence interval, perfect CSI at the receiver, Gaussian
//! codebooks with equal per-antenna power.
//!
//! Entry points:
//! - [`exponent::ChannelSpec`] describes a channel (antennas, SNR,
//!   coherence time, correlation).
//! - [`exponent`] evaluates `Ẽ₀(ρ,β,N_c)`, its partial derivatives, the
//!   ergodic capacity, and the cutoff rate in closed form.
//! - [`optimizer`] maximizes over `(ρ,β)` to produce the error-exponent
//!   versus rate tradeoff curve.
//! - [`planner`] turns a target error probability into a required codeword
//!   length.
//! - [`montecarlo`] is an independent sampling-based oracle for every
//!   closed-form expectation.
//!
//! See the crate `examples/` directory for runnable walkthroughs of each
//! capability, and the `mimoexp` binary for a CSV/JSON command-line front
//! end.

pub mod cli;
pub mod error;
pub mod exponent;
pub mod montecarlo;
pub mod optimizer;
pub mod planner;
pub mod linalg;
pub mod special;
pub mod spectra;

pub use error::{Error, Result};
