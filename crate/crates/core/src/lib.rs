//! Asymptotic secret-key rates for Gaussian-modulated coherent-state (GMCS)
//! continuous-variable QKD when the source intensity fluctuates from pulse to
//! pulse.
//!
//! The crate is organised bottom-up:
//!
//! - [`rate`]: the ideal reverse-reconciliation rate `R0 = beta*I_AB - chi_BE`
//!   under collective attacks with a trusted (inaccessible) homodyne detector.
//! - [`fluctuation`]: the per-pulse intensity multiplier `d` (mean 1,
//!   variance `V_d`), with quadrature expectations and seeded sampling.
//! - [`cases`]: rates for a monitored source (`R1`, refined `R1R`), an
//!   unmonitored source where Eve has no side information (`R2A`), and the
//!   tagged/untagged analysis where she does (`R2B`), plus the cutoff optimizer.
//! - [`montecarlo`]: pulse-level simulation and the covariance-based
//!   channel estimators used to check the equivalent-source reductions.
//! - [`detector`]: unbalanced splitter and LO phase-error models for the
//!   homodyne receiver, with their software compensations.
//!
//! All quadratures and noises are in shot-noise units (vacuum variance 1) and
//! all rates are bits per pulse. Nothing here clamps a negative rate to zero;
//! that belongs to reporting layers.

// `!(x > 0.0)` is used on purpose so NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod detector;
mod error;
pub mod fluctuation;
pub mod montecarlo;
mod params;
mod quadrature;
pub mod rate;
mod rng;
pub mod search;

pub use error::{Error, Result};
pub use params::{channel_transmittance, ChannelPoint, SystemParams};
pub use rate::{CaseTag, KeyRateResult};
