//! Simulation toolkit for a two-phase AFDM link.
//!
//! The uplink phase estimates the affine-frequency-domain channel from a single
//! pilot symbol with a hierarchical sparse Bayesian learner (EM updates), with
//! OMP and linear MMSE baselines and a Bayesian Cramér-Rao bound. The downlink
//! phase reuses that CSI to design each transmit vector by symbol-level
//! precoding, so the user decides symbols directly without equalization.
//!
//! Modules, bottom-up:
//! - [`afdm`]: DAFT/IDAFT, chirp-periodic prefix, PSK mapping.
//! - [`channel`]: path taps, effective AF-domain channel matrices, time-domain propagation.
//! - [`sbl`]: dictionary, SBL/EM estimator, OMP, MMSE, BCRLB, equalizer.
//! - [`slp`]: constructive-interference margin, simplex dual QP, waveform recovery.
//! - [`sim`]: pilots, metrics, Monte Carlo sweeps, result emission.
//! - [`oracle`]: slow reference implementations used for cross-checks.
//! - [`selftest`]: quick oracle-equivalence checks behind the CLI.
//! - [`par`]: ordered trial runner, rayon-backed when the `parallel` feature is on.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod afdm;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod par;
pub mod sbl;
pub mod selftest;
pub mod sim;
pub mod slp;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;
