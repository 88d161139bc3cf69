//! Downlink symbol-level precoding.
//!
//! Each transmit vector is chosen so that every noise-free received AF-domain
//! symbol lands inside its PSK decision sector with the largest possible
//! worst-case margin. The design is solved through its simplex-constrained dual
//! and recovered in closed form.

mod problem;
mod qp;
mod waveform;

pub use problem::{build_precode_problem, ci_margin, PrecodeProblem};
pub use qp::{project_simplex, solve_dual_qp, QpOptions, QpSolution};
pub use waveform::{mmse_precode, recover_waveform, slp_precode, PrecodeDiagnostic, PrecodeSolution, Waveform};
