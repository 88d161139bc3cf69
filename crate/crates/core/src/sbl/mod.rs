//! Uplink channel estimation over a delay-Doppler dictionary.

mod dictionary;
mod em;
mod linear;
mod omp;

pub use dictionary::{build_dictionary, Atom, Dictionary};
pub use em::{
    e_step, initial_state, keep_strongest, m_step, sbl_estimate, trace_csv, Combination, MStepReport, SblHyper,
    SblOutput, SblState, TraceRow, PRUNE_FLOOR,
};
pub use linear::{bcrlb, genie_prior, mmse_equalize, mmse_estimate};
pub use omp::omp_estimate;
