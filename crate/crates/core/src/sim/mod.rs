//! Monte Carlo experiment drivers and their inputs and outputs.

mod config;
mod downlink;
mod metrics;
mod output;
mod pilot;
mod uplink;

pub use config::{
    AfdmSection, ChannelSection, CsiSource, EstimatorSection, ExperimentConfig, PrecoderSection, SweepSection,
};
pub use downlink::{run_downlink_sweep, Constellation, ConstellationPoint, DownlinkReport};
pub use metrics::{ber, bit_errors, nmse_db, nmse_ratio, ratio_to_db, MeanAccumulator, NMSE_FLOOR_DB};
pub use output::{line_plot_svg, ResultRow, ResultTable};
pub use pilot::zc_pilot;
pub use uplink::{observe_pilot, run_uplink_sweep, trial_rng, UplinkReport};
