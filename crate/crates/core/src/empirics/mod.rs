//! Monte Carlo estimators to set against the analytic bounds.

mod checks;
mod histogram;
mod hitting;
mod regen;
mod report;
mod stationarity;

pub use checks::{ball_hitting_certificate, hitting_starts, tail_s_reports, HittingCheck};
pub use histogram::{empirical_distribution, empirical_distributions, tv_distance, Histogram, HistogramSpec};
pub use hitting::{
    estimate_hitting_ball, estimate_hitting_z, estimate_tail_s, exponential_moment, hitting_time_ball, HittingSamples,
    TailEstimate,
};
pub use regen::{regeneration_ratio, RegenerationEstimate, TestFunction, MIN_EXCURSIONS};
pub use report::{BoundReport, Verdict};
pub use stationarity::{stationarity_diagnostic, StationarityFunction, StationarityReport, BATCHES};
