use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The ray left the support of a tabulated rate before the requested time.
    #[error("rate undefined at |x| = {radius}: outside the tabulated support")]
    OutsideTable { radius: f64 },

    #[error("jump rate vanishes on an unbounded terminal ray segment")]
    ZeroTerminalRate,

    #[error("jump count exceeded the cap of {cap} before time {time}: runaway rate?")]
    RunawayRate { cap: usize, time: f64 },

    #[error("thinning bound {bound} is below the rate {rate}")]
    ThinningBound { bound: f64, rate: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("quadrature produced a non-finite value: {0}")]
    Quadrature(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("histograms have different bin edges")]
    MismatchedEdges,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
