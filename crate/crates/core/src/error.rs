use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty measure")]
    EmptyMeasure,

    #[error("no support near the query region: {0}")]
    NoSupport(String),

    #[error("evaluation point too close to the support (distance {dist}, need >= {min})")]
    OnSupport { dist: f64, min: f64 },

    #[error("resolution floor violated: {0}")]
    ResolutionFloor(String),

    #[error("iteration did not converge after {iterations} steps (last relative change {last_change})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
