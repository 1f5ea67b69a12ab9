use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no factors")]
    NoFactors,

    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimsMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("invalid projector: {0}")]
    InvalidProjector(String),

    #[error("invalid bipartition: {0}")]
    InvalidSplit(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("transcript probability mass for state {state} is {mass}, expected 1")]
    ProbabilityMass { state: usize, mass: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("search budget of {0:?} exhausted")]
    BudgetExceeded(Duration),

    #[error("{0}")]
    ScheduleSearch(Box<ScheduleSearchFailure>),

    #[error("malformed document: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Why the multi-copy schedule constructor gave up, with the closest
/// candidates it saw.
#[derive(Debug, Clone)]
pub struct ScheduleSearchFailure {
    pub reason: String,
    pub copies_tried: usize,
    /// Pairs of state indices that the best partial schedule still confuses.
    pub best_unresolved_pairs: Vec<(usize, usize)>,
    /// Human-readable descriptions of the best partial schedules.
    pub frontier: Vec<String>,
}

impl std::fmt::Display for ScheduleSearchFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "schedule search failed after {} copies: {} ({} pairs unresolved)",
            self.copies_tried,
            self.reason,
            self.best_unresolved_pairs.len()
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
