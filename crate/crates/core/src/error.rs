use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("distance {distance} m exceeds the radio range of {d_max} m")]
    RangeViolation { distance: f64, d_max: f64 },

    #[error("sensor {sensor} cannot reach the sink")]
    Unreachable { sensor: usize },

    #[error("map generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: usize, reason: String },

    #[error("invalid action {action}: {reason}")]
    InvalidAction { action: usize, reason: &'static str },

    #[error("episode already finished at round {round}")]
    EpisodeFinished { round: u64 },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("policy failed: {0}")]
    Policy(String),

    #[error("search too large: {sequences} sequences exceed the budget of {budget}")]
    SearchBudget { sequences: f64, budget: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
