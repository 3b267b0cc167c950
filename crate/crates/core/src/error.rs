use thiserror::Error;

/// Errors produced by every module of the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("scene parse error at line {line}: {message}")]
    SceneParse { line: usize, message: String },

    #[error("scene has no navigable cells")]
    NoNavigableCells,

    #[error("point ({x}, {y}) is not navigable")]
    NotNavigable { x: f64, y: f64 },

    #[error("points are not mutually reachable")]
    Unreachable,

    #[error("too many goals for exhaustive tour search: {0} (max {max})", max = crate::episode::MAX_TOUR_GOALS)]
    TooManyGoals(usize),

    #[error("episode sampling budget of {budget} attempts exhausted")]
    BudgetExhausted { budget: usize },

    #[error("dataset error at line {line}: {message}")]
    Dataset { line: usize, message: String },

    #[error("unknown scene id `{0}`")]
    UnknownScene(String),

    #[error("unknown sound category {0}")]
    UnknownCategory(u32),

    #[error("invalid sound category {id}: {message}")]
    InvalidCategory { id: u32, message: String },

    #[error("expected {expected} samples per channel, got {actual}")]
    ChunkLength { expected: usize, actual: usize },

    #[error("source coincides with the agent position")]
    CoincidentPoints,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("inconsistent episode result: {0}")]
    InconsistentResult(String),

    #[error("empty result set")]
    EmptyResults,

    #[error("invalid params file: {0}")]
    ParamsFormat(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
