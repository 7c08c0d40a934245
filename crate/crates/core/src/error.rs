use std::path::PathBuf;

use thiserror::Error;

use crate::model::ModelId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("age class {age_class} has nonpositive population")]
    ZeroPopulation { age_class: usize },

    #[error("state layout {found} does not match model {expected}")]
    LayoutMismatch { expected: ModelId, found: String },

    #[error("step size underflow at t = {t}")]
    StiffnessFailure { t: f64 },

    #[error("no periodic solution after {years} years (discrepancy {discrepancy:.3e})")]
    NonConvergence { years: usize, discrepancy: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("weight mismatch: {0}")]
    WeightMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular transition matrix: {0}")]
    SingularTransition(String),

    #[error("profile is identically zero")]
    AllZero,

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("efficacy {target} is unattainable (maximum {max})")]
    Unattainable { target: f64, max: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("case grid incomplete, missing (week, age) cells: {missing:?}")]
    GridIncomplete { missing: Vec<(usize, usize)> },

    #[error("duplicate case cell (week {week}, age {age})")]
    DuplicateCell { week: usize, age: usize },

    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
