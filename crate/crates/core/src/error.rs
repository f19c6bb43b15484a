use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numeric overflow at {stage} (step {step})")]
    NumericOverflow { stage: String, step: usize },
    #[error("ill-conditioned problem: {0}")]
    IllConditioned(String),
    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    Iteration { iterations: usize, residual: f64 },
    #[error("singular linear system (condition estimate {condition:e})")]
    LinearAlgebra { condition: f64 },
    #[error("spectral parameter {0} is at or near a pole")]
    Pole(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }
}
