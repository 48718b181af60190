use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    /// A 1-D sampler stage failed. `best` carries the best offset found so
    /// far when the near-max search was the stage that gave up.
    #[error("sampler error: {message}")]
    Sampler { message: String, best: Option<f64> },

    #[error("rounding error: {0}")]
    Rounding(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("precision error: {0}")]
    Precision(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("walk step {step}: {source}")]
    Step {
        step: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("epoch {epoch}, strand {strand}: {source}")]
    Strand {
        epoch: usize,
        strand: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn sampler(message: impl Into<String>) -> Self {
        Error::Sampler {
            message: message.into(),
            best: None,
        }
    }

    pub(crate) fn at_step(self, step: u64) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    /// Innermost error, with step/stage annotations peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. }
            | Error::Strand { source, .. }
            | Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
