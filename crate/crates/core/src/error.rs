use thiserror::Error;

#[derive(Debug, Error)]
pub enum CmabError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("operation requires {expected} feedback, instance uses {actual}")]
    Mode {
        expected: &'static str,
        actual: String,
    },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("replication {run} failed at round {round}: {source}")]
    Replication {
        run: usize,
        round: u64,
        #[source]
        source: Box<CmabError>,
    },

    #[error("{key}: {message}")]
    Parse { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CmabError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        CmabError::Input(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CmabError::Config(msg.into())
    }

    pub(crate) fn parse(key: impl Into<String>, message: impl Into<String>) -> Self {
        CmabError::Parse {
            key: key.into(),
            message: message.into(),
        }
    }
}
