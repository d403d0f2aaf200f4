use std::path::PathBuf;

use g2pp_core::Error as ModelError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}, row {row}: {message}", path.display())]
    Parse {
        path: PathBuf,
        row: u64,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Model {
        context: String,
        source: ModelError,
    },
    #[error("calibration did not converge after {iterations} iterations (objective {objective}); result written anyway")]
    NotConverged { iterations: usize, objective: f64 },
    #[error("{failed} of {total} snapshots failed")]
    Backtest { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn model(context: impl Into<String>) -> impl FnOnce(ModelError) -> Self {
        let context = context.into();
        move |source| CliError::Model { context, source }
    }

    /// 1 for numeric or convergence failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model { source, .. } => {
                if is_numeric(source) {
                    1
                } else {
                    2
                }
            }
            CliError::NotConverged { .. } | CliError::Backtest { .. } => 1,
            _ => 2,
        }
    }
}

fn is_numeric(e: &ModelError) -> bool {
    match e {
        ModelError::Numeric(_)
        | ModelError::SingularCorrelation { .. }
        | ModelError::SingularForecasts { .. }
        | ModelError::DegenerateSlope { .. } => true,
        ModelError::Quote { source, .. } => is_numeric(source),
        _ => false,
    }
}
