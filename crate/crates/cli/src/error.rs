use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure in {operation}: {source}")]
    Numerical {
        operation: &'static str,
        source: edpconv_core::Error,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    /// Out-of-range parameters reported by the core count as config errors.
    pub fn core(operation: &'static str, source: edpconv_core::Error) -> Self {
        match source {
            edpconv_core::Error::InvalidInput(msg) => Self::Config(format!("{operation}: {msg}")),
            source => Self::Numerical { operation, source },
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Config(_) => 2,
            Self::Numerical { .. } => 3,
            Self::Io(_) => 1,
        })
    }
}
