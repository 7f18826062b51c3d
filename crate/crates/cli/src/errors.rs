//! Error-to-exit-code mapping and the machine-readable error envelope.
//!
//! Exit codes: 0 success, 2 usage/input error, 3 missing optional
//! dependency/adapter, 1 anything else. Every failure prints one JSON
//! object to stderr: `{"error":{"code":"...","message":"..."}}`.

use chimera_core::backend::BackendError;
use chimera_core::eval::EvalError;
use chimera_core::kb::KBError;
use chimera_core::latent::LatentError;
use chimera_core::reasoning::ReasonError;
use chimera_core::template::TemplateError;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unreadable/invalid inputs, unknown names. Exit 2.
    #[error("{0}")]
    Input(String),
    /// A required adapter or optional dependency is not installed or not
    /// reachable. Exit 3.
    #[error("{0}")]
    MissingAdapter(String),
    /// Everything else (IO mid-run, transport failures). Exit 1.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn missing_adapter(msg: impl Into<String>) -> Self {
        CliError::MissingAdapter(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::MissingAdapter(_) => 3,
            CliError::Internal(_) => 1,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::MissingAdapter(_) => "missing-adapter",
            CliError::Internal(_) => "internal",
        }
    }

    /// The stderr envelope.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: Body<'a>,
        }
        #[derive(Serialize)]
        struct Body<'a> {
            code: &'static str,
            message: &'a str,
        }
        let message = self.to_string();
        serde_json::to_string(&Envelope {
            error: Body {
                code: self.code(),
                message: &message,
            },
        })
        .expect("error envelope serializes")
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Unavailable { .. } => CliError::MissingAdapter(e.to_string()),
            BackendError::MaskPosition { .. } | BackendError::ZeroK => {
                CliError::Input(e.to_string())
            }
            BackendError::NonFiniteScore { .. } => CliError::Internal(e.to_string()),
        }
    }
}

impl From<ReasonError> for CliError {
    fn from(e: ReasonError) -> Self {
        match e {
            ReasonError::Backend(inner) => inner.into(),
            ReasonError::InvalidInput(_) | ReasonError::EmptyResult { .. } => {
                CliError::Input(e.to_string())
            }
            ReasonError::Template(_) => CliError::Input(e.to_string()),
        }
    }
}

impl From<TemplateError> for CliError {
    fn from(e: TemplateError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<KBError> for CliError {
    fn from(e: KBError) -> Self {
        match e {
            KBError::Transport { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Backend(inner) => inner.into(),
            EvalError::Kb(inner) => inner.into(),
            EvalError::EmptyDataset | EvalError::ZeroK | EvalError::Template(_) => {
                CliError::Input(e.to_string())
            }
        }
    }
}

impl From<LatentError> for CliError {
    fn from(e: LatentError) -> Self {
        match e {
            LatentError::EmptyText | LatentError::InvalidConfig { .. } | LatentError::BadEps => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("io error: {e}"))
    }
}
