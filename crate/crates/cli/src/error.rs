use std::fmt;

use serde::Serialize;

use disclose_core::abstraction::AbstractError;
use disclose_core::config::ConfigError;
use disclose_core::corpus::{BratError, JsonlError, SplitError};
use disclose_core::detect::{DetectError, PluginError};
use disclose_core::eval::EvalError;
use disclose_core::importance::ImportanceError;
use disclose_core::llm::LlmError;
use disclose_core::{DocumentError, SpanError};
use disclose_service::StartupError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Internal,
    Input,
    Plugin,
    Provider,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Internal => 1,
            Kind::Input => 2,
            Kind::Plugin => 3,
            Kind::Provider => 4,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl fmt::Display) -> Self {
        Self {
            kind,
            message: message.to_string(),
        }
    }

    pub fn input(message: impl fmt::Display) -> Self {
        Self::new(Kind::Input, message)
    }

    /// One-line JSON summary for stderr.
    pub fn summary(&self) -> String {
        serde_json::json!({"error": self}).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

macro_rules! input_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::input(e)
            }
        }
    )*};
}

input_errors!(JsonlError, ConfigError, BratError, SplitError, EvalError, DocumentError, SpanError);

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::InvalidRequest(_) | LlmError::Cache(_) => CliError::input(e),
            _ => CliError::new(Kind::Provider, e),
        }
    }
}

impl From<PluginError> for CliError {
    fn from(e: PluginError) -> Self {
        CliError::new(Kind::Plugin, e)
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::Document(d) => d.into(),
            other => CliError::new(Kind::Plugin, other),
        }
    }
}

impl From<AbstractError> for CliError {
    fn from(e: AbstractError) -> Self {
        match e {
            AbstractError::Llm(l) => l.into(),
            AbstractError::PartialResult { .. } => CliError::new(Kind::Provider, e),
            AbstractError::Io(_) => CliError::new(Kind::Internal, e),
            other => CliError::input(other),
        }
    }
}

impl From<ImportanceError> for CliError {
    fn from(e: ImportanceError) -> Self {
        match e {
            ImportanceError::Llm(l) => l.into(),
            ImportanceError::Unparseable { .. } => CliError::new(Kind::Provider, e),
            other => CliError::input(other),
        }
    }
}

impl From<StartupError> for CliError {
    fn from(e: StartupError) -> Self {
        match e {
            StartupError::Detect(d) => d.into(),
            StartupError::Llm(l) => l.into(),
        }
    }
}
