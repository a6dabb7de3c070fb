use entrenet_core::io::IoError;
use entrenet_core::netanalysis::NetError;
use entrenet_core::solver::SolveError;
use entrenet_core::Error as CoreError;
use serde::Serialize;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_NOT_CONVERGED: i32 = 5;

/// Failure reported on stderr as one JSON object.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    #[serde(skip)]
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<String>,
}

impl CliError {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            kind,
            message: message.into(),
            aggregate: None,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, "usage", message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(EXIT_DATA, "data", message)
    }

    pub fn not_converged(message: impl Into<String>) -> Self {
        Self::new(EXIT_NOT_CONVERGED, "not_converged", message)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match &e {
            SolveError::Infeasible { aggregate, .. } => {
                let mut err = Self::new(EXIT_INFEASIBLE, "infeasible", e.to_string());
                err.aggregate = Some(aggregate.clone());
                err
            }
            SolveError::InvalidConfig(_) => Self::usage(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        match e {
            NetError::InvalidParameter(_) => Self::usage(e.to_string()),
            NetError::NotConverged(_) => Self::not_converged(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Solve(s) => s.into(),
            CoreError::Io(i) => i.into(),
            CoreError::Net(n) => n.into(),
            other => Self::data(other.to_string()),
        }
    }
}

impl From<entrenet_core::model::ModelError> for CliError {
    fn from(e: entrenet_core::model::ModelError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<entrenet_core::evaluation::EvalError> for CliError {
    fn from(e: entrenet_core::evaluation::EvalError) -> Self {
        match e {
            entrenet_core::evaluation::EvalError::Solve(s) => s.into(),
            entrenet_core::evaluation::EvalError::EmptyGrid => Self::usage(e.to_string()),
            other => Self::data(other.to_string()),
        }
    }
}

pub fn write_failed(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::new(1, "io", format!("cannot write {}: {e}", path.display()))
}
