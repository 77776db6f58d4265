use serde::Serialize;
use serde_json::json;

/// One problem found while validating a config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration ({} problem(s))", .0.len())]
    Config(Vec<Violation>),

    #[error("{module}: {source}")]
    Runtime {
        module: &'static str,
        #[source]
        source: magflow::Error,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn runtime(module: &'static str) -> impl FnOnce(magflow::Error) -> CliError {
        move |source| CliError::Runtime { module, source }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    /// Process exit status: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    /// Machine-readable description written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Config(v) => json!({ "error": "config", "violations": v }),
            CliError::Runtime { module, source } => {
                let witness = match source {
                    magflow::Error::LeftChart { last, last_time, .. } => json!({ "t": last_time, "state": last }),
                    magflow::Error::StepUnderflow { time, state, .. } => json!({ "t": time, "state": state }),
                    magflow::Error::OutsideChart { x, y, .. } | magflow::Error::NonPositiveFactor { x, y, .. } => {
                        json!({ "position": [x, y] })
                    }
                    _ => serde_json::Value::Null,
                };
                json!({
                    "error": "runtime",
                    "kind": source.kind(),
                    "module": module,
                    "message": source.to_string(),
                    "witness": witness,
                })
            }
            CliError::Io { .. } => json!({ "error": "io", "message": self.to_string() }),
        }
    }
}
