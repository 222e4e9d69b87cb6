use serde_json::json;
use triarm_core::error::ErrorClass;

#[derive(Debug)]
pub enum CliError {
    /// Every violated constraint of the requested configuration.
    Config(Vec<String>),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    /// Single-line JSON rendering for stderr.
    pub fn to_json_line(&self) -> String {
        let (kind, messages) = match self {
            CliError::Config(v) => ("config", v.clone()),
            CliError::Data(m) => ("data", vec![m.clone()]),
            CliError::Numerical(m) => ("numerical", vec![m.clone()]),
        };
        json!({ "error": { "kind": kind, "code": self.exit_code(), "messages": messages } }).to_string()
    }
}

impl From<triarm_core::Error> for CliError {
    fn from(e: triarm_core::Error) -> Self {
        match (&e, e.class()) {
            (triarm_core::Error::Config(v), _) => CliError::Config(v.clone()),
            (_, ErrorClass::Config) => CliError::config(e.to_string()),
            (_, ErrorClass::Data) => CliError::Data(e.to_string()),
            (_, ErrorClass::Numerical) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
