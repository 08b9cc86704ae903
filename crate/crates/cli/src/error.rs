use booom::Error as CoreError;
use thiserror::Error;

/// CLI failures, each mapped to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit 2.
    #[error("config error: {0}")]
    Config(String),
    /// Exit 3.
    #[error("invalid input: {0}")]
    Input(String),
    /// Exit 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
        }
    }

    /// Classifies an error raised while reading or checking user data.
    pub fn input(e: CoreError) -> Self {
        match e {
            CoreError::Reflection => CliError::Input("reflection: determinant is -1".into()),
            CoreError::NotOrthogonal(err) => CliError::Input(format!("not orthogonal: ||U^T U - I||_F = {err:e}")),
            other => CliError::Input(other.to_string()),
        }
    }

    /// Classifies an error raised while building an objective from the config.
    pub fn config(e: CoreError) -> Self {
        match e {
            CoreError::InvalidArgument(m) => CliError::Config(m),
            other => CliError::input(other),
        }
    }

    pub fn io(what: &str, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{what}: {e}"))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Runtime(e.to_string())
    }
}
