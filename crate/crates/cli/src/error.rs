use denfunc_core::Error as CoreError;

/// Front-end failure, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("input/output error: {0}")]
    Io(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Core errors raised while reading a named input file.
    pub fn input(path: &str, err: CoreError) -> Self {
        CliError::Io(format!("{path}: {err}"))
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::NonFinite { .. } | CoreError::OracleResolution(_) => CliError::Numeric(err.to_string()),
            CoreError::InvalidParameter { name, ref reason } => {
                CliError::Config(format!("invalid value for {}: {reason}", flag_name(name)))
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

/// Command-line spelling of a core parameter name.
fn flag_name(name: &str) -> String {
    match name {
        "kappa_min" => "--kappa-min".into(),
        "kappa_max" => "--kappa-max".into(),
        "delta" => "--delta".into(),
        "alpha" => "--alpha".into(),
        "beta" => "--beta".into(),
        "bandwidth" => "--bandwidth".into(),
        "dx" => "--dx".into(),
        "trials" => "--trials".into(),
        "kernel order" => "--kernel-order".into(),
        other => format!("`{other}`"),
    }
}

pub type CliResult<T> = Result<T, CliError>;
