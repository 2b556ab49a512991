use std::fmt;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Input = 2,
    Unsupported = 3,
    Numeric = 4,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Input, message: message.into() }
    }

    pub fn unsupported(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Unsupported, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Numeric, message: message.into() }
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<nilmag::Error> for CliError {
    fn from(e: nilmag::Error) -> Self {
        use nilmag::Error as E;
        let kind = match e {
            E::Argument(_) | E::DimensionMismatch { .. } | E::InvalidForce(_) => ExitKind::Input,
            E::UnsupportedForce(_) | E::ExactForce(_) | E::DegenerateForce(_) => ExitKind::Unsupported,
            E::InfinitePeriod | E::IntegrationFailure { .. } | E::NoCertificate(_) | E::GridMismatch(_) => {
                ExitKind::Numeric
            }
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::input(format!("json: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::input(format!("csv: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
