use std::fmt;
use std::path::Path;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

/// A failure together with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { code: EXIT_DATA, message: message.into() }
    }

    pub fn read(path: &Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::data(format!("file not found: {}", path.display()))
        } else {
            CliError::data(format!("cannot read {}: {e}", path.display()))
        }
    }

    /// Syntax errors are parse errors; a well-formed document with a
    /// missing, unknown or mistyped key is a usage error.
    pub fn json(what: &str, e: serde_json::Error) -> Self {
        let message = format!("{what}: {e}");
        match e.classify() {
            serde_json::error::Category::Data => CliError::usage(message),
            _ => CliError::data(message),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<leveling::Error> for CliError {
    fn from(e: leveling::Error) -> Self {
        use leveling::Error as E;
        let code = match e {
            E::Divergence { .. } => EXIT_DIVERGENCE,
            E::Argument(_) | E::Range(_) | E::Shape { .. } => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        CliError { code, message: e.to_string() }
    }
}
