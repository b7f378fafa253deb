use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    /// The invocation itself is wrong: bad flag combination, no inputs, ...
    Usage(String),
    /// An input file is unreadable or malformed.
    Data(String),
}

impl CliError {
    pub fn data(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}
