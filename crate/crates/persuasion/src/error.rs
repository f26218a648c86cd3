use std::path::PathBuf;

/// Exit status 0: success.
pub const EXIT_OK: i32 = 0;
/// Exit status 1: unreadable input or a schema violation.
pub const EXIT_INPUT: i32 = 1;
/// Exit status 2: an Invalid verdict, a failed certificate, or a solver
/// that could not produce one.
pub const EXIT_CERT: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    Solver(#[from] persuasion_core::Error),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Schema(_) | CliError::UnknownFixture(_) => EXIT_INPUT,
            CliError::Solver(_) => EXIT_CERT,
        }
    }
}

pub fn read_file(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}
