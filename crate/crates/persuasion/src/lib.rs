//! Instance files, reference fixtures and the `persuasion` command-line
//! tool on top of `persuasion-core`.
//!
//! Exit statuses: 0 on success, 1 for unreadable or schema-invalid input,
//! 2 for an Invalid verdict or a certificate that fails.

pub mod commands;
pub mod error;
pub mod fixtures;
pub mod instance;
pub mod parallel;
pub mod report;

pub use commands::Outcome;
pub use error::{CliError, EXIT_CERT, EXIT_INPUT, EXIT_OK};
pub use fixtures::{fixture_names, load_fixture, Expected, Fixture};
pub use instance::{parse_instance, Instance, InstanceFile, Options};
pub use report::{KrReport, Report};
