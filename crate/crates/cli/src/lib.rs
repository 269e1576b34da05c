//! Scenario runners, index sweeps, verification suites and report emission
//! for the `mqs` command-line tool.

pub mod emit;
pub mod report;
pub mod scenario;
pub mod spec;
pub mod sweep;
pub mod verify;

pub use report::{PointRecord, SweepResult};
pub use scenario::run_scenario;
pub use spec::{NRange, ScenarioName, ScenarioParams, ScenarioSpec, StateSpec, SupportSpec};
pub use sweep::{run_index_p, run_index_q, RunOptions};
pub use verify::{run_verify, SuiteChoice, VerifySummary};

/// Exit status: every check passed.
pub const EXIT_OK: u8 = 0;
/// Exit status: an inequality violation was found.
pub const EXIT_VIOLATION: u8 = 2;
/// Exit status: malformed input or an exceeded cap.
pub const EXIT_INVALID: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] mqs_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) | CliError::Core(_) => EXIT_INVALID,
            CliError::Io(_) => 1,
        }
    }
}
