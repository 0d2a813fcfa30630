//! Batch driver for the `holo-lab` suites: JSON config in, JSON report and
//! CSV plot data out, with a fixed exit-code contract.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | every check passed (expected-negative verdicts included) |
//! | 1 | a check failed |
//! | 2 | invalid input |
//! | 3 | internal or I/O error |

pub mod config;
pub mod plots;
pub mod report;
mod suites;

use std::path::Path;

pub use config::{Command, Overrides, RunConfig};
pub use plots::{emit_plot_data, PlotData};
pub use report::RunReport;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Internal(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<holo_lab::Error> for CliError {
    fn from(e: holo_lab::Error) -> Self {
        use holo_lab::Error as E;
        match e {
            E::Domain(_) | E::Invalid(_) | E::Precondition(_) | E::NotSelfAdjoint { .. } => CliError::Invalid(e.to_string()),
            E::Singular { .. } => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub plots: Vec<PlotData>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.pass {
            0
        } else {
            1
        }
    }

    /// Writes `report.json` and, if requested, the CSV tables into `dir`.
    pub fn write(&self, dir: &Path, with_plots: bool) -> Result<(), CliError> {
        if with_plots {
            emit_plot_data(dir, &self.plots)?;
        } else {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        }
        let path = dir.join("report.json");
        std::fs::write(&path, self.report.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// Validates the config and dispatches to the suite for its command.
pub fn run(config: &RunConfig, emit_plots: bool) -> Result<Outcome, CliError> {
    config.validate()?;
    let (mut report, plots) = match config.command {
        Command::RigidityCheck => suites::rigidity(config)?,
        Command::FactorizeVerify => suites::factorize(config)?,
        Command::RecoverParams => suites::recover(config)?,
        Command::HerglotzAnalyze => suites::herglotz(config)?,
        Command::ShiftSim => suites::shift(config)?,
    };
    if emit_plots {
        report.artifacts = plots.iter().map(|p| p.file_name.clone()).collect();
    }
    Ok(Outcome { report: report.finish(), plots })
}
