//! Trial statistics, experiment configuration, result documents and the
//! parallel trial runner behind the command-line tool.

mod config;
mod results;
mod runner;

pub use config::{ConfigError, ExperimentConfig, Params, Protocol, TranscriptPolicy};
pub use results::{Aggregate, ResultsDoc, TrialRow, CSV_COLUMNS};
pub use runner::{default_output_dir, run_experiment, run_trial, Experiment, ExperimentError, OUT_DIR_ENV};

use thiserror::Error;

use crate::protocols::ProtocolOutcome;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("bit strings differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("nothing to measure")]
    Empty,
}

/// Hamming distance over length.
pub fn compute_qber(sent: &[u8], received: &[u8]) -> Result<f64, MetricsError> {
    if sent.len() != received.len() {
        return Err(MetricsError::LengthMismatch(sent.len(), received.len()));
    }
    if sent.is_empty() {
        return Err(MetricsError::Empty);
    }
    let wrong = sent.iter().zip(received).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / sent.len() as f64)
}

/// Fraction of runs in which eavesdropping was noticed (any abort, whether
/// or not a restart later succeeded).
pub fn detection_rate(outcomes: &[ProtocolOutcome]) -> Result<f64, MetricsError> {
    fraction(outcomes, ProtocolOutcome::detected)
}

/// Fraction of runs that gave up after exhausting their restarts.
pub fn abort_rate(outcomes: &[ProtocolOutcome]) -> Result<f64, MetricsError> {
    fraction(outcomes, |o| o.aborted)
}

fn fraction(outcomes: &[ProtocolOutcome], pred: impl Fn(&ProtocolOutcome) -> bool) -> Result<f64, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(outcomes.iter().filter(|o| pred(o)).count() as f64 / outcomes.len() as f64)
}
