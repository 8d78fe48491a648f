//! Command-line driver: scenario files in, traces, checkpoints, reports and plots out.

pub mod checkpoint;
pub mod commands;
pub mod report;
pub mod scenario;
pub mod svg;
pub mod trace;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("i/o error: {0}")]
    Io(String),

    /// Malformed scenario or artifact; serde messages carry line and field.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// The Fano-data checks failed; the payload is the JSON report.
    #[error("validation failed: {0}")]
    Validation(String),

    /// The flow stopped on an invariant violation.
    #[error("invariant abort: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) => 3,
            _ => 1,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 2;

/// Sizes the global rayon pool from `HOROFLOW_THREADS` (unset or 0: rayon's default).
pub fn init_threads() -> usize {
    let n = std::env::var("HOROFLOW_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0);
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    rayon::current_num_threads()
}
