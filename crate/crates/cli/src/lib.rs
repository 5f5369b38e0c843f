//! Experiment harness: corpus generation, training, evaluation, sweeps and
//! augmentation audits, driven by a JSON experiment spec.

mod commands;
mod spec;

use std::fmt;

pub use commands::{
    augment_dump, checkpoint_path, eval, gen, print_config, summary, sweep, train, DumpRecord, EvalOutcome, SweepCell,
    SweepRow,
};
pub use spec::{mining_label, parse_mining, CorpusSource, ExperimentSpec, Overrides, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Io,
    Numeric,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Config,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Io,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Io => 3,
            ErrorKind::Numeric => 4,
        }
    }

    fn context(mut self, prefix: &str) -> Self {
        self.message = format!("{prefix}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<cmaug::Error> for CliError {
    fn from(e: cmaug::Error) -> Self {
        let kind = match e {
            cmaug::Error::Io { .. } | cmaug::Error::Format { .. } => ErrorKind::Io,
            cmaug::Error::Numeric(_) => ErrorKind::Numeric,
            cmaug::Error::Config(_) | cmaug::Error::Validation(_) | cmaug::Error::DimensionMismatch { .. } => {
                ErrorKind::Config
            }
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
