//! Scenario runner, artifact auditor, cost benchmark and vector generator
//! behind the `deaddrop` binary.

use std::path::PathBuf;

use deaddrop_sim::session::Verdict;
use deaddrop_sim::SimError;

pub mod audit;
pub mod bench;
pub mod config;
pub mod run;
pub mod vectors;

/// Process exit status, one per failure class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Config = 2,
    Spawn = 3,
    Deposit = 4,
    Retrieval = 5,
    Finalize = 6,
    Integrity = 7,
    Reclaim = 8,
    Audit = 9,
    Conservation = 10,
    Io = 11,
    BenchMismatch = 12,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }
}

impl From<Verdict> for Status {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Success => Status::Success,
            Verdict::SpawnRejected => Status::Spawn,
            Verdict::DepositFailed => Status::Deposit,
            Verdict::RetrievalRejected => Status::Retrieval,
            Verdict::ReclaimRejected => Status::Reclaim,
            Verdict::FinalizeRejected => Status::Finalize,
            Verdict::IntegrityMismatch => Status::Integrity,
            Verdict::AuditViolation => Status::Audit,
            Verdict::ConservationBroken => Status::Conservation,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Io { .. } => Status::Io,
            CliError::Config(_) | CliError::Sim(_) => Status::Config,
        }
    }
}

pub(crate) fn write(path: PathBuf, contents: &str) -> Result<(), CliError> {
    std::fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
}

pub(crate) fn create_dir(path: &std::path::Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}
