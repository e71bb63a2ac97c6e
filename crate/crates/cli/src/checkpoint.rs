//! Checkpoint files for long `sums` runs.
//!
//! The file is one JSON document. `ledger` holds the exact scaled integers
//! of every running sum, so a resumed run continues bit for bit; `sums` and
//! `compensation` are readable copies of the totals and their error radii.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use flinthills_core::series::SumLedger;
use flinthills_core::Ball;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::output::SIG_DIGITS;

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sums {
    #[serde(rename = "S")]
    pub s: String,
    #[serde(rename = "L")]
    pub l: String,
    #[serde(rename = "G_sharp")]
    pub g_sharp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub n_done: u64,
    pub sums: Sums,
    pub compensation: Sums,
    pub ledger: SumLedger,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("cannot read checkpoint {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write checkpoint {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("corrupt checkpoint {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("checkpoint {path} was written by version {found}, expected {VERSION}")]
    Version { path: PathBuf, found: u32 },
    #[error("checkpoint {path} belongs to a different configuration (hash {found}, expected {expected})")]
    HashMismatch {
        path: PathBuf,
        found: String,
        expected: String,
    },
}

fn readable(b: &Ball) -> String {
    b.to_decimal(SIG_DIGITS)
}

fn radius(b: &Ball) -> String {
    Ball::exact(b.rad().clone().into(), b.frac()).to_decimal(SIG_DIGITS)
}

impl Checkpoint {
    pub fn new(ledger: &SumLedger, config: &RunConfig) -> Self {
        Checkpoint {
            version: VERSION,
            config_hash: config.hash(),
            n_done: ledger.n_done,
            sums: Sums {
                s: readable(&ledger.s),
                l: readable(&ledger.l),
                g_sharp: readable(&ledger.g_sharp),
            },
            compensation: Sums {
                s: radius(&ledger.s),
                l: radius(&ledger.l),
                g_sharp: radius(&ledger.g_sharp),
            },
            ledger: ledger.clone(),
        }
    }
}

/// Writes through a temporary file and a rename, so an interrupted save
/// leaves the previous checkpoint intact.
pub fn checkpoint_save(path: &Path, ledger: &SumLedger, config: &RunConfig) -> Result<(), CheckpointError> {
    let err = |source| CheckpointError::Write {
        path: path.to_path_buf(),
        source,
    };
    let text = serde_json::to_string(&Checkpoint::new(ledger, config)).expect("checkpoint serializes");
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(err)?;
    f.write_all(text.as_bytes()).map_err(err)?;
    f.sync_all().map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

pub fn checkpoint_load(path: &Path, config: &RunConfig) -> Result<SumLedger, CheckpointError> {
    let corrupt = |reason: String| CheckpointError::Corrupt {
        path: path.to_path_buf(),
        reason,
    };
    let text = fs::read_to_string(path).map_err(|source| CheckpointError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let cp: Checkpoint = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    if cp.version != VERSION {
        return Err(CheckpointError::Version {
            path: path.to_path_buf(),
            found: cp.version,
        });
    }
    let expected = config.hash();
    if cp.config_hash != expected {
        return Err(CheckpointError::HashMismatch {
            path: path.to_path_buf(),
            found: cp.config_hash,
            expected,
        });
    }
    let l = &cp.ledger;
    if l.n_done != cp.n_done || l.bits != config.bits || l.stride != config.stride {
        return Err(corrupt("ledger header disagrees with the checkpoint".into()));
    }
    if cp.sums != Checkpoint::new(l, config).sums {
        return Err(corrupt("readable sums disagree with the ledger".into()));
    }
    Ok(cp.ledger)
}
