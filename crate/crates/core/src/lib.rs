//! ECG myocardial-infarction detection on the PTB diagnostic database.
//!
//! The pipeline runs in four stages, each its own module:
//!
//! - [`wfdb`] parses PhysioNet WFDB header/signal files (format 16 only, which
//!   is what PTB ships) into labeled in-memory records and builds a dataset
//!   index over a `patientNNN/record` directory tree.
//! - [`dataset`] turns indexed records into normalized 10-second multi-lead
//!   windows, generates record-wise and patient-wise train/val/test splits,
//!   and streams class-balanced training batches.
//! - [`nn`] is a from-scratch numerical core: an 8-layer strided 1D conv net
//!   with post-activation batch norm, label-smoothed cross-entropy, exact
//!   hand-derived backward passes, and Adam.
//! - [`trainer`] runs one training trial end-to-end (train loop, best-val
//!   checkpointing, single test evaluation) and computes accuracy,
//!   sensitivity, specificity and precision.
//! - [`ablation`] orchestrates experiment grids (per-lead sweeps, pair grids,
//!   repeated random splits, fixed-split repetition) and aggregates results.
//!
//! Everything is deterministic given a seed: splits, window sampling, weight
//! init and training all draw from [`rand_chacha::ChaCha8Rng`] streams derived
//! via [`seed::derive_seed`], and all internal parallelism is structured so
//! results are bitwise identical at any thread count.

pub mod ablation;
pub mod dataset;
pub mod nn;
pub mod seed;
pub mod synth;
pub mod trainer;
pub mod wfdb;

pub use dataset::{Class, Split, SplitMode, SplitSpec};
pub use trainer::{Metrics, TrainConfig, TrialResult};
pub use wfdb::{DatasetIndex, DiagnosisLabel, EcgRecord, Lead};

/// Umbrella error for the whole pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Wfdb(#[from] wfdb::WfdbError),
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Nn(#[from] nn::NnError),
    #[error(transparent)]
    Trainer(#[from] trainer::TrainerError),
    #[error(transparent)]
    Ablation(#[from] ablation::AblationError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
