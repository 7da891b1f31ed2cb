//! Trial execution: training loop, metrics, checkpoints.

mod checkpoint;
mod metrics;
mod trial;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, sidecar_path, Checkpoint, CheckpointSidecar,
};
pub use metrics::Metrics;
pub use trial::{
    evaluate, train_trial, train_trial_with_split, EpochStats, TrainConfig, TrialResult, TrialRun,
};

use crate::wfdb::Lead;

#[derive(Debug, thiserror::Error)]
pub enum TrainerError {
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("{0} partition is empty")]
    EmptyPartition(&'static str),
    #[error("lead mismatch: config wants {expected:?}, store holds {actual:?}")]
    LeadMismatch {
        expected: Vec<Lead>,
        actual: Vec<Lead>,
    },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Checkpoint {
    /// Guards checkpoint/config agreement on the lead selection.
    pub fn require_leads(&self, leads: &[Lead]) -> Result<(), TrainerError> {
        if self.leads != leads {
            return Err(TrainerError::CorruptCheckpoint(format!(
                "checkpoint was trained on {:?} ({} leads) but {:?} ({} leads) requested",
                self.leads,
                self.leads.len(),
                leads,
                leads.len()
            )));
        }
        Ok(())
    }
}
