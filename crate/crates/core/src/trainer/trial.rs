//! One training trial end-to-end: train loop, best-validation
//! checkpointing, and a single test evaluation.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::Metrics;
use super::TrainerError;
use crate::dataset::{
    balanced_batches, eval_windows, make_split, Class, RecordStore, Split, SplitSpec, Window,
};
use crate::nn::{
    adam_step, build_model, model_backward, model_forward_eval, model_forward_train,
    smoothed_cross_entropy, update_running_stats, AdamHyper, AdamState, ArchConfig, LossConfig,
    ModelParams,
};
use crate::seed::{derive_seed, rng_from};
use crate::wfdb::{DatasetIndex, Lead};

fn default_batch_size() -> usize {
    10
}
fn default_lr() -> f64 {
    1e-4
}
fn default_label_smoothing() -> f64 {
    0.1
}
fn default_epochs() -> usize {
    50
}
fn default_windows_per_epoch() -> usize {
    2_000
}
fn default_patience() -> usize {
    10
}

/// Full configuration of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub leads: Vec<Lead>,
    pub split: SplitSpec,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_label_smoothing")]
    pub label_smoothing: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_windows_per_epoch")]
    pub windows_per_epoch: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(leads: Vec<Lead>, split: SplitSpec, seed: u64) -> Self {
        TrainConfig {
            leads,
            split,
            batch_size: default_batch_size(),
            lr: default_lr(),
            label_smoothing: default_label_smoothing(),
            epochs: default_epochs(),
            windows_per_epoch: default_windows_per_epoch(),
            patience: default_patience(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), TrainerError> {
        if self.leads.is_empty() {
            return Err(TrainerError::BadConfig("no leads selected".into()));
        }
        // Batch statistics need at least two values.
        if self.batch_size < 2 {
            return Err(TrainerError::BadConfig(format!(
                "batch_size must be >= 2, got {}",
                self.batch_size
            )));
        }
        if self.epochs == 0 {
            return Err(TrainerError::BadConfig("epochs must be >= 1".into()));
        }
        if self.windows_per_epoch < self.batch_size {
            return Err(TrainerError::BadConfig(format!(
                "windows_per_epoch {} is smaller than batch_size {}",
                self.windows_per_epoch, self.batch_size
            )));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn sha256(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        format!("{:x}", hasher.finalize())
    }
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: Option<f64>,
}

/// Summary of a finished trial: what goes into the results log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub config: TrainConfig,
    pub seed: u64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub val_metrics: Metrics,
    pub test_metrics: Metrics,
    pub wall_time_secs: f64,
    /// SHA-256 of the split manifest this trial trained on.
    pub split_digest: String,
    /// How many times the test partition was evaluated. Always 1; kept so
    /// tests can assert the hygiene guarantee.
    pub test_eval_count: u32,
}

/// A finished trial including the artifacts the summary leaves out.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub result: TrialResult,
    pub split: Split,
    pub model: ModelParams<f32>,
    pub adam: AdamState<f32>,
    pub history: Vec<EpochStats>,
}

/// Argmax class prediction per window, chunked for throughput.
/// Eval mode has no cross-window coupling, so chunking never changes
/// results.
fn predict(
    model: &ModelParams<f32>,
    windows: &[Window],
) -> Result<Vec<Class>, TrainerError> {
    const CHUNK: usize = 32;
    let num_leads = model.arch.num_leads;
    let window_len = model.arch.window_len;
    let mut predictions = Vec::with_capacity(windows.len());
    for chunk in windows.chunks(CHUNK) {
        let mut input = Vec::with_capacity(chunk.len() * num_leads * window_len);
        for w in chunk {
            input.extend_from_slice(&w.data.data);
        }
        let logits = model_forward_eval(model, &input, chunk.len())?;
        for row in logits.chunks_exact(model.arch.num_classes) {
            let mut best = 0usize;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            predictions.push(Class::from_index(best).expect("two-class head"));
        }
    }
    Ok(predictions)
}

/// Evaluates a model on pre-cut windows: one argmax prediction per window,
/// confusion counts with MI positive.
pub fn evaluate(model: &ModelParams<f32>, windows: &[Window]) -> Result<Metrics, TrainerError> {
    if windows.is_empty() {
        return Err(TrainerError::EmptyPartition("evaluation"));
    }
    let predictions = predict(model, windows)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0u32, 0u32, 0u32, 0u32);
    for (window, prediction) in windows.iter().zip(predictions) {
        match (window.label, prediction) {
            (Class::Mi, Class::Mi) => tp += 1,
            (Class::Healthy, Class::Mi) => fp += 1,
            (Class::Healthy, Class::Healthy) => tn += 1,
            (Class::Mi, Class::Healthy) => fn_ += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, tn, fn_))
}

/// Runs one trial with a split generated from `config.split`.
pub fn train_trial(
    index: &DatasetIndex,
    store: &RecordStore,
    config: &TrainConfig,
) -> Result<TrialRun, TrainerError> {
    let split = make_split(index, &config.split)?;
    train_trial_with_split(store, config, &split)
}

/// Runs one trial on an already-made split (fixed-split protocols reuse the
/// same split and vary only the seed).
pub fn train_trial_with_split(
    store: &RecordStore,
    config: &TrainConfig,
    split: &Split,
) -> Result<TrialRun, TrainerError> {
    config.validate()?;
    if store.leads != config.leads {
        return Err(TrainerError::LeadMismatch {
            expected: config.leads.clone(),
            actual: store.leads.clone(),
        });
    }
    let start = Instant::now();

    let arch = ArchConfig::new(config.leads.len(), store.window_len())?;
    let loss_config = LossConfig::new(config.label_smoothing)?;
    let mut model: ModelParams<f32> =
        build_model(&arch, &mut rng_from(derive_seed(config.seed, &["init"])));
    let mut adam = AdamState::new(&model, AdamHyper::with_lr(config.lr));
    let mut sampler_rng = rng_from(derive_seed(config.seed, &["sampler"]));

    let val_windows = eval_windows(store, &split.val);
    if val_windows.is_empty() {
        return Err(TrainerError::EmptyPartition("val"));
    }

    let mut history: Vec<EpochStats> = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, Metrics, ModelParams<f32>, AdamState<f32>)> = None;
    let mut epochs_since_best = 0usize;
    let mut epochs_run = 0usize;

    for epoch in 0..config.epochs {
        epochs_run = epoch + 1;
        let mut loss_sum = 0.0f64;
        let mut batches = 0usize;
        let stream = balanced_batches(
            store,
            &split.train,
            config.batch_size,
            config.windows_per_epoch,
            &mut sampler_rng,
        )?;
        for batch in stream {
            let (logits, cache) = model_forward_train(&model, &batch.data, batch.batch_size())?;
            let (loss, d_logits) = smoothed_cross_entropy(&logits, &batch.labels, &loss_config);
            if !loss.is_finite() {
                return Err(TrainerError::Diverged {
                    epoch,
                    loss: loss as f64,
                });
            }
            let grads = model_backward(&model, &cache, &d_logits)?;
            adam_step(&mut model, &grads, &mut adam)?;
            update_running_stats(&mut model, &cache);
            loss_sum += loss as f64;
            batches += 1;
        }
        let train_loss = loss_sum / batches.max(1) as f64;

        let val_metrics = evaluate(&model, &val_windows)?;
        let val_accuracy = val_metrics.accuracy;
        history.push(EpochStats {
            epoch,
            train_loss,
            val_accuracy,
        });
        log::info!(
            "epoch {epoch}: train loss {train_loss:.4}, val accuracy {}",
            Metrics::fmt_percent(val_accuracy)
        );

        // Best-val checkpoint; ties keep the earlier epoch.
        let acc = val_accuracy.unwrap_or(f64::NEG_INFINITY);
        let improved = best.as_ref().map_or(true, |(_, best_acc, ..)| acc > *best_acc);
        if improved {
            best = Some((epoch, acc, val_metrics, model.clone(), adam.clone()));
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= config.patience {
                log::info!("early stop after epoch {epoch} (patience {})", config.patience);
                break;
            }
        }
    }

    let (best_epoch, _, val_metrics, best_model, best_adam) =
        best.expect("epochs >= 1 guarantees one epoch ran");

    // The test partition is touched exactly once, after selection.
    let test_windows = eval_windows(store, &split.test);
    if test_windows.is_empty() {
        return Err(TrainerError::EmptyPartition("test"));
    }
    let test_metrics = evaluate(&best_model, &test_windows)?;

    let result = TrialResult {
        config: config.clone(),
        seed: config.seed,
        best_epoch,
        epochs_run,
        val_metrics,
        test_metrics,
        wall_time_secs: start.elapsed().as_secs_f64(),
        split_digest: split.digest(),
        test_eval_count: 1,
    };
    Ok(TrialRun {
        result,
        split: split.clone(),
        model: best_model,
        adam: best_adam,
        history,
    })
}
