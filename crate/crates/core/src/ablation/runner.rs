//! Executes an experiment plan: lead sets x repeated trials, with
//! incremental logging and resume.
//!
//! Trial seeds derive from (root seed, lead set, trial index), never from
//! wall-clock or execution order, so an interrupted run resumed later is
//! identical to an uninterrupted one, and trials can run on any number of
//! workers.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::ExperimentPlan;
use super::AblationError;
use crate::dataset::{RecordStore, Split, SplitSpec};
use crate::seed::{derive_seed, derive_seed_indexed};
use crate::trainer::{train_trial_with_split, TrainConfig, TrialResult};
use crate::wfdb::{lead_set_name, ChecksumMode, DatasetIndex, Lead};
use crate::dataset::make_split;

/// One line of the JSONL results log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRow {
    pub lead_set: String,
    pub trial: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<TrialResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Results for one lead set, trials in index order.
#[derive(Debug, Clone)]
pub struct SetResults {
    pub leads: Vec<Lead>,
    pub name: String,
    pub trials: Vec<Option<TrialResult>>,
    pub errors: Vec<(usize, String)>,
}

impl SetResults {
    /// Test accuracies of successful trials, in trial order.
    pub fn accuracies(&self) -> Vec<f64> {
        self.trials
            .iter()
            .flatten()
            .filter_map(|r| r.test_metrics.accuracy)
            .collect()
    }

    pub fn succeeded(&self) -> usize {
        self.trials.iter().flatten().count()
    }
}

#[derive(Debug, Clone)]
pub struct PlanResults {
    pub sets: Vec<SetResults>,
}

impl PlanResults {
    /// True when at least one trial succeeded in every set.
    pub fn every_set_has_a_success(&self) -> bool {
        self.sets.iter().all(|s| s.succeeded() > 0)
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub checksum: ChecksumMode,
    pub resume: bool,
    pub log_path: PathBuf,
}

/// The per-trial configuration: deterministic in (plan, set, trial).
pub fn trial_config(plan: &ExperimentPlan, leads: &[Lead], trial: usize) -> TrainConfig {
    let set_name = lead_set_name(leads);
    let set_root = derive_seed(plan.split.seed, &["set", &set_name]);
    let trial_seed = derive_seed_indexed(set_root, "trial", &[trial as u64]);
    let split_spec = SplitSpec {
        mode: plan.split.mode,
        ratios: plan.split.ratios,
        seed: derive_seed(trial_seed, &["split"]),
    };
    let mut config = TrainConfig::new(
        leads.to_vec(),
        split_spec,
        derive_seed(trial_seed, &["train"]),
    );
    plan.train_overrides.apply(&mut config);
    config
}

fn read_log(path: &PathBuf) -> Result<BTreeMap<(String, usize), LogRow>, AblationError> {
    let mut rows = BTreeMap::new();
    if !path.exists() {
        return Ok(rows);
    }
    let text = std::fs::read_to_string(path)?;
    for (ix, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: LogRow = serde_json::from_str(line).map_err(|e| {
            AblationError::BadPlan(format!("results log line {}: {e}", ix + 1))
        })?;
        rows.insert((row.lead_set.clone(), row.trial), row);
    }
    Ok(rows)
}

/// Runs the plan. Trial failures are recorded and never abort the plan;
/// only infrastructure failures (I/O, bad plan, bad fixed manifest) error.
pub fn run_plan(
    index: &DatasetIndex,
    plan: &ExperimentPlan,
    options: &RunOptions,
) -> Result<PlanResults, AblationError> {
    plan.validate()?;

    let fixed_split: Option<Split> = match &plan.split.manifest_path {
        Some(path) => Some(Split::load(path)?),
        None => None,
    };

    let mut existing = if options.resume {
        read_log(&options.log_path)?
    } else {
        BTreeMap::new()
    };
    if !options.resume && options.log_path.exists() {
        std::fs::remove_file(&options.log_path)?;
    }
    if let Some(parent) = options.log_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let log_file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&options.log_path)?;
    let log = Mutex::new(BufWriter::new(log_file));

    let append_row = |row: &LogRow| -> Result<(), AblationError> {
        let line = serde_json::to_string(row).map_err(|e| AblationError::BadPlan(e.to_string()))?;
        let mut writer = log.lock().expect("log writer lock");
        writeln!(writer, "{line}")?;
        writer.flush()?;
        Ok(())
    };

    let mut sets = Vec::with_capacity(plan.lead_sets.len());
    for leads in &plan.lead_sets {
        let set_name = lead_set_name(leads);
        let mut trials: Vec<Option<TrialResult>> = vec![None; plan.trials_per_set];
        let mut errors: Vec<(usize, String)> = Vec::new();
        let mut pending: Vec<usize> = Vec::new();

        for trial in 0..plan.trials_per_set {
            match existing.remove(&(set_name.clone(), trial)) {
                Some(row) => {
                    let expected_seed = trial_config(plan, leads, trial).seed;
                    match row.result {
                        Some(result) if result.seed == expected_seed => {
                            trials[trial] = Some(result);
                        }
                        Some(_) => {
                            log::warn!(
                                "log row ({set_name}, {trial}) was produced by a different \
                                 plan; re-running"
                            );
                            pending.push(trial);
                        }
                        None => pending.push(trial), // previous failure: retry
                    }
                }
                None => pending.push(trial),
            }
        }

        if !pending.is_empty() {
            log::info!("{set_name}: running {} trial(s)", pending.len());
            let store = RecordStore::load(index, leads, options.checksum)?;
            let outcomes: Vec<(usize, Result<TrialResult, String>)> = pending
                .par_iter()
                .map(|&trial| {
                    let config = trial_config(plan, leads, trial);
                    let run = match &fixed_split {
                        Some(split) => {
                            let mut config = config;
                            // Provenance: the trial trained on the manifest's
                            // split, not a derived one.
                            config.split = split.spec;
                            train_trial_with_split(&store, &config, split)
                        }
                        None => match make_split(index, &config.split) {
                            Ok(split) => train_trial_with_split(&store, &config, &split),
                            Err(e) => Err(e.into()),
                        },
                    };
                    let outcome = match run {
                        Ok(run) => Ok(run.result),
                        Err(e) => Err(e.to_string()),
                    };
                    let row = LogRow {
                        lead_set: set_name.clone(),
                        trial,
                        result: outcome.as_ref().ok().cloned(),
                        error: outcome.as_ref().err().cloned(),
                    };
                    if let Err(e) = append_row(&row) {
                        log::error!("failed to append results log: {e}");
                    }
                    (trial, outcome)
                })
                .collect();
            for (trial, outcome) in outcomes {
                match outcome {
                    Ok(result) => trials[trial] = Some(result),
                    Err(message) => {
                        log::warn!("{set_name} trial {trial} failed: {message}");
                        errors.push((trial, message));
                    }
                }
            }
        }

        sets.push(SetResults {
            leads: leads.clone(),
            name: set_name,
            trials,
            errors,
        });
    }

    Ok(PlanResults { sets })
}
