//! Experiment plan files.
//!
//! JSON schema:
//!
//! ```json
//! {
//!   "lead_sets": [["v6", "vz"], ["ii"]],
//!   "trials_per_set": 20,
//!   "split": { "mode": "record_wise", "ratios": [0.8, 0.1, 0.1],
//!              "seed": 1234, "manifest_path": null },
//!   "train_overrides": { "epochs": 50 }
//! }
//! ```
//!
//! With `manifest_path` set, the split is loaded from that manifest and
//! reused for every trial (only initialization and sampling vary), which is
//! the fixed-split repetition protocol. Otherwise each trial draws a fresh
//! split seeded from `(seed, set, trial)`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::AblationError;
use crate::dataset::SplitMode;
use crate::trainer::TrainConfig;
use crate::wfdb::Lead;

fn default_ratios() -> (f64, f64, f64) {
    (0.8, 0.1, 0.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSplit {
    pub mode: SplitMode,
    #[serde(default = "default_ratios")]
    pub ratios: (f64, f64, f64),
    /// Root seed; per-trial seeds derive from it.
    pub seed: u64,
    /// Fixed split manifest. Relative paths resolve against the plan file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_path: Option<PathBuf>,
}

/// Optional overrides for the per-trial training configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub label_smoothing: Option<f64>,
    pub epochs: Option<usize>,
    pub windows_per_epoch: Option<usize>,
    pub patience: Option<usize>,
}

impl TrainOverrides {
    pub fn apply(&self, config: &mut TrainConfig) {
        if let Some(v) = self.batch_size {
            config.batch_size = v;
        }
        if let Some(v) = self.lr {
            config.lr = v;
        }
        if let Some(v) = self.label_smoothing {
            config.label_smoothing = v;
        }
        if let Some(v) = self.epochs {
            config.epochs = v;
        }
        if let Some(v) = self.windows_per_epoch {
            config.windows_per_epoch = v;
        }
        if let Some(v) = self.patience {
            config.patience = v;
        }
    }
}

/// A full experiment grid: lead sets x repeated trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub lead_sets: Vec<Vec<Lead>>,
    pub trials_per_set: usize,
    pub split: PlanSplit,
    #[serde(default)]
    pub train_overrides: TrainOverrides,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), AblationError> {
        if self.lead_sets.is_empty() {
            return Err(AblationError::BadPlan("no lead sets".into()));
        }
        for set in &self.lead_sets {
            if set.is_empty() || set.len() > 3 {
                return Err(AblationError::BadPlan(format!(
                    "lead set {set:?} must have 1 to 3 leads"
                )));
            }
        }
        if self.trials_per_set == 0 {
            return Err(AblationError::BadPlan("trials_per_set must be >= 1".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AblationError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)?;
        let mut plan: ExperimentPlan = serde_json::from_slice(&bytes)
            .map_err(|e| AblationError::BadPlan(format!("{}: {e}", path.display())))?;
        // Resolve the manifest path against the plan file's directory.
        if let Some(manifest) = &plan.split.manifest_path {
            if manifest.is_relative() {
                if let Some(parent) = path.parent() {
                    plan.split.manifest_path = Some(parent.join(manifest));
                }
            }
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AblationError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| AblationError::BadPlan(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_json_round_trip() {
        let plan = ExperimentPlan {
            lead_sets: vec![vec![Lead::V6, Lead::Vz], vec![Lead::Ii]],
            trials_per_set: 20,
            split: PlanSplit {
                mode: SplitMode::RecordWise,
                ratios: default_ratios(),
                seed: 1234,
                manifest_path: None,
            },
            train_overrides: TrainOverrides {
                epochs: Some(5),
                ..TrainOverrides::default()
            },
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plan.json");
        plan.save(&path).unwrap();
        assert_eq!(ExperimentPlan::load(&path).unwrap(), plan);
    }

    #[test]
    fn lead_sets_are_size_checked() {
        let mut plan = ExperimentPlan {
            lead_sets: vec![vec![Lead::I, Lead::Ii, Lead::Iii, Lead::Avr]],
            trials_per_set: 1,
            split: PlanSplit {
                mode: SplitMode::RecordWise,
                ratios: default_ratios(),
                seed: 0,
                manifest_path: None,
            },
            train_overrides: TrainOverrides::default(),
        };
        assert!(plan.validate().is_err());
        plan.lead_sets = vec![vec![]];
        assert!(plan.validate().is_err());
        plan.lead_sets = vec![vec![Lead::I]];
        plan.trials_per_set = 0;
        assert!(plan.validate().is_err());
    }

    #[test]
    fn relative_manifest_paths_resolve_against_the_plan() {
        let dir = tempfile::tempdir().unwrap();
        let plan = ExperimentPlan {
            lead_sets: vec![vec![Lead::V6]],
            trials_per_set: 1,
            split: PlanSplit {
                mode: SplitMode::RecordWise,
                ratios: default_ratios(),
                seed: 3,
                manifest_path: Some(PathBuf::from("splits/fixed.json")),
            },
            train_overrides: TrainOverrides::default(),
        };
        let path = dir.path().join("plan.json");
        plan.save(&path).unwrap();
        let loaded = ExperimentPlan::load(&path).unwrap();
        assert_eq!(
            loaded.split.manifest_path.unwrap(),
            dir.path().join("splits/fixed.json")
        );
    }
}
