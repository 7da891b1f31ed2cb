//! Train/validation/test split generation.
//!
//! Two regimes: record-wise (records assigned independently, so one
//! patient's records may span partitions) and patient-wise (all records of
//! a patient confined to one partition). Shuffling is driven solely by the
//! spec seed; a class-presence guard reshuffles with derived sub-seeds when
//! a partition ends up single-class.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::DatasetError;
use crate::seed::{derive_seed_indexed, rng_from};
use crate::wfdb::{DatasetIndex, DiagnosisLabel, RecordEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    RecordWise,
    PatientWise,
}

impl std::fmt::Display for SplitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitMode::RecordWise => f.write_str("record"),
            SplitMode::PatientWise => f.write_str("patient"),
        }
    }
}

/// How to generate a split: regime, ratios and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    /// (train, val, test) fractions, each > 0, summing to 1.
    pub ratios: (f64, f64, f64),
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(mode: SplitMode, seed: u64) -> Self {
        SplitSpec {
            mode,
            ratios: (0.8, 0.1, 0.1),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let (t, v, s) = self.ratios;
        if !(t > 0.0 && v > 0.0 && s > 0.0) {
            return Err(DatasetError::BadRatios(format!(
                "all ratios must be positive, got {:?}",
                self.ratios
            )));
        }
        if (t + v + s - 1.0).abs() > 1e-9 {
            return Err(DatasetError::BadRatios(format!(
                "ratios must sum to 1, got {}",
                t + v + s
            )));
        }
        Ok(())
    }
}

/// A concrete split: disjoint record-id lists plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub spec: SplitSpec,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Manifest form, identical layout; alias kept for the file-format name.
pub type SplitManifest = Split;

impl Split {
    pub fn partitions(&self) -> [(&'static str, &[String]); 3] {
        [
            ("train", &self.train),
            ("val", &self.val),
            ("test", &self.test),
        ]
    }

    /// SHA-256 over the manifest JSON; pins a split for replay checks.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("split serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        format!("{:x}", hasher.finalize())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("split serializes");
        std::fs::write(path, json)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let bytes = std::fs::read(path).map_err(crate::wfdb::WfdbError::Io)?;
        let split: Split = serde_json::from_slice(&bytes).map_err(|e| {
            DatasetError::BadRatios(format!("split manifest is not valid JSON: {e}"))
        })?;
        split.check_disjoint()?;
        Ok(split)
    }

    /// Partition lists must be pairwise disjoint by record, and by patient
    /// in patient-wise mode.
    pub fn check_disjoint(&self) -> Result<(), DatasetError> {
        let mut seen = BTreeSet::new();
        for (_, part) in self.partitions() {
            for id in part {
                if !seen.insert(id.clone()) {
                    return Err(DatasetError::BadRatios(format!(
                        "record {id} appears in more than one partition"
                    )));
                }
            }
        }
        if self.spec.mode == SplitMode::PatientWise {
            let sets: Vec<BTreeSet<&str>> = self
                .partitions()
                .iter()
                .map(|(_, part)| part.iter().filter_map(|id| id.split('/').next()).collect())
                .collect();
            for i in 0..sets.len() {
                for j in i + 1..sets.len() {
                    if let Some(p) = sets[i].intersection(&sets[j]).next() {
                        return Err(DatasetError::BadRatios(format!(
                            "patient {p} spans two partitions in a patient-wise split"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Partition sizes from ratios: train and val round to nearest, test takes
/// the remainder, so sizes match ratios to within rounding.
fn partition_targets(n: usize, ratios: (f64, f64, f64)) -> (usize, usize, usize) {
    let n_train = (ratios.0 * n as f64).round() as usize;
    let n_val = (ratios.1 * n as f64).round() as usize;
    let n_train = n_train.min(n);
    let n_val = n_val.min(n - n_train);
    (n_train, n_val, n - n_train - n_val)
}

fn has_both_classes(records: &[&RecordEntry]) -> bool {
    let mut mi = false;
    let mut healthy = false;
    for r in records {
        match r.label {
            DiagnosisLabel::MyocardialInfarction => mi = true,
            DiagnosisLabel::HealthyControl => healthy = true,
            _ => {}
        }
    }
    mi && healthy
}

const MAX_SPLIT_ATTEMPTS: usize = 100;

/// Generates a split over the index's usable records.
///
/// Only MI/healthy records of at least 10 s enter. Deterministic in
/// `(index, spec)`: the same inputs always produce the same split.
pub fn make_split(index: &DatasetIndex, spec: &SplitSpec) -> Result<Split, DatasetError> {
    spec.validate()?;
    let usable: Vec<&RecordEntry> = index.usable_records().collect();

    for attempt in 0..MAX_SPLIT_ATTEMPTS {
        let seed = derive_seed_indexed(spec.seed, "split-attempt", &[attempt as u64]);
        let mut rng = rng_from(seed);

        let (train, val, test) = match spec.mode {
            SplitMode::RecordWise => {
                let mut records = usable.clone();
                records.shuffle(&mut rng);
                let (n_train, n_val, _) = partition_targets(records.len(), spec.ratios);
                let val_end = n_train + n_val;
                (
                    records[..n_train].to_vec(),
                    records[n_train..val_end].to_vec(),
                    records[val_end..].to_vec(),
                )
            }
            SplitMode::PatientWise => {
                let mut patients: Vec<&str> = usable
                    .iter()
                    .map(|r| r.patient_id.as_str())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                patients.shuffle(&mut rng);
                let (n_train, n_val, _) = partition_targets(usable.len(), spec.ratios);
                let mut train = Vec::new();
                let mut val = Vec::new();
                let mut test = Vec::new();
                for patient in patients {
                    let records = usable.iter().filter(|r| r.patient_id == patient);
                    let bucket = if train.len() < n_train {
                        &mut train
                    } else if val.len() < n_val {
                        &mut val
                    } else {
                        &mut test
                    };
                    bucket.extend(records);
                }
                (train, val, test)
            }
        };

        if has_both_classes(&train) && has_both_classes(&val) && has_both_classes(&test) {
            let ids = |v: Vec<&RecordEntry>| v.iter().map(|r| r.record_id.clone()).collect();
            return Ok(Split {
                spec: *spec,
                train: ids(train),
                val: ids(val),
                test: ids(test),
            });
        }
    }
    Err(DatasetError::InfeasibleSplit {
        attempts: MAX_SPLIT_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wfdb::DiagnosisLabel;
    use std::collections::BTreeMap;
    use std::path::PathBuf;

    /// Builds an in-memory index: `patients[i]` holds that patient's record
    /// labels. No files involved; splits only need metadata.
    pub(crate) fn synthetic_index(patients: &[Vec<DiagnosisLabel>]) -> DatasetIndex {
        let mut map: BTreeMap<String, Vec<RecordEntry>> = BTreeMap::new();
        for (p, labels) in patients.iter().enumerate() {
            let patient_id = format!("patient{p:03}");
            let records = labels
                .iter()
                .enumerate()
                .map(|(r, label)| RecordEntry {
                    record_id: format!("{patient_id}/s{p:03}_{r}"),
                    patient_id: patient_id.clone(),
                    record_name: format!("s{p:03}_{r}"),
                    label: label.clone(),
                    num_samples: 60_000,
                    sampling_rate: 1000,
                })
                .collect();
            map.insert(patient_id, records);
        }
        DatasetIndex {
            root: PathBuf::from("/nonexistent"),
            patients: map,
            failures: Vec::new(),
        }
    }

    fn mixed_index(n_mi: usize, n_healthy: usize) -> DatasetIndex {
        let mut patients = Vec::new();
        for _ in 0..n_mi {
            patients.push(vec![DiagnosisLabel::MyocardialInfarction]);
        }
        for _ in 0..n_healthy {
            patients.push(vec![DiagnosisLabel::HealthyControl]);
        }
        synthetic_index(&patients)
    }

    #[test]
    fn same_spec_twice_gives_identical_split() {
        let index = mixed_index(30, 20);
        let spec = SplitSpec::new(SplitMode::RecordWise, 77);
        assert_eq!(make_split(&index, &spec).unwrap(), make_split(&index, &spec).unwrap());
    }

    #[test]
    fn record_wise_sizes_match_ratios() {
        let index = mixed_index(80, 20);
        let spec = SplitSpec::new(SplitMode::RecordWise, 5);
        let split = make_split(&index, &spec).unwrap();
        assert_eq!(split.train.len(), 80);
        assert_eq!(split.val.len(), 10);
        assert_eq!(split.test.len(), 10);
    }

    #[test]
    fn partitions_cover_usable_records_exactly() {
        let index = mixed_index(25, 15);
        let spec = SplitSpec::new(SplitMode::RecordWise, 9);
        let split = make_split(&index, &spec).unwrap();
        let mut all: Vec<String> = split
            .partitions()
            .iter()
            .flat_map(|(_, p)| p.iter().cloned())
            .collect();
        all.sort();
        let mut expected: Vec<String> =
            index.usable_records().map(|r| r.record_id.clone()).collect();
        expected.sort();
        assert_eq!(all, expected);
        split.check_disjoint().unwrap();
    }

    #[test]
    fn patient_wise_never_splits_a_patient() {
        let mut patients = Vec::new();
        for i in 0..40 {
            let label = if i % 3 == 0 {
                DiagnosisLabel::HealthyControl
            } else {
                DiagnosisLabel::MyocardialInfarction
            };
            // several records per patient so leakage would be visible
            patients.push(vec![label.clone(), label.clone(), label]);
        }
        let index = synthetic_index(&patients);
        let spec = SplitSpec::new(SplitMode::PatientWise, 123);
        let split = make_split(&index, &spec).unwrap();
        split.check_disjoint().unwrap();
        assert_eq!(
            split.train.len() + split.val.len() + split.test.len(),
            120
        );
    }

    #[test]
    fn every_partition_has_both_classes() {
        // Two healthy records only: the guard has to work to place one in
        // val and one in test (it cannot, so this must be infeasible).
        let index = mixed_index(20, 2);
        let spec = SplitSpec::new(SplitMode::RecordWise, 1);
        // 2 healthy records cannot cover 3 partitions.
        assert!(matches!(
            make_split(&index, &spec),
            Err(DatasetError::InfeasibleSplit { .. })
        ));

        let index = mixed_index(20, 3);
        let split = make_split(&index, &spec).unwrap();
        for (_, part) in split.partitions() {
            assert!(!part.is_empty());
        }
    }

    #[test]
    fn bad_ratios_are_rejected() {
        let index = mixed_index(5, 5);
        let mut spec = SplitSpec::new(SplitMode::RecordWise, 0);
        spec.ratios = (0.9, 0.1, 0.1);
        assert!(matches!(
            make_split(&index, &spec),
            Err(DatasetError::BadRatios(_))
        ));
        spec.ratios = (1.0, 0.0, 0.0);
        assert!(matches!(
            make_split(&index, &spec),
            Err(DatasetError::BadRatios(_))
        ));
    }

    #[test]
    fn manifest_round_trip() {
        let index = mixed_index(12, 8);
        let spec = SplitSpec::new(SplitMode::PatientWise, 42);
        let split = make_split(&index, &spec).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.json");
        split.save(&path).unwrap();
        let loaded = Split::load(&path).unwrap();
        assert_eq!(split, loaded);
        assert_eq!(split.digest(), loaded.digest());
    }
}
