//! Shared helpers for the integration suites.

#![allow(dead_code)]

use std::path::PathBuf;

use ecgmi::dataset::RecordStore;
use ecgmi::synth::{generate_tree, SynthSpec};
use ecgmi::wfdb::{build_index, ChecksumMode, DatasetIndex, Lead};

/// Checked-in fixture root (`testdata/` at the workspace root).
pub fn testdata_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../testdata")
        .canonicalize()
        .expect("testdata directory exists")
}

pub fn ptb_mini_dir() -> PathBuf {
    testdata_dir().join("ptb-mini")
}

/// Real PTB root, when the user has it: honored by the dataset-gated
/// acceptance criteria.
pub fn ptb_root_from_env() -> Option<PathBuf> {
    for var in ["ECGMI_PTB_ROOT", "PTB_ROOT"] {
        if let Ok(path) = std::env::var(var) {
            if !path.is_empty() {
                return Some(PathBuf::from(path));
            }
        }
    }
    None
}

/// A synthetic tree big enough to split and train on, at a low sampling
/// rate so windows are 1 000 samples instead of 10 000.
pub fn training_fixture(
    seed: u64,
    leads: &[Lead],
) -> (tempfile::TempDir, DatasetIndex, RecordStore) {
    let dir = tempfile::tempdir().expect("tempdir");
    let spec = SynthSpec {
        mi_patients: 10,
        healthy_patients: 8,
        records_per_patient: 2,
        sampling_rate: 100,
        seconds: 14.0,
        seed,
    };
    generate_tree(dir.path(), &spec).expect("synthetic tree");
    let index = build_index(dir.path()).expect("index");
    let store = RecordStore::load(&index, leads, ChecksumMode::Strict).expect("store");
    (dir, index, store)
}

/// Relative error with an absolute floor, for gradient comparisons.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    let denom = (analytic.abs() + numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

/// Deterministically samples `count` distinct coordinate indices from a
/// tensor (all of them when the tensor is smaller).
pub fn sample_coords(len: usize, count: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    if len <= count {
        return (0..len).collect();
    }
    let mut picked = rand::seq::index::sample(rng, len, count).into_vec();
    picked.sort_unstable();
    picked
}
