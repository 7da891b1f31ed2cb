//! Dataset indexing over a PTB-style directory tree.
//!
//! Layout: `root/patientNNN/recordname.{hea,dat}`, with an optional
//! `RECORDS` manifest at the root (one `patient/record` path per line).
//! Indexing reads headers only; signal data is loaded on demand by
//! [`read_record`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::header::{extract_diagnosis, parse_header, DiagnosisLabel, RecordHeader};
use super::signal::{decode_signal_file, ChecksumMode};
use super::{EcgRecord, WfdbError};

/// Seconds of signal a record must have to be usable for training.
pub const MIN_USABLE_SECONDS: usize = 10;

/// One record's index entry (header metadata only).
#[derive(Debug, Clone, PartialEq)]
pub struct RecordEntry {
    /// `patientNNN/recordname`, the id used everywhere downstream.
    pub record_id: String,
    pub patient_id: String,
    pub record_name: String,
    pub label: DiagnosisLabel,
    pub num_samples: usize,
    pub sampling_rate: u32,
}

impl RecordEntry {
    /// Usable for training: MI or healthy-control label and at least 10 s
    /// of signal. Everything else stays in the index but is never split
    /// into train/val/test.
    pub fn usable(&self) -> bool {
        self.label.is_trainable()
            && self.num_samples >= MIN_USABLE_SECONDS * self.sampling_rate as usize
    }

    /// Why the record is unusable, when it is.
    pub fn unusable_reason(&self) -> Option<String> {
        if !self.label.is_trainable() {
            return Some(format!("label: {}", self.label.name()));
        }
        let need = MIN_USABLE_SECONDS * self.sampling_rate as usize;
        if self.num_samples < need {
            return Some(format!("too short: {} < {} samples", self.num_samples, need));
        }
        None
    }
}

/// Catalog of all records in a dataset tree, grouped by patient.
#[derive(Debug, Clone)]
pub struct DatasetIndex {
    pub root: PathBuf,
    /// patient id -> records, both levels in lexicographic order.
    pub patients: BTreeMap<String, Vec<RecordEntry>>,
    /// Records that failed to parse: (record id, error message).
    pub failures: Vec<(String, String)>,
}

impl DatasetIndex {
    /// All successfully indexed records, lexicographic by patient then record.
    pub fn records(&self) -> impl Iterator<Item = &RecordEntry> {
        self.patients.values().flatten()
    }

    pub fn num_records(&self) -> usize {
        self.patients.values().map(Vec::len).sum()
    }

    pub fn usable_records(&self) -> impl Iterator<Item = &RecordEntry> {
        self.records().filter(|r| r.usable())
    }

    pub fn find(&self, record_id: &str) -> Option<&RecordEntry> {
        let patient = record_id.split('/').next()?;
        self.patients
            .get(patient)?
            .iter()
            .find(|r| r.record_id == record_id)
    }

    /// Per-patient label counts, Table-1 style. A patient's class is the
    /// first non-Unknown label over their records in lexicographic order;
    /// patients with no labeled record count as Unknown.
    pub fn patient_label_histogram(&self) -> BTreeMap<String, usize> {
        let mut histogram = BTreeMap::new();
        for records in self.patients.values() {
            let label = records
                .iter()
                .map(|r| &r.label)
                .find(|l| **l != DiagnosisLabel::Unknown)
                .unwrap_or(&DiagnosisLabel::Unknown);
            *histogram.entry(label.name().to_string()).or_insert(0) += 1;
        }
        histogram
    }

    pub fn summary(&self) -> IndexSummary {
        let mut unusable: Vec<UnusableRecord> = self
            .records()
            .filter_map(|r| {
                r.unusable_reason().map(|reason| UnusableRecord {
                    record: r.record_id.clone(),
                    reason,
                })
            })
            .collect();
        unusable.extend(self.failures.iter().map(|(record, err)| UnusableRecord {
            record: record.clone(),
            reason: format!("parse failure: {err}"),
        }));
        IndexSummary {
            patients: self.patients.len(),
            records: self.num_records(),
            usable_records: self.usable_records().count(),
            label_histogram: self.patient_label_histogram(),
            unusable,
        }
    }
}

/// JSON-facing index summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexSummary {
    pub patients: usize,
    pub records: usize,
    pub usable_records: usize,
    /// Per-patient counts by diagnostic class.
    pub label_histogram: BTreeMap<String, usize>,
    pub unusable: Vec<UnusableRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnusableRecord {
    pub record: String,
    pub reason: String,
}

/// Record ids from the `RECORDS` manifest, or by directory scan when the
/// manifest is absent. Always sorted.
fn list_record_ids(root: &Path) -> Result<Vec<String>, WfdbError> {
    let manifest = root.join("RECORDS");
    let mut ids = Vec::new();
    if manifest.is_file() {
        for line in fs::read_to_string(&manifest)?.lines() {
            let id = line.trim().trim_end_matches('/');
            if !id.is_empty() {
                ids.push(id.to_string());
            }
        }
    } else {
        for dir_entry in fs::read_dir(root)? {
            let dir_entry = dir_entry?;
            if !dir_entry.file_type()?.is_dir() {
                continue;
            }
            let patient = dir_entry.file_name().to_string_lossy().to_string();
            for file in fs::read_dir(dir_entry.path())? {
                let file = file?;
                let name = file.file_name().to_string_lossy().to_string();
                if let Some(stem) = name.strip_suffix(".hea") {
                    ids.push(format!("{patient}/{stem}"));
                }
            }
        }
    }
    ids.sort();
    ids.dedup();
    Ok(ids)
}

/// Builds the dataset index for a PTB-style tree.
///
/// Per-record parse failures are collected, not fatal; an entirely empty or
/// unparseable tree is [`WfdbError::EmptyDataset`].
pub fn build_index(root: impl AsRef<Path>) -> Result<DatasetIndex, WfdbError> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(WfdbError::EmptyDataset(root.to_path_buf()));
    }
    let ids = list_record_ids(root)?;

    let mut patients: BTreeMap<String, Vec<RecordEntry>> = BTreeMap::new();
    let mut failures = Vec::new();
    for id in ids {
        match index_one(root, &id) {
            Ok(entry) => patients
                .entry(entry.patient_id.clone())
                .or_default()
                .push(entry),
            Err(err) => {
                log::warn!("skipping {id}: {err}");
                failures.push((id, err.to_string()));
            }
        }
    }
    for records in patients.values_mut() {
        records.sort_by(|a, b| a.record_name.cmp(&b.record_name));
    }

    if patients.is_empty() {
        return Err(WfdbError::EmptyDataset(root.to_path_buf()));
    }
    Ok(DatasetIndex {
        root: root.to_path_buf(),
        patients,
        failures,
    })
}

fn index_one(root: &Path, record_id: &str) -> Result<RecordEntry, WfdbError> {
    let (patient_id, record_name) = split_record_id(record_id)?;
    let header_path = root.join(record_id).with_extension("hea");
    let header = parse_header(&fs::read(&header_path)?)?;
    let label = extract_diagnosis(&header);
    Ok(RecordEntry {
        record_id: record_id.to_string(),
        patient_id: patient_id.to_string(),
        record_name: record_name.to_string(),
        label,
        num_samples: header.num_samples,
        sampling_rate: header.sampling_rate,
    })
}

fn split_record_id(record_id: &str) -> Result<(&str, &str), WfdbError> {
    record_id
        .split_once('/')
        .filter(|(p, r)| !p.is_empty() && !r.is_empty() && !r.contains('/'))
        .ok_or_else(|| WfdbError::MalformedHeader {
            line: 0,
            reason: format!("record id {record_id:?} is not patient/record"),
        })
}

/// Loads one record's header and full signal data into memory.
pub fn read_record(
    root: impl AsRef<Path>,
    record_id: &str,
    mode: ChecksumMode,
) -> Result<EcgRecord, WfdbError> {
    let root = root.as_ref();
    let (patient_id, _) = split_record_id(record_id)?;
    let header_path = root.join(record_id).with_extension("hea");
    let header = parse_header(&fs::read(&header_path)?)?;
    let channels = read_channels(root, record_id, &header, mode)?;
    Ok(EcgRecord {
        patient_id: patient_id.to_string(),
        record_name: header.record_name.clone(),
        sampling_rate: header.sampling_rate,
        label: extract_diagnosis(&header),
        channels,
    })
}

fn read_channels(
    root: &Path,
    record_id: &str,
    header: &RecordHeader,
    mode: ChecksumMode,
) -> Result<BTreeMap<super::Lead, Vec<f32>>, WfdbError> {
    let Some(first) = header.signals.first() else {
        return Ok(BTreeMap::new());
    };
    if header.signals.iter().any(|s| s.file_name != first.file_name) {
        return Err(WfdbError::MalformedHeader {
            line: 0,
            reason: "signals spanning multiple .dat files are not supported".into(),
        });
    }
    let (patient_id, _) = split_record_id(record_id)?;
    let dat_path = root.join(patient_id).join(&first.file_name);
    let bytes = fs::read(&dat_path)?;
    decode_signal_file(&bytes, header, mode)
}
