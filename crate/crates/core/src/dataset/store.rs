//! In-memory store of usable records with a fixed lead selection.
//!
//! Loaded once per lead set and shared immutably across trial workers;
//! windows are cut and normalized on the fly, so stored samples stay raw mV.

use std::collections::BTreeMap;
use std::path::Path;

use super::{select_leads, Class, DatasetError, Matrix};
use crate::wfdb::{read_record, ChecksumMode, DatasetIndex, DiagnosisLabel, Lead};

/// One usable record with only the selected leads kept.
#[derive(Debug, Clone)]
pub struct LoadedRecord {
    pub record_id: String,
    pub patient_id: String,
    pub label: Class,
    /// Raw mV samples, one row per selected lead.
    pub data: Matrix,
}

/// All usable records of a dataset, restricted to one lead selection.
#[derive(Debug, Clone)]
pub struct RecordStore {
    pub leads: Vec<Lead>,
    pub sampling_rate: u32,
    records: BTreeMap<String, LoadedRecord>,
}

impl RecordStore {
    /// Loads every usable record in the index, keeping `leads` only.
    pub fn load(
        index: &DatasetIndex,
        leads: &[Lead],
        mode: ChecksumMode,
    ) -> Result<Self, DatasetError> {
        let mut rates: Vec<u32> = index.usable_records().map(|r| r.sampling_rate).collect();
        rates.sort_unstable();
        rates.dedup();
        if rates.len() > 1 {
            return Err(DatasetError::MixedSamplingRate(rates));
        }
        let sampling_rate = rates.first().copied().unwrap_or(0);

        let mut records = BTreeMap::new();
        for entry in index.usable_records() {
            let record = read_record(&index.root, &entry.record_id, mode)?;
            let data = select_leads(&record, leads)?;
            let label = match record.label {
                DiagnosisLabel::MyocardialInfarction => Class::Mi,
                DiagnosisLabel::HealthyControl => Class::Healthy,
                // usable() filtered everything else out already
                _ => unreachable!("unusable record in usable set"),
            };
            records.insert(
                entry.record_id.clone(),
                LoadedRecord {
                    record_id: entry.record_id.clone(),
                    patient_id: entry.patient_id.clone(),
                    label,
                    data,
                },
            );
        }
        Ok(RecordStore {
            leads: leads.to_vec(),
            sampling_rate,
            records,
        })
    }

    /// Builds a store from already-materialized records (tests, synthetic data).
    pub fn from_records(
        leads: Vec<Lead>,
        sampling_rate: u32,
        records: Vec<LoadedRecord>,
    ) -> Self {
        RecordStore {
            leads,
            sampling_rate,
            records: records
                .into_iter()
                .map(|r| (r.record_id.clone(), r))
                .collect(),
        }
    }

    /// Window length for this dataset: 10 seconds of samples.
    pub fn window_len(&self) -> usize {
        10 * self.sampling_rate as usize
    }

    pub fn get(&self, record_id: &str) -> Option<&LoadedRecord> {
        self.records.get(record_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Resolves a partition's record ids, in the partition's order.
    /// Ids missing from the store (never the case for splits made from the
    /// same index) are skipped with a warning.
    pub fn resolve<'a>(&'a self, record_ids: &[String]) -> Vec<&'a LoadedRecord> {
        record_ids
            .iter()
            .filter_map(|id| {
                let found = self.records.get(id);
                if found.is_none() {
                    log::warn!("record {id} not in store, skipping");
                }
                found
            })
            .collect()
    }
}

/// Convenience: index + load in one call.
pub fn load_store(
    root: impl AsRef<Path>,
    leads: &[Lead],
    mode: ChecksumMode,
) -> Result<(DatasetIndex, RecordStore), DatasetError> {
    let index = crate::wfdb::build_index(root)?;
    let store = RecordStore::load(&index, leads, mode)?;
    Ok((index, store))
}
