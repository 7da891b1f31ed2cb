//! Bit-exact parser for PhysioNet WFDB header/signal files as used by the
//! PTB database.
//!
//! Scope is deliberately PTB-complete and no wider: single-segment records,
//! storage format 16 only, one `.dat` per record. Anything else fails loudly
//! rather than decoding wrong data.

mod header;
mod index;
mod lead;
mod signal;

pub use header::{extract_diagnosis, parse_header, DiagnosisLabel, RecordHeader, SignalSpec};
pub use index::{
    build_index, read_record, DatasetIndex, IndexSummary, RecordEntry, UnusableRecord,
    MIN_USABLE_SECONDS,
};
pub use lead::{lead_set_name, parse_lead_list, Lead, UnknownLead, ALL_LEADS};
pub use signal::{checksum16, decode_adc, decode_signal_file, encode_signal_file, ChecksumMode};

use std::collections::BTreeMap;

/// One PTB record fully loaded: 15 named channels of millivolt samples at
/// 1000 Hz, plus patient id and diagnosis label.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub patient_id: String,
    pub record_name: String,
    /// Millivolt samples per lead; all channels have equal length.
    pub channels: BTreeMap<Lead, Vec<f32>>,
    pub sampling_rate: u32,
    pub label: DiagnosisLabel,
}

impl EcgRecord {
    pub fn record_id(&self) -> String {
        format!("{}/{}", self.patient_id, self.record_name)
    }

    pub fn num_samples(&self) -> usize {
        self.channels.values().next().map_or(0, Vec::len)
    }
}

/// Errors from header/signal parsing and indexing.
#[derive(Debug, thiserror::Error)]
pub enum WfdbError {
    #[error("malformed header (line {line}): {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("unsupported storage format {0} (only format 16 is supported)")]
    UnsupportedFormat(u16),
    #[error("signal file truncated: expected {expected} bytes, got {actual}")]
    TruncatedFile { expected: usize, actual: usize },
    #[error("checksum mismatch on lead {lead}: header {expected}, computed {computed}")]
    ChecksumMismatch {
        lead: Lead,
        expected: i16,
        computed: i16,
    },
    #[error("no parseable records under {0}")]
    EmptyDataset(std::path::PathBuf),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
