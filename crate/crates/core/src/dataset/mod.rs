//! Windows, normalization, splits and balanced batch sampling.
//!
//! Indexed records become fixed-length multi-lead training windows here:
//! lead selection by name, uniform random 10-second cropping, per-lead
//! z-score normalization, and a class-balanced sampler that feeds the
//! trainer. Split generation (record-wise and patient-wise) lives in
//! [`split`], batch streaming in [`sampler`].

mod sampler;
mod split;
mod store;

pub use sampler::{balanced_batches, eval_windows, BatchStream, Window, WindowBatch};
pub use split::{make_split, Split, SplitManifest, SplitMode, SplitSpec};
pub use store::{load_store, LoadedRecord, RecordStore};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::wfdb::{EcgRecord, Lead};

/// Binary training class. MI is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Healthy,
    Mi,
}

impl Class {
    /// Logit/target index: healthy 0, MI 1.
    pub fn index(self) -> usize {
        match self {
            Class::Healthy => 0,
            Class::Mi => 1,
        }
    }

    pub fn from_index(ix: usize) -> Option<Class> {
        match ix {
            0 => Some(Class::Healthy),
            1 => Some(Class::Mi),
            _ => None,
        }
    }
}

/// Dense row-major f32 matrix: one row per lead, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f32>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols));
        Matrix {
            rows: nrows,
            cols: ncols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Contiguous column slice `[offset, offset + len)` across all rows.
    pub fn slice_cols(&self, offset: usize, len: usize) -> Matrix {
        assert!(offset + len <= self.cols);
        let mut data = Vec::with_capacity(self.rows * len);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[offset..offset + len]);
        }
        Matrix {
            rows: self.rows,
            cols: len,
            data,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("record has no lead {0:?}")]
    UnknownLead(String),
    #[error("signal too short: {len} samples, window needs {window_len}")]
    TooShort { len: usize, window_len: usize },
    #[error("split ratios invalid: {0}")]
    BadRatios(String),
    #[error("could not build a split with every class in every partition after {attempts} attempts")]
    InfeasibleSplit { attempts: usize },
    #[error("partition is missing class {0:?}")]
    MissingClass(Class),
    #[error("records mix sampling rates: {0:?}")]
    MixedSamplingRate(Vec<u32>),
    #[error(transparent)]
    Wfdb(#[from] crate::wfdb::WfdbError),
}

/// Extracts the requested leads from a record, rows ordered as requested.
///
/// Duplicate requests are permitted (the row is repeated) but logged.
pub fn select_leads(record: &EcgRecord, leads: &[Lead]) -> Result<Matrix, DatasetError> {
    let mut seen = Vec::new();
    let mut rows = Vec::with_capacity(leads.len());
    for &lead in leads {
        if seen.contains(&lead) {
            log::warn!("lead {lead} requested more than once for {}", record.record_id());
        }
        seen.push(lead);
        let channel = record
            .channels
            .get(&lead)
            .ok_or_else(|| DatasetError::UnknownLead(lead.name().to_string()))?;
        rows.push(channel.clone());
    }
    Ok(Matrix::from_rows(rows))
}

/// Uniform random contiguous window across all rows.
///
/// The offset is uniform over `[0, len - window_len]`, endpoints included.
pub fn random_window(
    signal: &Matrix,
    window_len: usize,
    rng: &mut impl Rng,
) -> Result<(usize, Matrix), DatasetError> {
    if signal.cols < window_len {
        return Err(DatasetError::TooShort {
            len: signal.cols,
            window_len,
        });
    }
    let offset = rng.gen_range(0..=signal.cols - window_len);
    Ok((offset, signal.slice_cols(offset, window_len)))
}

/// Deterministic centered window used for evaluation.
pub fn centered_offset(len: usize, window_len: usize) -> usize {
    debug_assert!(len >= window_len);
    (len - window_len) / 2
}

/// Threshold below which a row's standard deviation counts as zero.
const SIGMA_FLOOR: f64 = 1e-8;

/// Per-row z-score over the window. Rows with (population) standard
/// deviation under `1e-8` map to all zeros. Moments accumulate in f64 so the
/// output meets |mean| < 1e-6 and |std - 1| < 1e-6 per row.
pub fn normalize(window: &Matrix) -> Matrix {
    let mut out = window.clone();
    for r in 0..out.rows {
        let row = out.row_mut(r);
        let n = row.len() as f64;
        if row.is_empty() {
            continue;
        }
        let mean = row.iter().map(|&x| x as f64).sum::<f64>() / n;
        let var = row
            .iter()
            .map(|&x| {
                let d = x as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        let sigma = var.sqrt();
        if sigma < SIGMA_FLOOR {
            row.fill(0.0);
        } else {
            for x in row.iter_mut() {
                *x = ((*x as f64 - mean) / sigma) as f32;
            }
        }
    }
    out
}
