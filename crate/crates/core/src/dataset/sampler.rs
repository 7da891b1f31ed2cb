//! Class-balanced training batches and deterministic evaluation windows.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::store::{LoadedRecord, RecordStore};
use super::{centered_offset, normalize, random_window, Class, DatasetError, Matrix};
use crate::wfdb::Lead;

/// One normalized fixed-length multi-lead window.
#[derive(Debug, Clone)]
pub struct Window {
    pub leads: Vec<Lead>,
    /// `[num_leads x window_len]`, normalized per lead.
    pub data: Matrix,
    pub label: Class,
    pub source_record: String,
    pub offset: usize,
}

/// A batch of windows, stored flat for the network: `[batch x leads x len]`.
#[derive(Debug, Clone)]
pub struct WindowBatch {
    pub num_leads: usize,
    pub window_len: usize,
    pub data: Vec<f32>,
    pub labels: Vec<Class>,
}

impl WindowBatch {
    pub fn batch_size(&self) -> usize {
        self.labels.len()
    }
}

/// Stream of class-balanced batches for one training epoch.
///
/// Each element is drawn by picking a class with probability 1/2, then a
/// uniformly random record of that class, then a uniform window, then
/// normalizing. Yields exactly `windows_per_epoch / batch_size` batches.
pub struct BatchStream<'a> {
    mi: Vec<&'a LoadedRecord>,
    healthy: Vec<&'a LoadedRecord>,
    num_leads: usize,
    window_len: usize,
    batch_size: usize,
    batches_left: usize,
    rng: &'a mut ChaCha8Rng,
}

/// Builds the balanced batch stream over a split partition.
///
/// Errors with [`DatasetError::MissingClass`] if the partition does not
/// contain both classes, and [`DatasetError::TooShort`] if any record is
/// shorter than the window (usable records never are).
pub fn balanced_batches<'a>(
    store: &'a RecordStore,
    partition: &[String],
    batch_size: usize,
    windows_per_epoch: usize,
    rng: &'a mut ChaCha8Rng,
) -> Result<BatchStream<'a>, DatasetError> {
    let records = store.resolve(partition);
    let window_len = store.window_len();
    for r in &records {
        if r.data.cols < window_len {
            return Err(DatasetError::TooShort {
                len: r.data.cols,
                window_len,
            });
        }
    }
    let mi: Vec<_> = records.iter().copied().filter(|r| r.label == Class::Mi).collect();
    let healthy: Vec<_> = records
        .iter()
        .copied()
        .filter(|r| r.label == Class::Healthy)
        .collect();
    if mi.is_empty() {
        return Err(DatasetError::MissingClass(Class::Mi));
    }
    if healthy.is_empty() {
        return Err(DatasetError::MissingClass(Class::Healthy));
    }
    Ok(BatchStream {
        mi,
        healthy,
        num_leads: store.leads.len(),
        window_len,
        batch_size,
        batches_left: windows_per_epoch / batch_size,
        rng,
    })
}

impl BatchStream<'_> {
    fn draw_window(&mut self) -> (Class, Matrix) {
        let class = if self.rng.gen_bool(0.5) {
            Class::Mi
        } else {
            Class::Healthy
        };
        let pool = match class {
            Class::Mi => &self.mi,
            Class::Healthy => &self.healthy,
        };
        let record = pool[self.rng.gen_range(0..pool.len())];
        let (_, raw) = random_window(&record.data, self.window_len, self.rng)
            .expect("records were length-checked at stream construction");
        (class, normalize(&raw))
    }
}

impl Iterator for BatchStream<'_> {
    type Item = WindowBatch;

    fn next(&mut self) -> Option<WindowBatch> {
        if self.batches_left == 0 {
            return None;
        }
        self.batches_left -= 1;
        let mut data = Vec::with_capacity(self.batch_size * self.num_leads * self.window_len);
        let mut labels = Vec::with_capacity(self.batch_size);
        for _ in 0..self.batch_size {
            let (class, window) = self.draw_window();
            data.extend_from_slice(&window.data);
            labels.push(class);
        }
        Some(WindowBatch {
            num_leads: self.num_leads,
            window_len: self.window_len,
            data,
            labels,
        })
    }
}

/// One deterministic centered window per record, normalized exactly like
/// training windows. Records shorter than the window are skipped with a log
/// entry (they cannot occur in usable partitions).
pub fn eval_windows(store: &RecordStore, partition: &[String]) -> Vec<Window> {
    let window_len = store.window_len();
    let mut windows = Vec::with_capacity(partition.len());
    for record in store.resolve(partition) {
        if record.data.cols < window_len {
            log::warn!(
                "skipping {}: {} samples < window {}",
                record.record_id,
                record.data.cols,
                window_len
            );
            continue;
        }
        let offset = centered_offset(record.data.cols, window_len);
        let raw = record.data.slice_cols(offset, window_len);
        windows.push(Window {
            leads: store.leads.clone(),
            data: normalize(&raw),
            label: record.label,
            source_record: record.record_id.clone(),
            offset,
        });
    }
    windows
}
