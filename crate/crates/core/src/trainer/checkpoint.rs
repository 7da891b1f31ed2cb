//! Versioned binary checkpoint container.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic  "ECGMICP1"                 8 bytes
//! version u32                       currently 1
//! arch    7 x u32                   leads, channels, kernel, stride,
//!                                   layers, window_len, classes
//! arch    2 x f64                   bn_eps, bn_momentum
//! loss    1 x f64                   label smoothing
//! leads   u32 count, then per lead  u8 length + ASCII name
//! tensors f32 blobs                 learnables in canonical order,
//!                                   then per-layer running mean/var,
//!                                   then Adam m and v in canonical order
//! adam    u64 step count, 4 x f64   lr, beta1, beta2, eps
//! ```
//!
//! `load(save(x))` is bit-exact, including bn running stats and Adam
//! moments. A JSON sidecar written next to the checkpoint carries seed,
//! config hash and training history.

use std::io::{Cursor, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::trial::{EpochStats, TrainConfig};
use super::TrainerError;
use crate::nn::{AdamHyper, AdamState, ArchConfig, ConvLayerParams, ModelParams};
use crate::wfdb::Lead;

const MAGIC: &[u8; 8] = b"ECGMICP1";
const VERSION: u32 = 1;

/// Everything a checkpoint stores.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelParams<f32>,
    pub adam: AdamState<f32>,
    pub leads: Vec<Lead>,
    pub label_smoothing: f64,
}

/// JSON sidecar written next to the binary checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointSidecar {
    pub seed: u64,
    pub config: TrainConfig,
    pub config_sha256: String,
    pub split_digest: String,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

pub fn sidecar_path(checkpoint: &Path) -> std::path::PathBuf {
    let mut name = checkpoint
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_default();
    name.push_str(".json");
    checkpoint.with_file_name(name)
}

struct ByteWriter(Vec<u8>);

impl ByteWriter {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32_slice(&mut self, values: &[f32]) {
        for v in values {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct ByteReader<'a>(Cursor<&'a [u8]>);

impl ByteReader<'_> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], TrainerError> {
        let mut buf = [0u8; N];
        self.0
            .read_exact(&mut buf)
            .map_err(|_| TrainerError::CorruptCheckpoint("file truncated".into()))?;
        Ok(buf)
    }
    fn u32(&mut self) -> Result<u32, TrainerError> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64, TrainerError> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64, TrainerError> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn f32_vec(&mut self, len: usize) -> Result<Vec<f32>, TrainerError> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(f32::from_le_bytes(self.bytes()?));
        }
        Ok(out)
    }
}

fn encode(ckpt: &Checkpoint) -> Vec<u8> {
    let arch = &ckpt.model.arch;
    let mut w = ByteWriter(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    for v in [
        arch.num_leads,
        arch.channels,
        arch.kernel,
        arch.stride,
        arch.num_layers,
        arch.window_len,
        arch.num_classes,
    ] {
        w.u32(v as u32);
    }
    w.f64(arch.bn_eps);
    w.f64(arch.bn_momentum);
    w.f64(ckpt.label_smoothing);

    w.u32(ckpt.leads.len() as u32);
    for lead in &ckpt.leads {
        let name = lead.name().as_bytes();
        w.0.push(name.len() as u8);
        w.0.extend_from_slice(name);
    }

    for tensor in ckpt.model.learnables() {
        w.f32_slice(tensor);
    }
    for layer in &ckpt.model.conv {
        w.f32_slice(&layer.bn_running_mean);
        w.f32_slice(&layer.bn_running_var);
    }
    for tensor in &ckpt.adam.first_moment {
        w.f32_slice(tensor);
    }
    for tensor in &ckpt.adam.second_moment {
        w.f32_slice(tensor);
    }
    w.u64(ckpt.adam.step_count);
    w.f64(ckpt.adam.hyper.lr);
    w.f64(ckpt.adam.hyper.beta1);
    w.f64(ckpt.adam.hyper.beta2);
    w.f64(ckpt.adam.hyper.eps);
    w.0
}

fn decode(bytes: &[u8]) -> Result<Checkpoint, TrainerError> {
    let mut r = ByteReader(Cursor::new(bytes));
    let magic: [u8; 8] = r.bytes()?;
    if &magic != MAGIC {
        return Err(TrainerError::CorruptCheckpoint(format!(
            "bad magic {magic:02x?}"
        )));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(TrainerError::CorruptCheckpoint(format!(
            "unsupported version {version}"
        )));
    }
    let dims: Vec<usize> = (0..7)
        .map(|_| r.u32().map(|v| v as usize))
        .collect::<Result<_, _>>()?;
    let arch = ArchConfig {
        num_leads: dims[0],
        channels: dims[1],
        kernel: dims[2],
        stride: dims[3],
        num_layers: dims[4],
        window_len: dims[5],
        num_classes: dims[6],
        bn_eps: r.f64()?,
        bn_momentum: r.f64()?,
    };
    let label_smoothing = r.f64()?;

    let lead_count = r.u32()? as usize;
    if lead_count != arch.num_leads {
        return Err(TrainerError::CorruptCheckpoint(format!(
            "descriptor declares {} leads but names {lead_count}",
            arch.num_leads
        )));
    }
    let mut leads = Vec::with_capacity(lead_count);
    for _ in 0..lead_count {
        let len: [u8; 1] = r.bytes()?;
        let mut name = vec![0u8; len[0] as usize];
        r.0.read_exact(&mut name)
            .map_err(|_| TrainerError::CorruptCheckpoint("file truncated".into()))?;
        let name = String::from_utf8(name)
            .map_err(|_| TrainerError::CorruptCheckpoint("lead name not UTF-8".into()))?;
        leads.push(name.parse::<Lead>().map_err(|e| {
            TrainerError::CorruptCheckpoint(format!("bad lead name: {e}"))
        })?);
    }

    let mut conv = Vec::with_capacity(arch.num_layers);
    for layer in 0..arch.num_layers {
        let in_ch = arch.layer_in_channels(layer);
        conv.push(ConvLayerParams {
            weights: r.f32_vec(arch.channels * in_ch * arch.kernel)?,
            bias: r.f32_vec(arch.channels)?,
            bn_gamma: r.f32_vec(arch.channels)?,
            bn_beta: r.f32_vec(arch.channels)?,
            bn_running_mean: Vec::new(),
            bn_running_var: Vec::new(),
        });
    }
    let dense_weights = r.f32_vec(arch.flatten_dim() * arch.num_classes)?;
    let dense_bias = r.f32_vec(arch.num_classes)?;
    for layer in &mut conv {
        layer.bn_running_mean = r.f32_vec(arch.channels)?;
        layer.bn_running_var = r.f32_vec(arch.channels)?;
    }
    let model = ModelParams {
        arch,
        conv,
        dense_weights,
        dense_bias,
    };

    let shapes: Vec<usize> = model.learnables().iter().map(|t| t.len()).collect();
    let mut first_moment = Vec::with_capacity(shapes.len());
    for &len in &shapes {
        first_moment.push(r.f32_vec(len)?);
    }
    let mut second_moment = Vec::with_capacity(shapes.len());
    for &len in &shapes {
        second_moment.push(r.f32_vec(len)?);
    }
    let step_count = r.u64()?;
    let hyper = AdamHyper {
        lr: r.f64()?,
        beta1: r.f64()?,
        beta2: r.f64()?,
        eps: r.f64()?,
    };

    let mut trailing = Vec::new();
    r.0.read_to_end(&mut trailing)
        .map_err(|e| TrainerError::CorruptCheckpoint(e.to_string()))?;
    if !trailing.is_empty() {
        return Err(TrainerError::CorruptCheckpoint(format!(
            "{} unexpected trailing bytes",
            trailing.len()
        )));
    }

    Ok(Checkpoint {
        model,
        adam: AdamState {
            hyper,
            step_count,
            first_moment,
            second_moment,
        },
        leads,
        label_smoothing,
    })
}

/// Writes the binary checkpoint, plus the JSON sidecar when given.
pub fn save_checkpoint(
    path: impl AsRef<Path>,
    ckpt: &Checkpoint,
    sidecar: Option<&CheckpointSidecar>,
) -> Result<(), TrainerError> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path)?;
    file.write_all(&encode(ckpt))?;
    if let Some(sidecar) = sidecar {
        let json = serde_json::to_string_pretty(sidecar)
            .map_err(|e| TrainerError::CorruptCheckpoint(e.to_string()))?;
        std::fs::write(sidecar_path(path), json)?;
    }
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, TrainerError> {
    let bytes = std::fs::read(path.as_ref())?;
    decode(&bytes)
}
