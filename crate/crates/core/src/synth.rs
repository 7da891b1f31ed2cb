//! Synthetic PTB-style dataset generation.
//!
//! Produces a `patientNNN/record.{hea,dat}` tree of ECG-like 15-lead
//! format-16 records with class-dependent morphology, so the whole pipeline
//! can be exercised end-to-end without the real database. MI records carry
//! an elevated ST segment and a flattened T wave; healthy records do not.
//! Deterministic in the seed.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::seed::{derive_seed_indexed, rng_from};
use crate::wfdb::{checksum16, encode_signal_file, ALL_LEADS};
use crate::Error;

/// Shape of a synthetic dataset.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub mi_patients: usize,
    pub healthy_patients: usize,
    pub records_per_patient: usize,
    /// Sampling rate in Hz. Tests use low rates (e.g. 100) for speed; 1000
    /// matches the real data.
    pub sampling_rate: u32,
    /// Base record length in seconds; actual lengths vary around it.
    pub seconds: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            mi_patients: 10,
            healthy_patients: 8,
            records_per_patient: 2,
            sampling_rate: 100,
            seconds: 14.0,
            seed: 7,
        }
    }
}

const GAIN: f64 = 2000.0;

/// A Gaussian bump centered at `center` (seconds) with width `sigma`.
fn bump(t: f64, center: f64, sigma: f64) -> f64 {
    let d = (t - center) / sigma;
    (-0.5 * d * d).exp()
}

/// One beat's waveform value at `t` seconds past the beat onset.
///
/// Crude P-QRS-T morphology: P at 80 ms, a sharp R spike at 200 ms flanked
/// by Q/S dips, then either a normal T wave (healthy) or an elevated ST
/// plateau with a damped T (MI).
fn beat_waveform(t: f64, mi: bool, t_amplitude: f64) -> f64 {
    let mut v = 0.0;
    v += 0.12 * bump(t, 0.08, 0.02); // P
    v -= 0.15 * bump(t, 0.17, 0.01); // Q
    v += 1.0 * bump(t, 0.20, 0.012); // R
    v -= 0.25 * bump(t, 0.23, 0.01); // S
    if mi {
        // ST elevation: a wide plateau right after the S wave.
        v += 0.30 * bump(t, 0.32, 0.06);
        v += 0.1 * t_amplitude * bump(t, 0.45, 0.04); // damped T
    } else {
        v += t_amplitude * bump(t, 0.45, 0.04); // T
    }
    v
}

/// Generates one record's 15 channels as ADC samples.
fn synth_channels(num_samples: usize, fs: f64, mi: bool, rng: &mut ChaCha8Rng) -> Vec<Vec<i16>> {
    let beat_period = rng.gen_range(0.7..0.95);
    let phase = rng.gen_range(0.0..beat_period);
    let t_amplitude = rng.gen_range(0.25..0.40);
    let wander_freq = rng.gen_range(0.08..0.25);
    let wander_amp = rng.gen_range(0.02..0.08);

    let mut channels = Vec::with_capacity(ALL_LEADS.len());
    for (lead_ix, _) in ALL_LEADS.iter().enumerate() {
        // Per-lead projection: amplitude scale and a small time skew.
        let scale = 0.5 + 0.06 * lead_ix as f64 + rng.gen_range(-0.05..0.05);
        let skew = 0.002 * lead_ix as f64;
        let noise_sigma = 0.02;
        let mut samples = Vec::with_capacity(num_samples);
        for s in 0..num_samples {
            let t = s as f64 / fs + phase + skew;
            let in_beat = t % beat_period;
            let mut mv = scale * beat_waveform(in_beat, mi, t_amplitude);
            mv += wander_amp * (2.0 * std::f64::consts::PI * wander_freq * t).sin();
            mv += noise_sigma * (rng.gen_range(-1.0..1.0) + rng.gen_range(-1.0..1.0));
            let adc = (mv * GAIN).round().clamp(i16::MIN as f64, i16::MAX as f64);
            samples.push(adc as i16);
        }
        channels.push(samples);
    }
    channels
}

fn write_record(
    dir: &Path,
    record_name: &str,
    reason: &str,
    fs: u32,
    channels: &[Vec<i16>],
) -> std::io::Result<()> {
    let num_samples = channels[0].len();
    let mut hea = format!("{record_name} {} {fs} {num_samples}\n", channels.len());
    for (lead, ch) in ALL_LEADS.iter().zip(channels) {
        let init = ch.first().copied().unwrap_or(0);
        hea.push_str(&format!(
            "{record_name}.dat 16 {GAIN:.0} 16 0 {init} {} 0 {lead}\n",
            checksum16(ch)
        ));
    }
    hea.push_str("# age: 60\n# sex: unknown\n");
    hea.push_str(&format!("# Reason for admission: {reason}\n"));
    fs::File::create(dir.join(format!("{record_name}.hea")))?.write_all(hea.as_bytes())?;
    fs::File::create(dir.join(format!("{record_name}.dat")))?
        .write_all(&encode_signal_file(channels))?;
    Ok(())
}

/// Writes a full synthetic tree under `root`. Returns the record count.
pub fn generate_tree(root: impl AsRef<Path>, spec: &SynthSpec) -> Result<usize, Error> {
    let root = root.as_ref();
    fs::create_dir_all(root).map_err(Error::Io)?;
    let fs_hz = spec.sampling_rate as f64;
    let total_patients = spec.mi_patients + spec.healthy_patients;
    let mut written = 0usize;
    for p in 0..total_patients {
        let mi = p < spec.mi_patients;
        let patient_id = format!("patient{:03}", p + 1);
        let dir = root.join(&patient_id);
        fs::create_dir_all(&dir).map_err(Error::Io)?;
        for r in 0..spec.records_per_patient {
            let mut rng = rng_from(derive_seed_indexed(
                spec.seed,
                "synth-record",
                &[p as u64, r as u64],
            ));
            let seconds = spec.seconds * rng.gen_range(0.85..1.25);
            let num_samples = (seconds * fs_hz).round() as usize;
            let channels = synth_channels(num_samples, fs_hz, mi, &mut rng);
            let record_name = format!("s{:04}_re", p * spec.records_per_patient + r + 1);
            let reason = if mi {
                "Myocardial infarction"
            } else {
                "Healthy control"
            };
            write_record(&dir, &record_name, reason, spec.sampling_rate, &channels)
                .map_err(Error::Io)?;
            written += 1;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wfdb::{build_index, read_record, ChecksumMode, DiagnosisLabel};

    #[test]
    fn generated_tree_indexes_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            mi_patients: 2,
            healthy_patients: 2,
            records_per_patient: 2,
            ..SynthSpec::default()
        };
        let written = generate_tree(dir.path(), &spec).unwrap();
        assert_eq!(written, 8);

        let index = build_index(dir.path()).unwrap();
        assert_eq!(index.patients.len(), 4);
        assert_eq!(index.num_records(), 8);
        assert_eq!(index.usable_records().count(), 8);
        assert!(index.failures.is_empty());

        let histogram = index.patient_label_histogram();
        assert_eq!(histogram["Myocardial infarction"], 2);
        assert_eq!(histogram["Healthy control"], 2);
    }

    #[test]
    fn checksums_verify_strictly() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            mi_patients: 1,
            healthy_patients: 1,
            records_per_patient: 1,
            ..SynthSpec::default()
        };
        generate_tree(dir.path(), &spec).unwrap();
        let record = read_record(dir.path(), "patient001/s0001_re", ChecksumMode::Strict).unwrap();
        assert_eq!(record.channels.len(), 15);
        assert_eq!(record.label, DiagnosisLabel::MyocardialInfarction);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            mi_patients: 1,
            healthy_patients: 1,
            records_per_patient: 1,
            seconds: 11.0,
            ..SynthSpec::default()
        };
        generate_tree(a.path(), &spec).unwrap();
        generate_tree(b.path(), &spec).unwrap();
        for id in ["patient001/s0001_re", "patient002/s0002_re"] {
            let ra = read_record(a.path(), id, ChecksumMode::Strict).unwrap();
            let rb = read_record(b.path(), id, ChecksumMode::Strict).unwrap();
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn classes_differ_in_morphology() {
        // The ST window mean (relative to the beat) separates classes; if
        // this fails the training smoke tests have no signal to learn.
        let mut rng = rng_from(1);
        let fs = 100.0;
        let mi = synth_channels(1_000, fs, true, &mut rng);
        let mut rng = rng_from(1);
        let healthy = synth_channels(1_000, fs, false, &mut rng);
        let mean = |ch: &[i16]| ch.iter().map(|&v| v as f64).sum::<f64>() / ch.len() as f64;
        // Same rng stream, same beats; the MI version adds the ST plateau,
        // so its mean must sit clearly higher on every lead.
        for (m, h) in mi.iter().zip(&healthy) {
            assert!(mean(m) > mean(h) + 10.0, "{} vs {}", mean(m), mean(h));
        }
    }
}
