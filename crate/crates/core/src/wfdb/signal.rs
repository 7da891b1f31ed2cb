//! WFDB format-16 signal decoding (and encoding, for fixtures/round-trips).
//!
//! Format 16 stores each sample as a little-endian 16-bit two's-complement
//! integer, frame-interleaved across all signals that share the file:
//! `s0c0 s0c1 ... s0c{n-1} s1c0 ...`.

use std::collections::BTreeMap;

use super::header::RecordHeader;
use super::lead::Lead;
use super::WfdbError;

/// How to treat a checksum mismatch while decoding.
///
/// Archival copies of PTB vary, so the default is to warn and continue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChecksumMode {
    #[default]
    Warn,
    Strict,
}

/// 16-bit wrapping sum of raw ADC samples, the WFDB checksum.
pub fn checksum16(samples: &[i16]) -> i16 {
    let mut sum: u16 = 0;
    for &s in samples {
        sum = sum.wrapping_add(s as u16);
    }
    sum as i16
}

/// Deinterleaves raw format-16 bytes into per-channel ADC samples.
///
/// Requires at least `num_samples * num_signals * 2` bytes; trailing bytes
/// beyond that are ignored.
pub fn decode_adc(bytes: &[u8], header: &RecordHeader) -> Result<Vec<Vec<i16>>, WfdbError> {
    let nsig = header.num_signals;
    let nsamp = header.num_samples;
    let needed = nsamp
        .checked_mul(nsig)
        .and_then(|n| n.checked_mul(2))
        .ok_or_else(|| WfdbError::MalformedHeader {
            line: 0,
            reason: "sample count overflows".into(),
        })?;
    if bytes.len() < needed {
        return Err(WfdbError::TruncatedFile {
            expected: needed,
            actual: bytes.len(),
        });
    }

    let mut channels = vec![Vec::with_capacity(nsamp); nsig];
    for frame in bytes[..needed].chunks_exact(2 * nsig) {
        for (ch, pair) in frame.chunks_exact(2).enumerate() {
            channels[ch].push(i16::from_le_bytes([pair[0], pair[1]]));
        }
    }
    Ok(channels)
}

/// Decodes a format-16 signal file into millivolt samples per lead.
///
/// Sample `s` of channel `c` is `(adc[s*nsig + c] - zero_c) / gain_c` mV,
/// computed in f64 and rounded once to f32. Each channel's 16-bit wrapping
/// checksum is compared against the header; mismatches warn or error
/// depending on `mode`.
pub fn decode_signal_file(
    bytes: &[u8],
    header: &RecordHeader,
    mode: ChecksumMode,
) -> Result<BTreeMap<Lead, Vec<f32>>, WfdbError> {
    let adc = decode_adc(bytes, header)?;
    let mut out = BTreeMap::new();
    for (spec, samples) in header.signals.iter().zip(&adc) {
        let computed = checksum16(samples);
        if computed != spec.checksum {
            match mode {
                ChecksumMode::Strict => {
                    return Err(WfdbError::ChecksumMismatch {
                        lead: spec.lead_name,
                        expected: spec.checksum,
                        computed,
                    });
                }
                ChecksumMode::Warn => log::warn!(
                    "checksum mismatch on lead {}: header {} computed {}",
                    spec.lead_name,
                    spec.checksum,
                    computed
                ),
            }
        }
        let zero = spec.zero_offset();
        let gain = spec.gain;
        let mv: Vec<f32> = samples
            .iter()
            .map(|&s| ((s as i32 - zero) as f64 / gain) as f32)
            .collect();
        out.insert(spec.lead_name, mv);
    }
    Ok(out)
}

/// Interleaves per-channel ADC samples into format-16 bytes.
///
/// All channels must have equal length. Inverse of [`decode_adc`].
pub fn encode_signal_file(channels: &[Vec<i16>]) -> Vec<u8> {
    let nsamp = channels.first().map_or(0, Vec::len);
    assert!(
        channels.iter().all(|c| c.len() == nsamp),
        "all channels must have equal length"
    );
    let mut bytes = Vec::with_capacity(nsamp * channels.len() * 2);
    for s in 0..nsamp {
        for ch in channels {
            bytes.extend_from_slice(&ch[s].to_le_bytes());
        }
    }
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wfdb::parse_header;

    fn two_lead_header(nsamp: usize) -> RecordHeader {
        let text = format!(
            "r 2 1000 {nsamp}\nr.dat 16 2000 16 0 0 0 0 ii\nr.dat 16 1000 16 5 0 0 0 vz\n"
        );
        parse_header(text.as_bytes()).unwrap()
    }

    #[test]
    fn zero_bytes_decode_to_zero_mv() {
        let header = two_lead_header(4);
        let bytes = vec![0u8; 16];
        let channels = decode_signal_file(&bytes, &header, ChecksumMode::Warn).unwrap();
        assert!(channels[&Lead::Ii].iter().all(|&v| v == 0.0));
        // vz has adc_zero 5, so zero ADC reads -5/1000 mV.
        assert!(channels[&Lead::Vz].iter().all(|&v| v == -0.005));
    }

    #[test]
    fn gain_definition() {
        // ADC 2000 with gain 2000, zero 0 -> exactly 1 mV.
        let header = two_lead_header(1);
        let bytes = encode_signal_file(&[vec![2000], vec![0]]);
        let channels = decode_signal_file(&bytes, &header, ChecksumMode::Warn).unwrap();
        assert_eq!(channels[&Lead::Ii][0], 1.0);
    }

    #[test]
    fn interleaving_order() {
        let header = two_lead_header(3);
        let bytes = encode_signal_file(&[vec![1, 2, 3], vec![-1, -2, -3]]);
        let adc = decode_adc(&bytes, &header).unwrap();
        assert_eq!(adc[0], vec![1, 2, 3]);
        assert_eq!(adc[1], vec![-1, -2, -3]);
    }

    #[test]
    fn truncated_file_is_an_error() {
        let header = two_lead_header(4);
        let err = decode_adc(&[0u8; 15], &header).unwrap_err();
        assert!(matches!(
            err,
            WfdbError::TruncatedFile {
                expected: 16,
                actual: 15
            }
        ));
    }

    #[test]
    fn checksum_wraps_like_wfdb() {
        assert_eq!(checksum16(&[1, 2, 3]), 6);
        assert_eq!(checksum16(&[i16::MAX, 1]), i16::MIN);
        assert_eq!(checksum16(&[-1, 1]), 0);
    }

    #[test]
    fn strict_mode_reports_the_lead() {
        let header = two_lead_header(2);
        let bytes = encode_signal_file(&[vec![7, 7], vec![0, 0]]);
        let err = decode_signal_file(&bytes, &header, ChecksumMode::Strict).unwrap_err();
        match err {
            WfdbError::ChecksumMismatch { lead, computed, .. } => {
                assert_eq!(lead, Lead::Ii);
                assert_eq!(computed, 14);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
