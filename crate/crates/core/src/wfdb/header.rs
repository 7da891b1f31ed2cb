//! WFDB header (`.hea`) parsing and diagnosis extraction.
//!
//! Grammar, as used by the PTB database: the first non-comment line is
//! `name nsig fs nsamp`, followed by one signal specification line per
//! channel, followed by trailing `#` comment lines that carry the clinical
//! metadata (including the `Reason for admission` diagnosis).

use std::str::FromStr;

use super::lead::Lead;
use super::WfdbError;

/// Specification of one signal as declared in the header.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    /// Name of the `.dat` file holding the samples.
    pub file_name: String,
    /// Storage format code. Only 16 (little-endian int16) is supported.
    pub storage_format: u16,
    /// ADC units per millivolt. Never zero: a zero in the file is replaced
    /// by the WFDB default of 200 and `gain_defaulted` is set.
    pub gain: f64,
    /// Baseline in parentheses after the gain, when present. Takes priority
    /// over `adc_zero` for the mV conversion (PTB headers omit it).
    pub baseline: Option<i32>,
    /// ADC resolution in bits.
    pub adc_resolution: u32,
    /// ADC value corresponding to 0 mV (used when `baseline` is absent).
    pub adc_zero: i32,
    /// First sample value, as declared.
    pub initial_value: i32,
    /// 16-bit signed wrapping sum of all ADC samples.
    pub checksum: i16,
    /// Canonical lead name from the description field.
    pub lead_name: Lead,
    /// True when the file declared gain 0 and the default was substituted.
    pub gain_defaulted: bool,
}

impl SignalSpec {
    /// ADC value subtracted before the gain division.
    pub fn zero_offset(&self) -> i32 {
        self.baseline.unwrap_or(self.adc_zero)
    }
}

/// Parsed `.hea` contents.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub record_name: String,
    pub num_signals: usize,
    /// Sampling rate in Hz. PTB records are all 1000 Hz.
    pub sampling_rate: u32,
    /// Samples per signal. Zero when the header omits the field.
    pub num_samples: usize,
    pub signals: Vec<SignalSpec>,
    /// Trailing comment lines, leading `#` (and one space) stripped.
    pub comments: Vec<String>,
}

/// Diagnosis extracted from the `Reason for admission` header comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosisLabel {
    MyocardialInfarction,
    HealthyControl,
    /// Any other non-empty reason, e.g. `Dysrhythmia`. Kept verbatim.
    OtherNamed(String),
    /// No admission-reason comment present. PTB has 22 such subjects.
    Unknown,
}

impl DiagnosisLabel {
    /// True for the two classes the classifier trains on.
    pub fn is_trainable(&self) -> bool {
        matches!(
            self,
            DiagnosisLabel::MyocardialInfarction | DiagnosisLabel::HealthyControl
        )
    }

    pub fn name(&self) -> &str {
        match self {
            DiagnosisLabel::MyocardialInfarction => "Myocardial infarction",
            DiagnosisLabel::HealthyControl => "Healthy control",
            DiagnosisLabel::OtherNamed(s) => s,
            DiagnosisLabel::Unknown => "Unknown",
        }
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> WfdbError {
    WfdbError::MalformedHeader {
        line,
        reason: reason.into(),
    }
}

fn parse_int<T: FromStr>(tok: &str, line: usize, field: &str) -> Result<T, WfdbError> {
    tok.parse::<T>()
        .map_err(|_| malformed(line, format!("non-numeric {field}: {tok:?}")))
}

/// Parses the `fs` token. May carry a counter frequency (`fs/counter(base)`),
/// which PTB never uses; only the leading sampling rate is kept.
fn parse_sampling_rate(tok: &str, line: usize) -> Result<u32, WfdbError> {
    let lead = tok.split('/').next().unwrap_or(tok);
    let value: f64 = lead
        .parse()
        .map_err(|_| malformed(line, format!("non-numeric sampling rate: {tok:?}")))?;
    if !value.is_finite() || value <= 0.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
        return Err(malformed(
            line,
            format!("sampling rate must be a positive integer, got {tok:?}"),
        ));
    }
    Ok(value as u32)
}

/// Parses the gain token `gain[(baseline)][/units]`.
fn parse_gain(tok: &str, line: usize) -> Result<(f64, Option<i32>), WfdbError> {
    let no_units = tok.split('/').next().unwrap_or(tok);
    let (gain_str, baseline) = match no_units.find('(') {
        Some(open) => {
            let close = no_units
                .find(')')
                .ok_or_else(|| malformed(line, format!("unclosed baseline in gain {tok:?}")))?;
            if close < open {
                return Err(malformed(line, format!("bad baseline in gain {tok:?}")));
            }
            let baseline = parse_int::<i32>(&no_units[open + 1..close], line, "baseline")?;
            (&no_units[..open], Some(baseline))
        }
        None => (no_units, None),
    };
    let gain: f64 = gain_str
        .parse()
        .map_err(|_| malformed(line, format!("non-numeric gain: {tok:?}")))?;
    if !gain.is_finite() || gain < 0.0 {
        return Err(malformed(line, format!("invalid gain: {tok:?}")));
    }
    Ok((gain, baseline))
}

fn parse_signal_line(line_no: usize, line: &str) -> Result<SignalSpec, WfdbError> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    // file format gain adc_res adc_zero init checksum block description
    if tokens.len() < 9 {
        return Err(malformed(
            line_no,
            format!("signal line has {} fields, expected 9", tokens.len()),
        ));
    }

    let format_tok = tokens[1];
    // Samples-per-frame (xN), skew (:N) and byte-offset (+N) modifiers are
    // outside the PTB subset this parser supports.
    if format_tok.contains(['x', ':', '+']) {
        return Err(malformed(
            line_no,
            format!("format modifiers not supported: {format_tok:?}"),
        ));
    }
    let storage_format: u16 = parse_int(format_tok, line_no, "storage format")?;
    if storage_format != 16 {
        return Err(WfdbError::UnsupportedFormat(storage_format));
    }

    let (raw_gain, baseline) = parse_gain(tokens[2], line_no)?;
    let gain_defaulted = raw_gain == 0.0;
    if gain_defaulted {
        log::warn!("line {line_no}: zero gain, substituting WFDB default 200");
    }
    let gain = if gain_defaulted { 200.0 } else { raw_gain };

    let adc_resolution: u32 = parse_int(tokens[3], line_no, "adc resolution")?;
    let adc_zero: i32 = parse_int(tokens[4], line_no, "adc zero")?;
    let initial_value: i32 = parse_int(tokens[5], line_no, "initial value")?;
    let checksum: i16 = parse_int(tokens[6], line_no, "checksum")?;
    let _block_size: i64 = parse_int(tokens[7], line_no, "block size")?;

    let description = tokens[8..].join(" ");
    let lead_name = description
        .parse::<Lead>()
        .map_err(|e| malformed(line_no, e.to_string()))?;

    Ok(SignalSpec {
        file_name: tokens[0].to_string(),
        storage_format,
        gain,
        baseline,
        adc_resolution,
        adc_zero,
        initial_value,
        checksum,
        lead_name,
        gain_defaulted,
    })
}

/// Parses a `.hea` file. Lines may end in LF or CRLF. Comment lines
/// (leading `#`) before the record line are ignored; trailing ones are
/// collected into [`RecordHeader::comments`].
pub fn parse_header(bytes: &[u8]) -> Result<RecordHeader, WfdbError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| malformed(0, "header is not valid UTF-8 text"))?;

    let mut record_line: Option<(usize, &str)> = None;
    let mut signal_lines: Vec<(usize, &str)> = Vec::new();
    let mut comments: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            comments.push(comment.strip_prefix(' ').unwrap_or(comment).to_string());
            continue;
        }
        if record_line.is_none() {
            record_line = Some((line_no, trimmed));
        } else {
            signal_lines.push((line_no, trimmed));
        }
    }

    let (rec_line_no, rec_line) =
        record_line.ok_or_else(|| malformed(0, "no record line found"))?;
    let tokens: Vec<&str> = rec_line.split_whitespace().collect();
    if tokens.len() < 2 {
        return Err(malformed(
            rec_line_no,
            format!("record line has {} fields, expected at least 2", tokens.len()),
        ));
    }
    let record_name = tokens[0];
    if record_name.contains('/') {
        return Err(malformed(
            rec_line_no,
            "multi-segment records are not supported",
        ));
    }
    let num_signals: usize = parse_int(tokens[1], rec_line_no, "signal count")?;
    let sampling_rate = match tokens.get(2) {
        Some(tok) => parse_sampling_rate(tok, rec_line_no)?,
        None => 250, // WFDB default
    };
    let num_samples: usize = match tokens.get(3) {
        Some(tok) => parse_int(tok, rec_line_no, "sample count")?,
        None => 0,
    };

    if signal_lines.len() != num_signals {
        return Err(malformed(
            rec_line_no,
            format!(
                "record declares {num_signals} signals but header has {} signal lines",
                signal_lines.len()
            ),
        ));
    }

    let mut signals = Vec::with_capacity(num_signals);
    for (line_no, line) in signal_lines {
        let spec = parse_signal_line(line_no, line)?;
        if signals.iter().any(|s: &SignalSpec| s.lead_name == spec.lead_name) {
            return Err(malformed(
                line_no,
                format!("duplicate lead name {}", spec.lead_name),
            ));
        }
        signals.push(spec);
    }

    Ok(RecordHeader {
        record_name: record_name.to_string(),
        num_signals,
        sampling_rate,
        num_samples,
        signals,
        comments,
    })
}

const ADMISSION_KEY: &str = "reason for admission:";

/// Scans header comments for `Reason for admission:` and maps the reason to
/// a [`DiagnosisLabel`]. Total: unknown or missing reasons never error.
pub fn extract_diagnosis(header: &RecordHeader) -> DiagnosisLabel {
    for comment in &header.comments {
        let lower = comment.to_ascii_lowercase();
        let Some(pos) = lower.find(ADMISSION_KEY) else {
            continue;
        };
        let reason = comment[pos + ADMISSION_KEY.len()..].trim();
        if reason.is_empty() {
            // A bare key carries no diagnosis; treat like a missing comment.
            return DiagnosisLabel::Unknown;
        }
        return match reason.to_ascii_lowercase().as_str() {
            "myocardial infarction" => DiagnosisLabel::MyocardialInfarction,
            "healthy control" => DiagnosisLabel::HealthyControl,
            _ => DiagnosisLabel::OtherNamed(reason.to_string()),
        };
    }
    DiagnosisLabel::Unknown
}

#[cfg(test)]
mod tests {
    use super::*;

    const PTB_STYLE_HEADER: &str = "\
s0001are 15 1000 12000
s0001are.dat 16 2000 16 0 -120 15231 0 i
s0001are.dat 16 2000 16 0 33 -4402 0 ii
s0001are.dat 16 2000 16 0 153 9312 0 iii
s0001are.dat 16 2000 16 0 -76 1200 0 avr
s0001are.dat 16 2000 16 0 -136 -31000 0 avl
s0001are.dat 16 2000 16 0 93 77 0 avf
s0001are.dat 16 2000 16 0 188 1 0 v1
s0001are.dat 16 2000 16 0 428 -2 0 v2
s0001are.dat 16 2000 16 0 -462 32767 0 v3
s0001are.dat 16 2000 16 0 -1448 -32768 0 v4
s0001are.dat 16 2000 16 0 -1631 0 0 v5
s0001are.dat 16 2000 16 0 -896 441 0 v6
s0001are.dat 16 2000 16 0 96 573 0 vx
s0001are.dat 16 2000 16 0 -281 -931 0 vy
s0001are.dat 16 2000 16 0 -055 1201 0 vz
# age: 63
# sex: male
# Reason for admission: Myocardial infarction
";

    #[test]
    fn parses_ptb_style_header() {
        let header = parse_header(PTB_STYLE_HEADER.as_bytes()).unwrap();
        assert_eq!(header.record_name, "s0001are");
        assert_eq!(header.num_signals, 15);
        assert_eq!(header.sampling_rate, 1000);
        assert_eq!(header.num_samples, 12000);
        assert_eq!(header.signals.len(), 15);
        assert_eq!(header.signals[0].lead_name, Lead::I);
        assert_eq!(header.signals[14].lead_name, Lead::Vz);
        assert_eq!(header.signals[0].gain, 2000.0);
        assert_eq!(header.signals[0].checksum, 15231);
        assert_eq!(header.comments.len(), 3);
        assert_eq!(header.comments[0], "age: 63");
    }

    #[test]
    fn crlf_line_endings_are_accepted() {
        let crlf = PTB_STYLE_HEADER.replace('\n', "\r\n");
        let header = parse_header(crlf.as_bytes()).unwrap();
        assert_eq!(header.num_signals, 15);
        assert_eq!(header.comments[2], "Reason for admission: Myocardial infarction");
    }

    #[test]
    fn empty_record_is_allowed() {
        let header =
            parse_header(b"r 1 1000 0\nr.dat 16 2000 16 0 0 0 0 ii\n").unwrap();
        assert_eq!(header.num_samples, 0);
        assert_eq!(header.num_signals, 1);
    }

    #[test]
    fn zero_gain_gets_wfdb_default() {
        let header = parse_header(b"r 1 1000 5\nr.dat 16 0 16 0 0 0 0 ii\n").unwrap();
        assert_eq!(header.signals[0].gain, 200.0);
        assert!(header.signals[0].gain_defaulted);
    }

    #[test]
    fn gain_with_baseline_and_units() {
        let header =
            parse_header(b"r 1 1000 5\nr.dat 16 1000.0(12)/mV 16 0 0 0 0 ii\n").unwrap();
        assert_eq!(header.signals[0].gain, 1000.0);
        assert_eq!(header.signals[0].baseline, Some(12));
        assert_eq!(header.signals[0].zero_offset(), 12);
    }

    #[test]
    fn rejects_wrong_format() {
        let err = parse_header(b"r 1 1000 5\nr.dat 212 200 12 0 0 0 0 ii\n").unwrap_err();
        assert!(matches!(err, WfdbError::UnsupportedFormat(212)));
    }

    #[test]
    fn rejects_signal_count_mismatch() {
        let err = parse_header(b"r 2 1000 5\nr.dat 16 200 12 0 0 0 0 ii\n").unwrap_err();
        assert!(matches!(err, WfdbError::MalformedHeader { .. }));
    }

    #[test]
    fn rejects_duplicate_leads() {
        let err = parse_header(
            b"r 2 1000 5\nr.dat 16 200 12 0 0 0 0 ii\nr.dat 16 200 12 0 0 0 0 II\n",
        )
        .unwrap_err();
        assert!(matches!(err, WfdbError::MalformedHeader { .. }));
    }

    #[test]
    fn rejects_non_numeric_fields() {
        let err = parse_header(b"r one 1000 5\n").unwrap_err();
        assert!(matches!(err, WfdbError::MalformedHeader { .. }));
    }

    #[test]
    fn diagnosis_extraction() {
        let mut header = parse_header(PTB_STYLE_HEADER.as_bytes()).unwrap();
        assert_eq!(
            extract_diagnosis(&header),
            DiagnosisLabel::MyocardialInfarction
        );

        header.comments = vec!["Reason for admission: Healthy control".into()];
        assert_eq!(extract_diagnosis(&header), DiagnosisLabel::HealthyControl);

        header.comments = vec!["reason for admission:   DYSRHYTHMIA  ".into()];
        assert_eq!(
            extract_diagnosis(&header),
            DiagnosisLabel::OtherNamed("DYSRHYTHMIA".into())
        );

        header.comments = vec!["age: 50".into()];
        assert_eq!(extract_diagnosis(&header), DiagnosisLabel::Unknown);

        header.comments.clear();
        assert_eq!(extract_diagnosis(&header), DiagnosisLabel::Unknown);
    }
}
