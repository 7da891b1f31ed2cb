//! Canonical lead names for PTB records.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the 15 channels a PTB record carries: the 12 conventional ECG
/// leads plus the 3 orthogonal Frank leads (vx, vy, vz).
///
/// Lookup is always by name, never by channel index; header descriptions
/// like `AVR`/`aVR` canonicalize to the lowercase token.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Lead {
    I,
    Ii,
    Iii,
    Avr,
    Avl,
    Avf,
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
    Vx,
    Vy,
    Vz,
}

/// All 15 leads in conventional order (limb, augmented, precordial, Frank).
pub const ALL_LEADS: [Lead; 15] = [
    Lead::I,
    Lead::Ii,
    Lead::Iii,
    Lead::Avr,
    Lead::Avl,
    Lead::Avf,
    Lead::V1,
    Lead::V2,
    Lead::V3,
    Lead::V4,
    Lead::V5,
    Lead::V6,
    Lead::Vx,
    Lead::Vy,
    Lead::Vz,
];

impl Lead {
    /// Canonical lowercase token, as written in PTB headers.
    pub fn name(self) -> &'static str {
        match self {
            Lead::I => "i",
            Lead::Ii => "ii",
            Lead::Iii => "iii",
            Lead::Avr => "avr",
            Lead::Avl => "avl",
            Lead::Avf => "avf",
            Lead::V1 => "v1",
            Lead::V2 => "v2",
            Lead::V3 => "v3",
            Lead::V4 => "v4",
            Lead::V5 => "v5",
            Lead::V6 => "v6",
            Lead::Vx => "vx",
            Lead::Vy => "vy",
            Lead::Vz => "vz",
        }
    }
}

impl fmt::Display for Lead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Lead {
    type Err = UnknownLead;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        ALL_LEADS
            .iter()
            .copied()
            .find(|lead| lead.name() == lower)
            .ok_or_else(|| UnknownLead(s.trim().to_string()))
    }
}

/// A lead name that is not one of the 15 PTB channels.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown lead name: {0:?}")]
pub struct UnknownLead(pub String);

/// Parses a comma-separated lead list like `v6,vz`.
pub fn parse_lead_list(s: &str) -> Result<Vec<Lead>, UnknownLead> {
    s.split(',')
        .filter(|tok| !tok.trim().is_empty())
        .map(Lead::from_str)
        .collect()
}

/// Formats a lead set the way reports print it: `v6, vz`.
pub fn lead_set_name(leads: &[Lead]) -> String {
    leads
        .iter()
        .map(|l| l.name())
        .collect::<Vec<_>>()
        .join(", ")
}
