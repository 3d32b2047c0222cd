use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AtlasError;

/// Neutral color for noise and unknown keys.
pub const NOISE_COLOR: &str = "#9e9e9e";

const PALETTE: [&str; 20] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#bcbd22", "#17becf", "#aec7e8",
    "#ffbb78", "#98df8a", "#ff9896", "#c5b0d5", "#c49c94", "#f7b6d2", "#dbdb8d", "#9edae5", "#393b79", "#637939",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorMode {
    Topic,
    App,
    Category,
    Participant,
}

impl ColorMode {
    pub const ALL: [ColorMode; 4] = [Self::Topic, Self::App, Self::Category, Self::Participant];
}

impl fmt::Display for ColorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Topic => "topic",
            Self::App => "app",
            Self::Category => "category",
            Self::Participant => "participant",
        })
    }
}

impl FromStr for ColorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| format!("unknown color mode {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub key: String,
    pub color: String,
}

/// Legend in lexicographic key order plus a legend index per point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorTable {
    pub mode: ColorMode,
    pub legend: Vec<LegendEntry>,
    pub indices: Vec<u16>,
}

impl ColorTable {
    /// `muted` keys get [`NOISE_COLOR`]; the rest cycle through the palette
    /// in sorted order.
    pub fn build(mode: ColorMode, keys: &[&str], muted: &[&str]) -> Result<Self, AtlasError> {
        let sorted: BTreeMap<&str, ()> = keys.iter().map(|k| (*k, ())).collect();
        if sorted.len() > u16::MAX as usize + 1 {
            return Err(AtlasError::TooManyKeys { mode, count: sorted.len() });
        }
        let position: BTreeMap<&str, u16> = sorted.keys().enumerate().map(|(i, k)| (*k, i as u16)).collect();
        let mut next = 0;
        let legend = sorted
            .keys()
            .map(|k| {
                let color = if muted.contains(k) {
                    NOISE_COLOR.to_string()
                } else {
                    next += 1;
                    PALETTE[(next - 1) % PALETTE.len()].to_string()
                };
                LegendEntry { key: k.to_string(), color }
            })
            .collect();
        Ok(Self {
            mode,
            legend,
            indices: keys.iter().map(|k| position[k]).collect(),
        })
    }

    pub fn key_of(&self, point: usize) -> &str {
        &self.legend[self.indices[point] as usize].key
    }
}
