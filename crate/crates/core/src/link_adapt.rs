//! MCS selection and scheme throughput.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::beamforming::Scheme;
use crate::error::{Error, Result};

pub const DEFAULT_GAP_DB: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "16QAM")]
    Qam16,
    #[serde(rename = "64QAM")]
    Qam64,
    #[serde(rename = "256QAM")]
    Qam256,
}

impl Modulation {
    pub fn bits(self) -> u32 {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
            Modulation::Qam256 => 8,
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16QAM",
            Modulation::Qam64 => "64QAM",
            Modulation::Qam256 => "256QAM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub modulation: Modulation,
    /// Code rate as `(numerator, denominator)`.
    pub rate: (u32, u32),
    /// Bits per symbol per subcarrier.
    pub efficiency: f64,
    pub snr_threshold_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsTable {
    pub entries: Vec<McsEntry>,
    /// Shannon gap used by the effective-SNR mapping.
    pub gap_db: f64,
}

/// `10·log₁₀(2^R − 1) + gap`.
pub fn shannon_threshold_db(efficiency: f64, gap_db: f64) -> f64 {
    10.0 * (2f64.powf(efficiency) - 1.0).log10() + gap_db
}

pub fn default_mcs_table(gap_db: f64) -> McsTable {
    use Modulation::*;
    let combos = [
        (Qpsk, (1, 2)),
        (Qpsk, (5, 8)),
        (Qpsk, (3, 4)),
        (Qam16, (1, 2)),
        (Qam16, (5, 8)),
        (Qam16, (3, 4)),
        (Qam64, (5, 8)),
        (Qam64, (3, 4)),
        (Qam256, (5, 8)),
        (Qam256, (3, 4)),
    ];
    let entries = combos
        .into_iter()
        .map(|(modulation, rate)| {
            let efficiency = modulation.bits() as f64 * rate.0 as f64 / rate.1 as f64;
            McsEntry { modulation, rate, efficiency, snr_threshold_db: shannon_threshold_db(efficiency, gap_db) }
        })
        .collect();
    McsTable { entries, gap_db }
}

impl McsTable {
    pub fn validate(&self) -> Result<()> {
        if self.entries.len() != 10 {
            return Err(Error::Config(format!("MCS table must have 10 entries, got {}", self.entries.len())));
        }
        if !(self.gap_db >= 0.0) || !self.gap_db.is_finite() {
            return Err(Error::Config("gap_db must be finite and >= 0".into()));
        }
        for w in self.entries.windows(2) {
            if !(w[1].efficiency > w[0].efficiency) || !(w[1].snr_threshold_db > w[0].snr_threshold_db) {
                return Err(Error::Config("MCS efficiencies and thresholds must be strictly increasing".into()));
            }
        }
        if self.entries.iter().any(|e| !(e.efficiency > 0.0) || !e.snr_threshold_db.is_finite()) {
            return Err(Error::Config("MCS entries need positive efficiency and finite threshold".into()));
        }
        Ok(())
    }

    pub fn top_efficiency(&self) -> f64 {
        self.entries.last().map_or(0.0, |e| e.efficiency)
    }
}

impl Default for McsTable {
    fn default() -> Self {
        default_mcs_table(DEFAULT_GAP_DB)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Mean gap-scaled capacity over the band, mapped back to an SNR.
    #[default]
    MeanCapacity,
    /// Weakest subcarrier decides.
    MinSinr,
}

/// Mean of `log₂(1 + sinr/Γ)` over subcarriers.
pub fn effective_rate(sinr: &[f64], gap_db: f64) -> f64 {
    let gamma = 10f64.powf(gap_db / 10.0);
    sinr.iter().map(|&s| (1.0 + s.max(0.0) / gamma).log2()).sum::<f64>() / sinr.len() as f64
}

/// SNR (dB) compared against the table thresholds.
pub fn effective_snr_db(sinr: &[f64], gap_db: f64, rule: SelectionRule) -> f64 {
    match rule {
        SelectionRule::MeanCapacity => shannon_threshold_db(effective_rate(sinr, gap_db), gap_db),
        SelectionRule::MinSinr => 10.0 * sinr.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0).log10(),
    }
}

/// Highest table entry whose threshold is met, or `None` for outage.
pub fn select_mcs(sinr: &[f64], table: &McsTable, rule: SelectionRule) -> Option<usize> {
    assert!(!sinr.is_empty());
    let eff = effective_snr_db(sinr, table.gap_db, rule);
    table.entries.iter().rposition(|e| e.snr_threshold_db <= eff + 1e-9)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub n_g: usize,
    pub stream_mcs: Vec<Option<usize>>,
    pub sum_throughput: f64,
    pub duty_factor: f64,
}

impl SchemeResult {
    pub fn outage(scheme: Scheme, n_g: usize) -> Self {
        let n = scheme.streams().len();
        Self { scheme, n_g, stream_mcs: vec![None; n], sum_throughput: 0.0, duty_factor: scheme.duty_factor() }
    }
}

/// `duty × Σ efficiency`. For TDMA this is the average of the per-slot sums.
pub fn scheme_throughput(scheme: Scheme, n_g: usize, selections: &[Option<usize>], table: &McsTable) -> SchemeResult {
    assert_eq!(selections.len(), scheme.streams().len());
    let duty = scheme.duty_factor();
    let total: f64 = selections.iter().flatten().map(|&i| table.entries[i].efficiency).sum();
    SchemeResult { scheme, n_g, stream_mcs: selections.to_vec(), sum_throughput: duty * total, duty_factor: duty }
}
