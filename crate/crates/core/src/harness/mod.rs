//! Experiment engine: drops, scheme/N_g/quantization sweeps and result emission.

pub mod report;

use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{
    assign_precoders_to_subcarriers, comp_init, design, ia_closed_form, max_sinr, power_normalize,
    BeamformingOptions, MaxSinrOptions, MaxSinrOutput, Scheme,
};
use crate::codec::{
    bit_count, encode_report, exact_breve_channels, reconstruct_channels, reported_subcarrier_indices, CodecParams,
    CsiReport, VALID_NG,
};
use crate::error::{Error, Result};
use crate::link_adapt::{default_mcs_table, scheme_throughput, select_mcs, McsEntry, McsTable, SchemeResult, SelectionRule, DEFAULT_GAP_DB};
use crate::linalg::CMat;
use crate::phy_link::{evaluate, Combiner, LinkOptions};
use crate::scenario::{
    derive_rng, generate_channels_with, preset_scenario, split_blocks, ChannelRealization, Preset, PresetParams,
    ScenarioConfig, N_BS, N_MS, N_RX_ANT, N_TX_ANT,
};

pub use report::{aggregate, read_rows_csv, write_json, write_rows_csv, CellSummary, Summary};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "IACOMP_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "results";

const TAG_GAINS: u64 = 1;
const TAG_CHANNEL: u64 = 2;
const TAG_PILOT: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantization {
    #[default]
    On,
    Off,
    Both,
}

impl Quantization {
    pub fn modes(self) -> Vec<bool> {
        match self {
            Quantization::On => vec![true],
            Quantization::Off => vec![false],
            Quantization::Both => vec![true, false],
        }
    }
}

impl std::str::FromStr for Quantization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on" => Ok(Quantization::On),
            "off" => Ok(Quantization::Off),
            "both" => Ok(Quantization::Both),
            _ => Err(Error::Config(format!("quantization must be on, off or both, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McsConfig {
    pub gap_db: f64,
    pub rule: SelectionRule,
    /// Replaces the default table when present.
    pub table: Option<Vec<McsEntry>>,
}

impl Default for McsConfig {
    fn default() -> Self {
        Self { gap_db: DEFAULT_GAP_DB, rule: SelectionRule::MeanCapacity, table: None }
    }
}

impl McsConfig {
    pub fn table(&self) -> McsTable {
        match &self.table {
            Some(entries) => McsTable { entries: entries.clone(), gap_db: self.gap_db },
            None => default_mcs_table(self.gap_db),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Link-level parameters; `path_gain_db` is used when `preset` is absent.
    pub scenario: ScenarioConfig,
    /// Draw path gains per drop from this preset.
    pub preset: Option<Preset>,
    pub preset_params: PresetParams,
    pub schemes: Vec<Scheme>,
    pub n_g_list: Vec<usize>,
    pub quantization: Quantization,
    /// Seconds.
    pub rms_ds_list: Vec<f64>,
    pub n_drops: usize,
    pub seed: u64,
    /// Output directory; falls back to `$IACOMP_OUT_DIR`, then `results`.
    pub output: Option<PathBuf>,
    pub beamforming: BeamformingOptions,
    pub b_psi: u8,
    pub b_phi: u8,
    pub mcs: McsConfig,
    /// Add estimation noise to the precoded pilots.
    pub pilot_noise: bool,
    pub combiner: Combiner,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            preset: Some(Preset::Mixed),
            preset_params: PresetParams::default(),
            schemes: Scheme::ALL.to_vec(),
            n_g_list: VALID_NG.to_vec(),
            quantization: Quantization::On,
            rms_ds_list: vec![50e-9],
            n_drops: 100,
            seed: 0,
            output: None,
            beamforming: BeamformingOptions::default(),
            b_psi: 7,
            b_phi: 9,
            mcs: McsConfig::default(),
            pilot_noise: true,
            combiner: Combiner::Mmse,
            workers: 0,
        }
    }
}

impl ExperimentSpec {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let spec: Self = serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.preset_params.validate()?;
        self.mcs.table().validate()?;
        if self.schemes.is_empty() || self.n_g_list.is_empty() || self.rms_ds_list.is_empty() {
            return Err(Error::Config("schemes, n_g_list and rms_ds_list must be nonempty".into()));
        }
        if self.n_drops < 1 {
            return Err(Error::Config("n_drops must be >= 1".into()));
        }
        for &n_g in &self.n_g_list {
            self.codec_params(n_g, false).validate()?;
        }
        if self.rms_ds_list.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::Config("rms_ds_list entries must be finite and >= 0".into()));
        }
        let bf = &self.beamforming;
        if bf.max_iters < 1 || !(bf.mu >= 0.0) || !(bf.tol > 0.0) {
            return Err(Error::Config("beamforming needs max_iters >= 1, mu >= 0, tol > 0".into()));
        }
        Ok(())
    }

    pub fn codec_params(&self, n_g: usize, ia_block_reduction: bool) -> CodecParams {
        CodecParams {
            b_psi: self.b_psi,
            b_phi: self.b_phi,
            n_g,
            ia_block_reduction,
            m: N_BS * N_TX_ANT,
            n: N_RX_ANT,
            n_sc: self.scenario.n_sc,
        }
    }

    /// Explicit `output`, else the environment default.
    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    fn link_options(&self) -> LinkOptions {
        LinkOptions {
            sigma_nominal_sq: self.scenario.sigma_nominal_sq,
            evm_db: self.scenario.evm_db,
            noiseless_pilots: !self.pilot_noise,
            combiner: self.combiner,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub drop: usize,
    pub scheme: Scheme,
    pub n_g: usize,
    pub quantized: bool,
    /// Seconds.
    pub rms_ds: f64,
    pub stream_mcs: Vec<Option<usize>>,
    pub sum_tput: f64,
    pub fb_bits: usize,
}

/// Path gains of a drop: drawn from the preset, or the fixed scenario matrix.
pub fn drop_path_gains(spec: &ExperimentSpec, drop: usize) -> [[f64; N_BS]; N_MS] {
    match spec.preset {
        Some(p) => preset_scenario(p, &spec.preset_params, &mut derive_rng(spec.seed, &[drop as u64, TAG_GAINS])),
        None => spec.scenario.path_gain_db,
    }
}

/// The channel a drop sees at one delay spread; shared by every scheme and `n_g`.
pub fn drop_channels(spec: &ExperimentSpec, drop: usize, rms_ds: f64) -> ChannelRealization {
    let cfg = ScenarioConfig { rms_delay_spread: rms_ds, path_gain_db: drop_path_gains(spec, drop), ..spec.scenario.clone() };
    generate_channels_with(&cfg, &mut derive_rng(spec.seed, &[drop as u64, TAG_CHANNEL, rms_ds.to_bits()]))
}

/// `big[k][s]`: MS `k`'s concatenated channel on subcarrier `s`.
pub fn big_channels(ch: &ChannelRealization) -> Vec<Vec<CMat>> {
    (0..N_MS).map(|k| (0..ch.n_sc()).map(|s| ch.big_h(k, s)).collect()).collect()
}

/// Rebuilt channels of every MS at its V-reported subcarriers, `[k][pos]`.
pub fn feedback_channels(
    big: &[Vec<CMat>],
    sigma_nominal_sq: f64,
    params: CodecParams,
    quantized: bool,
) -> Result<Vec<Vec<CMat>>> {
    let sigma = sigma_nominal_sq.sqrt();
    big.iter()
        .map(|b| {
            if quantized {
                let sent = encode_report(b, sigma, params)?;
                let received = CsiReport::unpack(&sent.packed, params)?;
                Ok(reconstruct_channels(&received, sigma)?)
            } else {
                Ok(exact_breve_channels(b, params.n_g, params.n))
            }
        })
        .collect()
}

fn run_cell(
    spec: &ExperimentSpec,
    scheme: Scheme,
    n_g: usize,
    breve: &[Vec<CMat>],
    ch: &ChannelRealization,
    rng_path: &[u64],
) -> Result<SchemeResult> {
    let sigma_sq = spec.scenario.sigma_nominal_sq;
    let d = design(scheme, breve, sigma_sq, &spec.beamforming)?;
    let (v_idx, _) = reported_subcarrier_indices(n_g, ch.n_sc());
    let pre = assign_precoders_to_subcarriers(scheme, &d.vectors, &v_idx, ch.n_sc(), d.fallback);
    let map = evaluate(ch, &pre, &spec.link_options(), &mut derive_rng(spec.seed, rng_path));
    let table = spec.mcs.table();
    let sel: Vec<Option<usize>> = map.sinr.iter().map(|s| select_mcs(s, &table, spec.mcs.rule)).collect();
    Ok(scheme_throughput(scheme, n_g, &sel, &table))
}

/// Every (delay spread, quantization, n_g, scheme) cell of one drop.
pub fn run_drop(spec: &ExperimentSpec, drop: usize) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    let sigma_sq = spec.scenario.sigma_nominal_sq;
    for &rms_ds in &spec.rms_ds_list {
        let ch = drop_channels(spec, drop, rms_ds);
        let big = big_channels(&ch);
        for quantized in spec.quantization.modes() {
            for &n_g in &spec.n_g_list {
                let mut fb: [Option<Result<Vec<Vec<CMat>>>>; 2] = [None, None];
                for &scheme in &spec.schemes {
                    let ia = scheme.uses_ia_reduction();
                    let params = spec.codec_params(n_g, ia);
                    let breve = fb[ia as usize].get_or_insert_with(|| feedback_channels(&big, sigma_sq, params, quantized));
                    let pilot_path = [drop as u64, TAG_PILOT, rms_ds.to_bits(), quantized as u64, scheme as u64];
                    let result = match breve {
                        Ok(b) => run_cell(spec, scheme, n_g, b, &ch, &pilot_path),
                        Err(e) => Err(Error::Beamforming(format!("feedback failed: {e}"))),
                    };
                    let result = result.unwrap_or_else(|e| {
                        warn!("drop {drop} {scheme} n_g={n_g} quantized={quantized}: {e}; recorded as outage");
                        SchemeResult::outage(scheme, n_g)
                    });
                    rows.push(ResultRow {
                        drop,
                        scheme,
                        n_g,
                        quantized,
                        rms_ds,
                        stream_mcs: result.stream_mcs,
                        sum_tput: result.sum_throughput,
                        fb_bits: bit_count(&params),
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

/// Runs every drop (in parallel) and aggregates.
pub fn sweep(spec: &ExperimentSpec) -> Result<SweepOutput> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let per_drop: Vec<Vec<ResultRow>> =
        pool.install(|| (0..spec.n_drops).into_par_iter().map(|d| run_drop(spec, d)).collect::<Result<_>>())?;
    let rows: Vec<ResultRow> = per_drop.into_iter().flatten().collect();
    let summary = aggregate(&rows);
    Ok(SweepOutput { rows, summary })
}

/// Sweeps and writes `results.csv` and `summary.json` into `dir`.
pub fn run_and_write(spec: &ExperimentSpec, dir: &Path) -> Result<SweepOutput> {
    let out = sweep(spec)?;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    write_rows_csv(&dir.join("results.csv"), &out.rows)?;
    write_json(&dir.join("summary.json"), spec, &out.summary)?;
    Ok(out)
}

/// Max-SINR run on one subcarrier of a drop, from the scheme's usual
/// initialization and with unquantized feedback.
pub fn convergence_trace(spec: &ExperimentSpec, drop: usize, scheme: Scheme, sc: usize) -> Result<MaxSinrOutput> {
    if !matches!(scheme, Scheme::Ia | Scheme::Comp) {
        return Err(Error::Config(format!("{scheme} has no iterative design")));
    }
    let rms = spec.rms_ds_list.first().copied().unwrap_or(0.0);
    let ch = drop_channels(spec, drop, rms);
    if sc >= ch.n_sc() {
        return Err(Error::Config(format!("subcarrier {sc} out of range")));
    }
    let big: Vec<CMat> = (0..N_MS).map(|k| exact_breve_channels(&[ch.big_h(k, sc)], 1, N_RX_ANT).remove(0)).collect();
    let init = if scheme == Scheme::Ia {
        let blocks: Vec<Vec<CMat>> = big.iter().map(|b| split_blocks(b, N_BS)).collect();
        ia_closed_form(&blocks).vectors
    } else {
        comp_init(&big).vectors
    };
    let init = power_normalize(&init, scheme)?;
    max_sinr(scheme, &init, &big, spec.scenario.sigma_nominal_sq, &MaxSinrOptions::from(&spec.beamforming))
}
