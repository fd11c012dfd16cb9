//! Frequency-selective indoor channel generation and deployment presets.
//!
//! Each of the nine BS→MS links consists of four independent tapped-delay-line
//! Rayleigh channels (one per TX/RX antenna pair) with an exponential power
//! delay profile, evaluated on the OFDM subcarrier grid and scaled by the
//! link's large-scale path gain.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

pub const N_BS: usize = 3;
pub const N_MS: usize = 3;
pub const N_TX_ANT: usize = 2;
pub const N_RX_ANT: usize = 2;
pub const DEFAULT_N_SC: usize = 38;
pub const DEFAULT_SUBCARRIER_SPACING: f64 = 312.5e3;
pub const DEFAULT_TAP_SPACING: f64 = 50e-9;

/// Fraction of the profile's energy kept when truncating the tap vector.
const PDP_ENERGY_KEPT: f64 = 0.999;

/// Delay spreads swept by default, in seconds.
pub const RMS_DS_GRID: [f64; 5] = [0.0, 25e-9, 50e-9, 100e-9, 200e-9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_bs: usize,
    pub n_ms: usize,
    pub n_tx_ant: usize,
    pub n_rx_ant: usize,
    pub n_sc: usize,
    /// Hz.
    pub subcarrier_spacing: f64,
    /// Seconds.
    pub rms_delay_spread: f64,
    /// Seconds.
    pub tap_spacing: f64,
    /// Large-scale gain in dB, indexed `[ms][bs]`.
    pub path_gain_db: [[f64; N_BS]; N_MS],
    /// Linear receiver noise variance per antenna; transmit power per BS is 1.
    pub sigma_nominal_sq: f64,
    /// Transmit distortion relative to the received signal power, in dB.
    pub evm_db: Option<f64>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_bs: N_BS,
            n_ms: N_MS,
            n_tx_ant: N_TX_ANT,
            n_rx_ant: N_RX_ANT,
            n_sc: DEFAULT_N_SC,
            subcarrier_spacing: DEFAULT_SUBCARRIER_SPACING,
            rms_delay_spread: 50e-9,
            tap_spacing: DEFAULT_TAP_SPACING,
            path_gain_db: [[0.0; N_BS]; N_MS],
            sigma_nominal_sq: 1e-4,
            evm_db: None,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if (self.n_bs, self.n_ms, self.n_tx_ant, self.n_rx_ant) != (N_BS, N_MS, N_TX_ANT, N_RX_ANT) {
            return Err(Error::Config(format!(
                "only the 3-BS / 3-MS / 2×2 geometry is supported, got n_bs={} n_ms={} n_tx_ant={} n_rx_ant={}",
                self.n_bs, self.n_ms, self.n_tx_ant, self.n_rx_ant
            )));
        }
        if self.n_sc < 1 {
            return Err(Error::Config("n_sc must be at least 1".into()));
        }
        if !(self.rms_delay_spread >= 0.0) || !self.rms_delay_spread.is_finite() {
            return Err(Error::Config("rms_delay_spread must be finite and >= 0".into()));
        }
        if !(self.tap_spacing > 0.0) || !(self.subcarrier_spacing > 0.0) {
            return Err(Error::Config("tap_spacing and subcarrier_spacing must be > 0".into()));
        }
        if self.path_gain_db.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::Config("path_gain_db entries must be finite".into()));
        }
        if !(self.sigma_nominal_sq > 0.0) || !self.sigma_nominal_sq.is_finite() {
            return Err(Error::Config("sigma_nominal_sq must be > 0".into()));
        }
        if let Some(e) = self.evm_db {
            if !e.is_finite() {
                return Err(Error::Config("evm_db must be finite".into()));
            }
        }
        Ok(())
    }

    /// Per-antenna SNR of a unit-gain link, in dB.
    pub fn snr_db(&self) -> f64 {
        -10.0 * self.sigma_nominal_sq.log10()
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.sigma_nominal_sq = 10f64.powf(-snr_db / 10.0);
        self
    }
}

/// Per-subcarrier 2×2 channel blocks for every MS/BS pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `h[k][j][s]`: channel from BS `j` to MS `k` on subcarrier `s`
    /// (rows = MS antennas, columns = BS antennas).
    h: Vec<Vec<Vec<CMat>>>,
}

impl ChannelRealization {
    pub fn from_blocks(h: Vec<Vec<Vec<CMat>>>) -> Self {
        assert_eq!(h.len(), N_MS);
        let n_sc = h[0][0].len();
        for row in &h {
            assert_eq!(row.len(), N_BS);
            for link in row {
                assert_eq!(link.len(), n_sc);
                assert!(link.iter().all(|m| m.shape() == (N_RX_ANT, N_TX_ANT)));
            }
        }
        Self { h }
    }

    pub fn n_sc(&self) -> usize {
        self.h[0][0].len()
    }

    pub fn block(&self, ms: usize, bs: usize, sc: usize) -> &CMat {
        &self.h[ms][bs][sc]
    }

    /// The 2×6 concatenation `[H_{k,0}, H_{k,1}, H_{k,2}]` for subcarrier `sc`.
    pub fn big_h(&self, ms: usize, sc: usize) -> CMat {
        concat_blocks(&[self.block(ms, 0, sc), self.block(ms, 1, sc), self.block(ms, 2, sc)])
    }

    pub fn is_finite(&self) -> bool {
        self.h
            .iter()
            .flatten()
            .flatten()
            .flat_map(|m| m.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Column-wise concatenation of equally tall blocks.
pub fn concat_blocks(blocks: &[&CMat]) -> CMat {
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        out.view_mut((0, c0), (rows, b.ncols())).copy_from(*b);
        c0 += b.ncols();
    }
    out
}

/// Splits a concatenated matrix back into `n_blocks` equally wide blocks.
pub fn split_blocks(big: &CMat, n_blocks: usize) -> Vec<CMat> {
    let w = big.ncols() / n_blocks;
    (0..n_blocks).map(|j| big.columns(j * w, w).into_owned()).collect()
}

/// Number of taps retained for an exponential profile.
pub fn tap_count(rms_delay_spread: f64, tap_spacing: f64) -> usize {
    if rms_delay_spread <= 0.0 {
        return 1;
    }
    let ratio = (-tap_spacing / rms_delay_spread).exp();
    // Cumulative fraction of the infinite profile after L taps is 1 − ratio^L.
    let mut kept = 0.0;
    let mut weight = 1.0 - ratio;
    let mut n = 0;
    while kept < PDP_ENERGY_KEPT - 1e-12 {
        kept += weight;
        weight *= ratio;
        n += 1;
    }
    n
}

/// Normalized expected tap powers of the truncated exponential profile.
pub fn power_delay_profile(rms_delay_spread: f64, tap_spacing: f64) -> Vec<f64> {
    let n = tap_count(rms_delay_spread, tap_spacing);
    if n == 1 {
        return vec![1.0];
    }
    let raw: Vec<f64> = (0..n)
        .map(|l| (-(l as f64) * tap_spacing / rms_delay_spread).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Draws one tap vector with unit realized energy.
pub fn draw_taps<R: Rng + ?Sized>(rms_delay_spread: f64, tap_spacing: f64, rng: &mut R) -> Vec<C64> {
    let pdp = power_delay_profile(rms_delay_spread, tap_spacing);
    let mut taps: Vec<C64> = pdp
        .iter()
        .map(|&p| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im) * (p / 2.0).sqrt()
        })
        .collect();
    let energy: f64 = taps.iter().map(|g| g.norm_sqr()).sum();
    if energy > 0.0 {
        let k = energy.sqrt();
        taps.iter_mut().for_each(|g| *g /= k);
    } else {
        taps[0] = C64::new(1.0, 0.0);
    }
    taps
}

/// Frequency response `H(f_s) = Σ_l g_l·exp(−j2π·f_s·l·Δ)` with `f_s = s·spacing`.
pub fn taps_to_subcarriers(taps: &[C64], tap_spacing: f64, n_sc: usize, spacing: f64) -> Vec<C64> {
    (0..n_sc)
        .map(|s| {
            let f = s as f64 * spacing;
            taps.iter()
                .enumerate()
                .map(|(l, g)| g * C64::from_polar(1.0, -2.0 * PI * f * l as f64 * tap_spacing))
                .sum()
        })
        .collect()
}

/// Generates a channel realization from the config's own seed.
pub fn generate_channels(config: &ScenarioConfig) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    generate_channels_with(config, &mut rng)
}

/// Generates a channel realization drawing from the supplied RNG stream.
pub fn generate_channels_with<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> ChannelRealization {
    let mut h = Vec::with_capacity(N_MS);
    for k in 0..N_MS {
        let mut row = Vec::with_capacity(N_BS);
        for j in 0..N_BS {
            let amp = 10f64.powf(config.path_gain_db[k][j] / 20.0);
            let mut link = vec![CMat::zeros(N_RX_ANT, N_TX_ANT); config.n_sc];
            for a in 0..N_RX_ANT {
                for b in 0..N_TX_ANT {
                    let taps = draw_taps(config.rms_delay_spread, config.tap_spacing, rng);
                    let resp =
                        taps_to_subcarriers(&taps, config.tap_spacing, config.n_sc, config.subcarrier_spacing);
                    for (s, v) in resp.into_iter().enumerate() {
                        link[s][(a, b)] = v * amp;
                    }
                }
            }
            row.push(link);
        }
        h.push(row);
    }
    ChannelRealization { h }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent RNG stream keyed by a base seed and a path of indices
/// (drop number, purpose tag, ...). Identical keys give identical streams.
pub fn derive_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = mix64(seed);
    for &p in path {
        state = mix64(state ^ mix64(p.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    ChaCha8Rng::seed_from_u64(state)
}

/// Deployment preset controlling the interferer C/I statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Corridor-like: one dominant interferer, strongly asymmetric C/I.
    Los,
    /// Between rooms: symmetric and higher C/I.
    Nlos,
    /// Fair coin between `Los` and `Nlos` for every drop.
    Mixed,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "los" => Ok(Preset::Los),
            "nlos" => Ok(Preset::Nlos),
            "mixed" => Ok(Preset::Mixed),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Preset::Los => "los",
            Preset::Nlos => "nlos",
            Preset::Mixed => "mixed",
        })
    }
}

/// Interferer C/I distributions, all in dB.
///
/// The default LoS lower-C/I range is placed so that an even LoS/NLoS
/// mixture has a grand mean C/I of 3.2 dB (see
/// [`PresetParams::mixture_mean_ci_db`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PresetParams {
    /// Uniform range of the weaker interferer's C/I in LoS.
    pub los_ci_min_db: (f64, f64),
    /// Uniform range of `C/I_max − C/I_min` in LoS.
    pub los_ci_spread_db: (f64, f64),
    /// Uniform range of each interferer's C/I in NLoS.
    pub nlos_ci_db: (f64, f64),
}

impl Default for PresetParams {
    fn default() -> Self {
        Self {
            los_ci_min_db: (-10.85, -0.85),
            los_ci_spread_db: (5.0, 20.0),
            nlos_ci_db: (0.0, 12.0),
        }
    }
}

fn mid(r: (f64, f64)) -> f64 {
    0.5 * (r.0 + r.1)
}

impl PresetParams {
    /// Expected per-interferer C/I in dB for a single preset.
    pub fn mean_ci_db(&self, preset: Preset) -> f64 {
        match preset {
            Preset::Los => mid(self.los_ci_min_db) + 0.5 * mid(self.los_ci_spread_db),
            Preset::Nlos => mid(self.nlos_ci_db),
            Preset::Mixed => self.mixture_mean_ci_db(),
        }
    }

    /// Expected per-interferer C/I in dB for the even LoS/NLoS mixture.
    pub fn mixture_mean_ci_db(&self) -> f64 {
        0.5 * (self.mean_ci_db(Preset::Los) + self.mean_ci_db(Preset::Nlos))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("los_ci_min_db", self.los_ci_min_db),
            ("los_ci_spread_db", self.los_ci_spread_db),
            ("nlos_ci_db", self.nlos_ci_db),
        ] {
            if !(r.0.is_finite() && r.1.is_finite() && r.0 <= r.1) {
                return Err(Error::Config(format!("{name}: expected finite lo <= hi, got {r:?}")));
            }
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, r: (f64, f64)) -> f64 {
    r.0 + (r.1 - r.0) * rng.random::<f64>()
}

/// Draws a 3×3 path-gain matrix in dB: direct links at 0 dB, interferers at
/// `−C/I` drawn according to the preset.
pub fn preset_scenario<R: Rng + ?Sized>(
    preset: Preset,
    params: &PresetParams,
    rng: &mut R,
) -> [[f64; N_BS]; N_MS] {
    let preset = match preset {
        Preset::Mixed => {
            if rng.random::<bool>() {
                Preset::Los
            } else {
                Preset::Nlos
            }
        }
        p => p,
    };
    let mut g = [[0.0; N_BS]; N_MS];
    for (k, row) in g.iter_mut().enumerate() {
        let (ci_a, ci_b) = match preset {
            Preset::Los => {
                let lo = uniform(rng, params.los_ci_min_db);
                let hi = lo + uniform(rng, params.los_ci_spread_db);
                // Which of the two interferers is the dominant one.
                if rng.random::<bool>() {
                    (lo, hi)
                } else {
                    (hi, lo)
                }
            }
            Preset::Nlos => (uniform(rng, params.nlos_ci_db), uniform(rng, params.nlos_ci_db)),
            Preset::Mixed => unreachable!(),
        };
        let interferers: Vec<usize> = (0..N_BS).filter(|&j| j != k).collect();
        row[interferers[0]] = -ci_a;
        row[interferers[1]] = -ci_b;
    }
    g
}

/// Per-MS interferer C/I values (dB) implied by a path-gain matrix, sorted
/// ascending: `(C/I_min, C/I_max)`.
pub fn ci_pair_db(path_gain_db: &[[f64; N_BS]; N_MS], ms: usize) -> (f64, f64) {
    let direct = path_gain_db[ms][ms];
    let mut ci: Vec<f64> = (0..N_BS).filter(|&j| j != ms).map(|j| direct - path_gain_db[ms][j]).collect();
    ci.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (ci[0], ci[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_delay_spread_gives_single_unit_tap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let taps = draw_taps(0.0, DEFAULT_TAP_SPACING, &mut rng);
        assert_eq!(taps.len(), 1);
        assert!((taps[0].norm() - 1.0).abs() < 1e-12);
        let resp = taps_to_subcarriers(&taps, DEFAULT_TAP_SPACING, 38, DEFAULT_SUBCARRIER_SPACING);
        assert!(resp.iter().all(|z| (z - resp[0]).norm() < 1e-15));
    }

    #[test]
    fn realized_tap_energy_is_exactly_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for &ds in RMS_DS_GRID.iter() {
            for _ in 0..200 {
                let taps = draw_taps(ds, DEFAULT_TAP_SPACING, &mut rng);
                let e: f64 = taps.iter().map(|g| g.norm_sqr()).sum();
                assert!((e - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tap_count_follows_truncation_rule() {
        assert_eq!(tap_count(0.0, 50e-9), 1);
        // 1 − exp(−L/2) ≥ 0.999 first holds at L = 14.
        assert_eq!(tap_count(100e-9, 50e-9), 14);
        let pdp = power_delay_profile(100e-9, 50e-9);
        assert!((pdp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(pdp.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn single_unit_tap_is_all_ones() {
        let resp = taps_to_subcarriers(&[C64::new(1.0, 0.0)], 50e-9, 38, 312.5e3);
        assert!(resp.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn two_equal_taps_ripple_with_expected_period() {
        // |1 + e^{−j2πfΔ}|² = 2 + 2cos(2πfΔ): period 1/Δ.
        let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let spacing = 1e6;
        let delta = 1e-7; // period 10 MHz = 10 subcarriers
        let resp = taps_to_subcarriers(&[a, a], delta, 25, spacing);
        for s in 0..15 {
            assert!((resp[s].norm() - resp[s + 10].norm()).abs() < 1e-12);
            let expected = (1.0 + (2.0 * PI * s as f64 * spacing * delta).cos()).sqrt();
            assert!((resp[s].norm() - expected).abs() < 1e-12);
        }
        assert!(resp[5].norm() < 1e-12);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = ScenarioConfig { seed: 99, rms_delay_spread: 100e-9, ..Default::default() };
        assert_eq!(generate_channels(&cfg), generate_channels(&cfg));
        let other = ScenarioConfig { seed: 100, ..cfg.clone() };
        assert_ne!(generate_channels(&cfg), generate_channels(&other));
    }

    #[test]
    fn big_h_is_block_concatenation() {
        let cfg = ScenarioConfig { seed: 3, ..Default::default() };
        let ch = generate_channels(&cfg);
        let big = ch.big_h(1, 7);
        for j in 0..N_BS {
            assert_eq!(big.columns(2 * j, 2).into_owned(), *ch.block(1, j, 7));
        }
        let parts = split_blocks(&big, 3);
        assert_eq!(parts[2], *ch.block(1, 2, 7));
    }

    #[test]
    fn los_draws_are_asymmetric() {
        let params = PresetParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..2000 {
            let g = preset_scenario(Preset::Los, &params, &mut rng);
            for k in 0..N_MS {
                assert_eq!(g[k][k], 0.0);
                let (lo, hi) = ci_pair_db(&g, k);
                assert!(hi - lo >= 5.0 - 1e-12);
            }
        }
    }

    #[test]
    fn mixture_mean_is_calibrated() {
        let params = PresetParams::default();
        assert!((params.mean_ci_db(Preset::Nlos) - 6.0).abs() < 1e-12);
        assert!((params.mixture_mean_ci_db() - 3.2).abs() < 1e-12);
    }

    #[test]
    fn unknown_preset_is_rejected() {
        assert!(matches!("indoor".parse::<Preset>(), Err(Error::UnknownPreset(_))));
        assert_eq!("NLoS".parse::<Preset>().unwrap(), Preset::Nlos);
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::default().validate().is_ok());
        let bad = ScenarioConfig { sigma_nominal_sq: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ScenarioConfig { n_sc: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ScenarioConfig { n_bs: 4, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!((ScenarioConfig::default().with_snr_db(40.0).sigma_nominal_sq - 1e-4).abs() < 1e-18);
    }
}
