//! Transmit precoder design for the five compared schemes.
//!
//! Precoders are designed from the channels rebuilt out of the CSI feedback,
//! only on the subcarriers that carry V feedback, and then copied to the
//! remaining subcarriers from the nearest reported one.

pub mod comp;
pub mod eigen;
pub mod ia;
pub mod max_sinr;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frob_sq, normalized, vec_norm_sq, CMat, CVec};
use crate::scenario::{split_blocks, N_BS, N_MS, N_TX_ANT};

pub use comp::comp_init;
pub use eigen::eigen_precoder;
pub use ia::ia_closed_form;
pub use max_sinr::{max_sinr, MaxSinrOptions, MaxSinrOutput};

/// Per-BS transmit power budget.
pub const P_BS: f64 = 1.0;

/// Regularization weight of the max-SINR noise term.
pub const DEFAULT_MU: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Ia,
    Comp,
    TdmaMimo,
    FrMimo,
    FrSimo,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Ia, Scheme::Comp, Scheme::TdmaMimo, Scheme::FrMimo, Scheme::FrSimo];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ia => "ia",
            Scheme::Comp => "comp",
            Scheme::TdmaMimo => "tdma_mimo",
            Scheme::FrMimo => "fr_mimo",
            Scheme::FrSimo => "fr_simo",
        }
    }

    /// Streams carried by the scheme, in canonical order.
    pub fn streams(self) -> Vec<StreamDef> {
        match self {
            Scheme::Ia | Scheme::FrSimo => {
                (0..N_BS).map(|j| StreamDef { rx: j, tx: TxSupport::Bs(j), slot: None }).collect()
            }
            Scheme::Comp => (0..N_MS).map(|k| StreamDef { rx: k, tx: TxSupport::Joint, slot: None }).collect(),
            Scheme::TdmaMimo | Scheme::FrMimo => (0..N_BS)
                .flat_map(|j| {
                    let slot = (self == Scheme::TdmaMimo).then_some(j);
                    [StreamDef { rx: j, tx: TxSupport::Bs(j), slot }; 2]
                })
                .collect(),
        }
    }

    /// Fraction of time each stream is on the air.
    pub fn duty_factor(self) -> f64 {
        match self {
            Scheme::TdmaMimo => 1.0 / N_BS as f64,
            _ => 1.0,
        }
    }

    /// Whether the scheme's feedback uses the IA block-phase bit saving.
    pub fn uses_ia_reduction(self) -> bool {
        self == Scheme::Ia
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

/// Which transmit antennas a stream's precoder spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxSupport {
    Bs(usize),
    Joint,
}

impl TxSupport {
    /// Columns of the concatenated channel this support covers.
    pub fn cols(self) -> Range<usize> {
        match self {
            TxSupport::Bs(j) => j * N_TX_ANT..(j + 1) * N_TX_ANT,
            TxSupport::Joint => 0..N_BS * N_TX_ANT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamDef {
    /// Serving MS.
    pub rx: usize,
    pub tx: TxSupport,
    /// TDMA slot in which the stream is active; `None` means always on.
    pub slot: Option<usize>,
}

/// Transmit vectors with power folded in, for every subcarrier and stream.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub scheme: Scheme,
    pub streams: Vec<StreamDef>,
    /// `vectors[sc][stream]`.
    pub vectors: Vec<Vec<CVec>>,
    /// Set when any reported subcarrier fell back to a simpler design.
    pub fallback: bool,
}

impl PrecoderSet {
    pub fn n_sc(&self) -> usize {
        self.vectors.len()
    }

    /// Per-stream transmit powers on subcarrier `sc`.
    pub fn power_alloc(&self, sc: usize) -> Vec<f64> {
        self.vectors[sc].iter().map(vec_norm_sq).collect()
    }

    /// Power radiated by BS `bs` on subcarrier `sc` while `slot` is on the air.
    pub fn bs_power(&self, sc: usize, bs: usize, slot: Option<usize>) -> f64 {
        bs_power(&self.streams, &self.vectors[sc], bs, slot)
    }
}

fn bs_power(streams: &[StreamDef], vectors: &[CVec], bs: usize, slot: Option<usize>) -> f64 {
    streams
        .iter()
        .zip(vectors)
        .filter(|(s, _)| s.slot.is_none() || slot.is_none() || s.slot == slot)
        .map(|(s, v)| match s.tx {
            TxSupport::Bs(j) if j == bs => vec_norm_sq(v),
            TxSupport::Bs(_) => 0.0,
            TxSupport::Joint => {
                let r = TxSupport::Bs(bs).cols();
                v.rows(r.start, r.len()).iter().map(|z| z.norm_sqr()).sum()
            }
        })
        .sum()
}

/// Scales precoders to the per-BS power budget.
///
/// Single-stream-per-BS schemes get unit-norm vectors; two-stream schemes
/// split the budget equally (norm `1/√2` each); CoMP is scaled globally so
/// the most loaded BS transmits exactly `P_BS`.
pub fn power_normalize(vectors: &[CVec], scheme: Scheme) -> Result<Vec<CVec>> {
    let streams = scheme.streams();
    if vectors.len() != streams.len() {
        return Err(Error::Beamforming(format!(
            "{} precoders for {} streams of {scheme}",
            vectors.len(),
            streams.len()
        )));
    }
    let zero = || Error::Beamforming(format!("{scheme}: all-zero or non-finite precoder"));
    match scheme {
        Scheme::Ia | Scheme::FrSimo => vectors.iter().map(|v| normalized(v).ok_or_else(zero)).collect(),
        Scheme::TdmaMimo | Scheme::FrMimo => {
            let share = (P_BS / 2.0).sqrt();
            vectors.iter().map(|v| normalized(v).map(|u| u.scale(share)).ok_or_else(zero)).collect()
        }
        Scheme::Comp => {
            let max_load = (0..N_BS).map(|j| bs_power(&streams, vectors, j, None)).fold(0.0, f64::max);
            if !(max_load > 0.0) || !max_load.is_finite() {
                return Err(zero());
            }
            let g = (P_BS / max_load).sqrt();
            Ok(vectors.iter().map(|v| v.scale(g)).collect())
        }
    }
}

/// For every subcarrier, the position in `v_indices` of the nearest reported
/// subcarrier (ties go to the lower index).
pub fn nearest_reported(v_indices: &[usize], n_sc: usize) -> Vec<usize> {
    (0..n_sc)
        .map(|s| {
            let mut best = 0;
            for (i, &v) in v_indices.iter().enumerate() {
                if s.abs_diff(v) < s.abs_diff(v_indices[best]) {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Expands precoders designed at the reported subcarriers to all `n_sc`.
pub fn assign_precoders_to_subcarriers(
    scheme: Scheme,
    at_reported: &[Vec<CVec>],
    v_indices: &[usize],
    n_sc: usize,
    fallback: bool,
) -> PrecoderSet {
    assert_eq!(at_reported.len(), v_indices.len());
    let map = nearest_reported(v_indices, n_sc);
    PrecoderSet {
        scheme,
        streams: scheme.streams(),
        vectors: map.into_iter().map(|i| at_reported[i].clone()).collect(),
        fallback,
    }
}

/// Effective noise variance used when designing filters for MS `k`:
/// `σ²_nominal + μ·Σ_j ‖H_{k,j}‖²_F`.
pub fn regularized_noise(blocks: &[CMat], sigma_nominal_sq: f64, mu: f64) -> f64 {
    sigma_nominal_sq + mu * blocks.iter().map(frob_sq).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamformingOptions {
    pub mu: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Skip the iterative refinement and use the initializations directly.
    pub skip_refinement: bool,
}

impl Default for BeamformingOptions {
    fn default() -> Self {
        Self { mu: DEFAULT_MU, max_iters: 50, tol: 1e-6, skip_refinement: false }
    }
}

/// Precoders at the reported subcarriers for one scheme.
#[derive(Debug, Clone)]
pub struct Design {
    /// `vectors[pos][stream]` for each reported subcarrier position.
    pub vectors: Vec<Vec<CVec>>,
    pub fallback: bool,
}

/// Designs the scheme's precoders on every reported subcarrier.
///
/// `breve[k][pos]` is the rebuilt 2×6 channel of MS `k` at reported position `pos`.
pub fn design(scheme: Scheme, breve: &[Vec<CMat>], sigma_nominal_sq: f64, opts: &BeamformingOptions) -> Result<Design> {
    let n_pos = breve[0].len();
    let mut vectors = Vec::with_capacity(n_pos);
    let mut fallback = false;
    for pos in 0..n_pos {
        let big: Vec<CMat> = (0..N_MS).map(|k| breve[k][pos].clone()).collect();
        let (v, fb) = design_one(scheme, &big, sigma_nominal_sq, opts)?;
        fallback |= fb;
        vectors.push(v);
    }
    Ok(Design { vectors, fallback })
}

/// Precoders for a single subcarrier given every MS's concatenated channel.
pub fn design_one(
    scheme: Scheme,
    big: &[CMat],
    sigma_nominal_sq: f64,
    opts: &BeamformingOptions,
) -> Result<(Vec<CVec>, bool)> {
    let blocks: Vec<Vec<CMat>> = big.iter().map(|b| split_blocks(b, N_BS)).collect();
    match scheme {
        Scheme::Ia | Scheme::Comp => {
            let (init, fallback) = if scheme == Scheme::Ia {
                let r = ia_closed_form(&blocks);
                (r.vectors, r.fallback)
            } else {
                let r = comp_init(big);
                (r.vectors, r.regularized)
            };
            let init = power_normalize(&init, scheme)?;
            if opts.skip_refinement {
                return Ok((init, fallback));
            }
            let out = max_sinr(scheme, &init, big, sigma_nominal_sq, &MaxSinrOptions::from(opts))?;
            Ok((out.tx, fallback))
        }
        Scheme::TdmaMimo | Scheme::FrMimo | Scheme::FrSimo => {
            let n = if scheme == Scheme::FrSimo { 1 } else { 2 };
            let mut v = Vec::new();
            let mut flagged = false;
            for j in 0..N_BS {
                let e = eigen_precoder(&blocks[j][j], n);
                flagged |= e.rank_deficient;
                v.extend(e.vectors);
            }
            Ok((power_normalize(&v, scheme)?, flagged))
        }
    }
}
