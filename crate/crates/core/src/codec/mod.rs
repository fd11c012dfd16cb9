//! Compressed CSI feedback over the concatenated ("big") channel matrix.
//!
//! A mobile takes the SVD `H_k = U S Vᴴ` of its 2×6 concatenated channel on
//! every reported subcarrier, compresses `V` into quantized φ/ψ angles, and
//! reports the singular values as SNRs relative to the nominal noise level.
//! The base stations rebuild `S V̂ᴴ`, which differs from `H_k` only by a
//! receive-side unitary and therefore carries everything the transmit side
//! needs.

pub mod angles;
pub mod golden;
pub mod pack;
pub mod snr;

use serde::{Deserialize, Serialize};

use crate::error::CodecError;
use crate::linalg::{svd, CMat, C64};

pub use angles::{compress_v, decompress_v, AngleEntry};
pub use snr::{quantize_snr, reconstruct_snr, SnrReport};

/// Granularities accepted for `n_g`.
pub const VALID_NG: [usize; 6] = [1, 2, 4, 8, 16, 38];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecParams {
    pub b_psi: u8,
    pub b_phi: u8,
    pub n_g: usize,
    pub ia_block_reduction: bool,
    /// Rows of V (transmit antennas over all BSs).
    pub m: usize,
    /// Columns of V (reported streams).
    pub n: usize,
    pub n_sc: usize,
}

impl Default for CodecParams {
    fn default() -> Self {
        Self { b_psi: 7, b_phi: 9, n_g: 1, ia_block_reduction: false, m: 6, n: 2, n_sc: 38 }
    }
}

impl CodecParams {
    pub fn validate(&self) -> Result<(), CodecError> {
        if !matches!((self.b_psi, self.b_phi), (5, 7) | (7, 9)) {
            return Err(CodecError::InvalidParams(format!(
                "(b_psi, b_phi) must be (5, 7) or (7, 9), got ({}, {})",
                self.b_psi, self.b_phi
            )));
        }
        if self.m < 2 || self.n < 1 || self.n > self.m {
            return Err(CodecError::InvalidParams(format!("need 1 <= n <= m and m >= 2, got m={} n={}", self.m, self.n)));
        }
        if !VALID_NG.contains(&self.n_g) {
            return Err(CodecError::InvalidParams(format!("n_g must be one of {VALID_NG:?}, got {}", self.n_g)));
        }
        if self.n_sc < 1 {
            return Err(CodecError::InvalidParams("n_sc must be >= 1".into()));
        }
        if self.ia_block_reduction && self.m != 6 {
            return Err(CodecError::InvalidParams(
                "IA block reduction needs three 2-row BS blocks (m = 6)".into(),
            ));
        }
        Ok(())
    }

    /// V bits for one reported subcarrier.
    pub fn v_bits_per_subcarrier(&self) -> usize {
        let pairs = ((2 * self.m - 1) * self.n - self.n * self.n) / 2;
        let full = pairs * (self.b_phi as usize + self.b_psi as usize);
        if self.ia_block_reduction {
            full - 2 * self.b_phi as usize
        } else {
            full
        }
    }
}

/// Subcarriers carrying V feedback (`0, n_g, 2n_g, …` plus the band edge) and
/// the subset carrying SNR feedback (every second V-reported subcarrier).
pub fn reported_subcarrier_indices(n_g: usize, n_sc: usize) -> (Vec<usize>, Vec<usize>) {
    let mut v: Vec<usize> = (0..n_sc).step_by(n_g.max(1)).collect();
    if *v.last().unwrap() != n_sc - 1 {
        v.push(n_sc - 1);
    }
    let snr = v.iter().step_by(2).copied().collect();
    (v, snr)
}

/// Exact length of the packed report in bits, before byte padding.
pub fn bit_count(params: &CodecParams) -> usize {
    let (v, snr) = reported_subcarrier_indices(params.n_g, params.n_sc);
    params.v_bits_per_subcarrier() * v.len()
        + params.n * snr::AVG_BITS
        + params.n * snr::DELTA_BITS * snr.len()
}

/// Singular values (descending) and the matching right singular vectors
/// (`cols × min(rows, cols)`) of a concatenated channel matrix.
pub fn svd_big_channel(big_h: &CMat) -> (Vec<f64>, CMat) {
    let d = svd(big_h);
    (d.s, d.v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiReport {
    pub params: CodecParams,
    /// One entry per V-reported subcarrier.
    pub angles: Vec<AngleEntry>,
    pub snr: SnrReport,
    pub packed: Vec<u8>,
}

impl CsiReport {
    pub fn from_parts(params: CodecParams, angles: Vec<AngleEntry>, snr: SnrReport) -> Result<Self, CodecError> {
        let packed = pack::pack(&params, &angles, &snr)?;
        Ok(Self { params, angles, snr, packed })
    }

    pub fn unpack(bytes: &[u8], params: CodecParams) -> Result<Self, CodecError> {
        let (angles, snr) = pack::unpack(bytes, &params)?;
        Ok(Self { params, angles, snr, packed: bytes.to_vec() })
    }

    pub fn v_indices(&self) -> Vec<usize> {
        reported_subcarrier_indices(self.params.n_g, self.params.n_sc).0
    }

    pub fn bit_len(&self) -> usize {
        bit_count(&self.params)
    }
}

fn snr_db_of(s: f64, sigma_nominal: f64) -> f64 {
    if s > 0.0 {
        20.0 * (s / sigma_nominal).log10()
    } else {
        snr::SNR_FLOOR_DB
    }
}

/// Builds the feedback report for one mobile from its concatenated channel on
/// every subcarrier (`big_h[s]` is `n × m`).
pub fn encode_report(big_h: &[CMat], sigma_nominal: f64, params: CodecParams) -> Result<CsiReport, CodecError> {
    params.validate()?;
    if big_h.len() != params.n_sc {
        return Err(CodecError::InvalidParams(format!("{} subcarriers, params expect {}", big_h.len(), params.n_sc)));
    }
    let (v_idx, snr_idx) = reported_subcarrier_indices(params.n_g, params.n_sc);
    let mut angles = Vec::with_capacity(v_idx.len());
    for &sc in &v_idx {
        let (_, v) = svd_big_channel(&big_h[sc]);
        angles.push(compress_v(&v.columns(0, params.n).into_owned(), &params)?);
    }
    let mut snr_db = vec![Vec::with_capacity(snr_idx.len()); params.n];
    for &sc in &snr_idx {
        let (s, _) = svd_big_channel(&big_h[sc]);
        for (stream, out) in snr_db.iter_mut().enumerate() {
            out.push(snr_db_of(s.get(stream).copied().unwrap_or(0.0), sigma_nominal));
        }
    }
    CsiReport::from_parts(params, angles, quantize_snr(&snr_db))
}

fn diag_times_adjoint(s: &[f64], v: &CMat) -> CMat {
    let mut out = v.adjoint();
    for (i, &si) in s.iter().enumerate() {
        out.row_mut(i).scale_mut(si);
    }
    out
}

/// Rebuilds `S V̂ᴴ` at every V-reported subcarrier, with
/// `s_i = σ_nominal·10^(snr_i/20)`.
pub fn reconstruct_channels(report: &CsiReport, sigma_nominal: f64) -> Result<Vec<CMat>, CodecError> {
    let (v_idx, snr_idx) = reported_subcarrier_indices(report.params.n_g, report.params.n_sc);
    let snr_db = reconstruct_snr(&report.snr, &snr_idx, &v_idx);
    report
        .angles
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            let vhat = decompress_v(entry, &report.params)?;
            let s: Vec<f64> = snr_db.iter().map(|stream| sigma_nominal * 10f64.powf(stream[i] / 20.0)).collect();
            Ok(diag_times_adjoint(&s, &vhat))
        })
        .collect()
}

/// Unquantized feedback: `S Vᴴ` from the exact SVD at every V-reported subcarrier.
pub fn exact_breve_channels(big_h: &[CMat], n_g: usize, n_streams: usize) -> Vec<CMat> {
    let (v_idx, _) = reported_subcarrier_indices(n_g, big_h.len());
    v_idx
        .iter()
        .map(|&sc| {
            let (s, v) = svd_big_channel(&big_h[sc]);
            diag_times_adjoint(&s[..n_streams], &v.columns(0, n_streams).into_owned())
        })
        .collect()
}

/// Relative Frobenius error `‖a − b‖ / ‖b‖`.
pub fn relative_error(a: &CMat, b: &CMat) -> f64 {
    let num: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(C64::norm_sqr).sum();
    (num / den).sqrt()
}
