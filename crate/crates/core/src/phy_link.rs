//! Link evaluation under the true channels: effective channels, pilot-based
//! channel estimates, MMSE combining and post-combining SINR.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::beamforming::{PrecoderSet, StreamDef};
use crate::linalg::{hpd_solve, inner, vec_norm_sq, CMat, CVec, C64};
use crate::scenario::{ChannelRealization, N_MS};

/// Receive combiner used at the mobiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    /// `R⁻¹ĥ` with the structured covariance `R = Σ ĥĥᴴ + σ²I`.
    #[default]
    Mmse,
    /// Projection of `ĥ` onto the orthogonal complement of the interferers.
    Zf,
}

/// Post-combining SINR, `sinr[stream][sc]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrMap {
    pub sinr: Vec<Vec<f64>>,
}

impl SinrMap {
    pub fn stream(&self, i: usize) -> &[f64] {
        &self.sinr[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkOptions {
    pub sigma_nominal_sq: f64,
    pub evm_db: Option<f64>,
    /// Skip pilot estimation noise.
    pub noiseless_pilots: bool,
    pub combiner: Combiner,
}

/// Received vectors `H_{k,support}·w` of the listed streams at MS `k`.
pub fn effective_channels(big_h_k: &CMat, streams: &[StreamDef], tx: &[CVec], active: &[usize]) -> Vec<CVec> {
    active
        .iter()
        .map(|&l| {
            let cols = streams[l].tx.cols();
            big_h_k.columns(cols.start, cols.len()) * &tx[l]
        })
        .collect()
}

fn cn<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// One-symbol pilot estimate of every effective vector: truth plus
/// `CN(0, σ²)` per receive antenna.
pub fn pilot_estimate<R: Rng + ?Sized>(eff: &[CVec], sigma_nominal_sq: f64, rng: &mut R, noiseless: bool) -> Vec<CVec> {
    eff.iter()
        .map(|h| {
            if noiseless {
                h.clone()
            } else {
                h.map(|z| z + cn(rng, sigma_nominal_sq))
            }
        })
        .collect()
}

/// `u = R⁻¹ĥ_d` with `R = Σ_l ĥ_l ĥ_lᴴ + σ²I` over every stream estimate.
pub fn mmse_combiner(est: &[CVec], desired: usize, sigma_nominal_sq: f64) -> CVec {
    let n = est[desired].len();
    let mut r = CMat::identity(n, n).scale(sigma_nominal_sq);
    for h in est {
        r += h * h.adjoint();
    }
    hpd_solve(&r, &est[desired]).unwrap_or_else(|| est[desired].clone())
}

/// Desired estimate with the span of the other estimates projected out.
pub fn zf_combiner(est: &[CVec], desired: usize) -> CVec {
    let mut basis: Vec<CVec> = Vec::new();
    for (l, h) in est.iter().enumerate() {
        if l == desired {
            continue;
        }
        let mut r = h.clone();
        for b in &basis {
            r -= b * inner(b, &r);
        }
        let nr = r.norm();
        if nr > 1e-12 * h.norm().max(f64::MIN_POSITIVE) {
            basis.push(r / C64::new(nr, 0.0));
        }
    }
    let mut u = est[desired].clone();
    for b in &basis {
        u -= b * inner(b, &u);
    }
    u
}

/// Distortion variance at a receiver: `10^(evm/10)` times the total
/// received signal power, summed over its antennas.
pub fn distortion_noise(evm_db: Option<f64>, eff: &[CVec]) -> f64 {
    match evm_db {
        None => 0.0,
        Some(e) => 10f64.powf(e / 10.0) * eff.iter().map(vec_norm_sq).sum::<f64>(),
    }
}

/// `|uᴴh_d|² / (Σ_{i≠d} |uᴴh_i|² + (σ² + distortion)‖u‖²)`.
pub fn post_sinr(u: &CVec, eff: &[CVec], desired: usize, sigma_nominal_sq: f64, distortion: f64) -> f64 {
    let sig = inner(u, &eff[desired]).norm_sqr();
    let interf: f64 = eff
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != desired)
        .map(|(_, h)| inner(u, h).norm_sqr())
        .sum();
    let den = interf + (sigma_nominal_sq + distortion) * vec_norm_sq(u);
    if den > 0.0 {
        sig / den
    } else if sig > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Slots to evaluate: every distinct TDMA slot, or a single always-on slot.
fn slots(streams: &[StreamDef]) -> Vec<Option<usize>> {
    let mut s: Vec<Option<usize>> = streams.iter().map(|d| d.slot).collect();
    s.sort();
    s.dedup();
    s
}

/// SINR of every stream on every subcarrier of `ch`.
pub fn evaluate<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    precoders: &PrecoderSet,
    opts: &LinkOptions,
    rng: &mut R,
) -> SinrMap {
    let streams = &precoders.streams;
    let n_sc = ch.n_sc();
    let mut sinr = vec![vec![0.0; n_sc]; streams.len()];
    for slot in slots(streams) {
        let active: Vec<usize> = (0..streams.len()).filter(|&l| streams[l].slot == slot).collect();
        for sc in 0..n_sc {
            let tx = &precoders.vectors[sc];
            for k in 0..N_MS {
                let mine: Vec<usize> = (0..active.len()).filter(|&a| streams[active[a]].rx == k).collect();
                if mine.is_empty() {
                    continue;
                }
                let eff = effective_channels(&ch.big_h(k, sc), streams, tx, &active);
                let est = pilot_estimate(&eff, opts.sigma_nominal_sq, rng, opts.noiseless_pilots);
                let dist = distortion_noise(opts.evm_db, &eff);
                for a in mine {
                    let u = match opts.combiner {
                        Combiner::Mmse => mmse_combiner(&est, a, opts.sigma_nominal_sq),
                        Combiner::Zf => zf_combiner(&est, a),
                    };
                    let s = post_sinr(&u, &eff, a, opts.sigma_nominal_sq, dist);
                    sinr[active[a]][sc] = if s.is_finite() { s } else { f64::MAX };
                }
            }
        }
    }
    SinrMap { sinr }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(x: &[(f64, f64)]) -> CVec {
        CVec::from_iterator(x.len(), x.iter().map(|&(r, i)| C64::new(r, i)))
    }

    #[test]
    fn orthogonal_combiner_unit_sinr() {
        let eff = vec![cv(&[(1.0, 0.0), (0.0, 0.0)]), cv(&[(0.0, 0.0), (3.0, 1.0)])];
        let u = cv(&[(1.0, 0.0), (0.0, 0.0)]);
        assert_eq!(post_sinr(&u, &eff, 0, 1.0, 0.0), 1.0);
    }

    #[test]
    fn distortion_definition() {
        let eff = vec![cv(&[(1.0, 0.0), (0.0, 0.0)])];
        assert_eq!(distortion_noise(None, &eff), 0.0);
        assert!((distortion_noise(Some(-30.0), &eff) - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn zf_nulls_interferer() {
        let eff = vec![cv(&[(1.0, 0.5), (0.2, -1.0)]), cv(&[(0.3, 0.0), (1.0, 1.0)])];
        let u = zf_combiner(&eff, 0);
        assert!(inner(&u, &eff[1]).norm() < 1e-14);
        assert!(inner(&u, &eff[0]).norm() > 0.1);
    }

    #[test]
    fn noiseless_estimate_is_exact() {
        let eff = vec![cv(&[(1.0, 2.0), (3.0, 4.0)])];
        let mut rng = crate::scenario::derive_rng(1, &[]);
        assert_eq!(pilot_estimate(&eff, 1.0, &mut rng, true), eff);
    }
}
