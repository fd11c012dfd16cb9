//! Alternating max-SINR filter optimization.
//!
//! Each iteration computes the MMSE (SINR-maximizing) receive filter of every
//! stream under the current transmit filters, then does the same in the
//! reciprocal network (channels conjugate-transposed, receivers transmitting
//! with their filters) to update the transmit filters, which are then put
//! back on the per-BS power budget.

use crate::error::{Error, Result};
use crate::linalg::{chordal_distance, hpd_solve, inner, normalized, CMat, CVec, C64};
use crate::scenario::{split_blocks, N_TX_ANT};

use super::{regularized_noise, BeamformingOptions, Scheme, StreamDef, TxSupport, P_BS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxSinrOptions {
    pub mu: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for MaxSinrOptions {
    fn default() -> Self {
        BeamformingOptions::default().into()
    }
}

impl From<&BeamformingOptions> for MaxSinrOptions {
    fn from(o: &BeamformingOptions) -> Self {
        Self { mu: o.mu, max_iters: o.max_iters, tol: o.tol }
    }
}

impl From<BeamformingOptions> for MaxSinrOptions {
    fn from(o: BeamformingOptions) -> Self {
        (&o).into()
    }
}

/// How transmit filters are put back on the power budget after each update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerRule {
    /// Every stream's filter has unit norm.
    UnitPerStream,
    /// Unit-norm directions, then one global scale so the most loaded BS
    /// radiates exactly `P_BS`.
    MaxLoadedBs,
}

/// A set of streams over a shared channel, as seen by the filter optimizer.
#[derive(Debug, Clone)]
pub struct Network {
    pub streams: Vec<StreamDef>,
    /// Concatenated channel per MS (`n_rx × n_tx_total`).
    pub big: Vec<CMat>,
    /// Noise variance per MS used in the forward direction.
    pub sigma_sq: Vec<f64>,
    /// Noise variance per transmit antenna used in the reverse direction.
    pub rev_sigma_sq: Vec<f64>,
    pub power: PowerRule,
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Total interference power after the unit-norm receive filters.
    pub leakage: f64,
    /// Predicted SINR per stream.
    pub sinr: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MaxSinrOutput {
    /// Transmit filters with power folded in.
    pub tx: Vec<CVec>,
    /// Unit-norm MMSE receive filters matching `tx`.
    pub rx: Vec<CVec>,
    pub sinr: Vec<f64>,
    /// Number of reverse (transmit) updates performed.
    pub iterations: usize,
    pub converged: bool,
    /// `trace[t]` describes the filters after `t` updates; the last entry is the output.
    pub trace: Vec<IterationRecord>,
}

impl MaxSinrOutput {
    pub fn sum_rate(&self) -> f64 {
        sum_rate(&self.sinr)
    }
}

pub fn sum_rate(sinr: &[f64]) -> f64 {
    sinr.iter().map(|&s| (1.0 + s).log2()).sum()
}

fn all_finite(v: &CVec) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

impl Network {
    /// Network for a coordinated scheme on the rebuilt channels, with the
    /// regularized noise in both directions.
    pub fn for_scheme(scheme: Scheme, big: &[CMat], sigma_nominal_sq: f64, mu: f64) -> Self {
        let n_tx = big[0].ncols();
        let sigma_sq = big
            .iter()
            .map(|b| regularized_noise(&split_blocks(b, n_tx / N_TX_ANT), sigma_nominal_sq, mu))
            .collect();
        // Reverse direction: each BS's receive-side load comes from the
        // columns it owns across all MSs.
        let rev_sigma_sq = (0..n_tx)
            .map(|col| {
                let bs = col / N_TX_ANT;
                let load: f64 = big
                    .iter()
                    .map(|b| b.columns(bs * N_TX_ANT, N_TX_ANT).iter().map(|z| z.norm_sqr()).sum::<f64>())
                    .sum();
                sigma_nominal_sq + mu * load
            })
            .collect();
        let power = if scheme == Scheme::Comp { PowerRule::MaxLoadedBs } else { PowerRule::UnitPerStream };
        Self { streams: scheme.streams(), big: big.to_vec(), sigma_sq, rev_sigma_sq, power }
    }

    fn chan(&self, ms: usize, stream: usize) -> CMat {
        let cols = self.streams[stream].tx.cols();
        let cols = match self.streams[stream].tx {
            TxSupport::Joint => 0..self.big[ms].ncols(),
            TxSupport::Bs(_) => cols,
        };
        self.big[ms].columns(cols.start, cols.len()).into_owned()
    }

    fn apply_power(&self, dirs: Vec<CVec>) -> Result<Vec<CVec>> {
        let unit: Vec<CVec> = dirs
            .iter()
            .map(|v| normalized(v).ok_or_else(|| Error::Beamforming("max-SINR produced a zero transmit filter".into())))
            .collect::<Result<_>>()?;
        match self.power {
            PowerRule::UnitPerStream => Ok(unit),
            PowerRule::MaxLoadedBs => {
                let n_tx = unit[0].len();
                let mut load = vec![0.0; n_tx / N_TX_ANT];
                for v in &unit {
                    for (i, z) in v.iter().enumerate() {
                        load[i / N_TX_ANT] += z.norm_sqr();
                    }
                }
                let max = load.iter().cloned().fold(0.0, f64::max);
                let g = (P_BS / max).sqrt();
                Ok(unit.into_iter().map(|v| v.scale(g)).collect())
            }
        }
    }

    fn within_power(&self, tx: &[CVec]) -> bool {
        const SLACK: f64 = 1e-9;
        match self.power {
            PowerRule::UnitPerStream => tx.iter().all(|v| v.norm_squared() <= 1.0 + SLACK),
            PowerRule::MaxLoadedBs => {
                let mut load = vec![0.0; tx[0].len() / N_TX_ANT];
                for v in tx {
                    for (i, z) in v.iter().enumerate() {
                        load[i / N_TX_ANT] += z.norm_sqr();
                    }
                }
                load.iter().all(|&l| l <= P_BS + SLACK)
            }
        }
    }

    /// MMSE receive filters (unit norm), predicted SINRs and leakage.
    pub fn forward(&self, tx: &[CVec]) -> Result<(Vec<CVec>, Vec<f64>, f64)> {
        let n = self.streams.len();
        let mut rx = Vec::with_capacity(n);
        let mut sinr = Vec::with_capacity(n);
        let mut leakage = 0.0;
        for i in 0..n {
            let k = self.streams[i].rx;
            let eff: Vec<CVec> = (0..n).map(|l| self.chan(k, l) * &tx[l]).collect();
            let n_rx = eff[i].len();
            let mut b = CMat::identity(n_rx, n_rx).scale(self.sigma_sq[k]).map(|z| z);
            for (l, c) in eff.iter().enumerate() {
                if l != i {
                    b += c * c.adjoint();
                }
            }
            let x = hpd_solve(&b, &eff[i])
                .filter(all_finite)
                .ok_or_else(|| Error::Beamforming(format!("max-SINR: singular covariance for stream {i}")))?;
            let s = inner(&eff[i], &x).re.max(0.0);
            let u = normalized(&x).unwrap_or_else(|| {
                let mut e = CVec::zeros(n_rx);
                e[0] = C64::new(1.0, 0.0);
                e
            });
            for (l, c) in eff.iter().enumerate() {
                if l != i {
                    leakage += inner(&u, c).norm_sqr();
                }
            }
            if !s.is_finite() {
                return Err(Error::Beamforming(format!("max-SINR: non-finite SINR for stream {i}")));
            }
            rx.push(u);
            sinr.push(s);
        }
        Ok((rx, sinr, leakage))
    }

    /// Transmit filter directions from the reciprocal network.
    fn reverse(&self, rx: &[CVec]) -> Result<Vec<CVec>> {
        let n = self.streams.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let cols = match self.streams[i].tx {
                TxSupport::Joint => 0..self.big[0].ncols(),
                TxSupport::Bs(j) => TxSupport::Bs(j).cols(),
            };
            let d = cols.len();
            let rev: Vec<CVec> = (0..n).map(|l| self.chan(self.streams[l].rx, i).adjoint() * &rx[l]).collect();
            let mut b = CMat::zeros(d, d);
            for (a, col) in cols.clone().enumerate() {
                b[(a, a)] = C64::new(self.rev_sigma_sq[col], 0.0);
            }
            for (l, r) in rev.iter().enumerate() {
                if l != i {
                    b += r * r.adjoint();
                }
            }
            let x = hpd_solve(&b, &rev[i])
                .filter(all_finite)
                .ok_or_else(|| Error::Beamforming(format!("max-SINR: singular reverse covariance for stream {i}")))?;
            out.push(x);
        }
        Ok(out)
    }

    pub fn optimize(&self, init: &[CVec], opts: &MaxSinrOptions) -> Result<MaxSinrOutput> {
        if opts.max_iters < 1 {
            return Err(Error::Beamforming("max_iters must be >= 1".into()));
        }
        if init.len() != self.streams.len() || !init.iter().all(all_finite) {
            return Err(Error::Beamforming("max-SINR: bad initial filters".into()));
        }
        if !self.within_power(init) {
            return Err(Error::Beamforming("max-SINR: initial filters exceed the power budget".into()));
        }
        // The first record scores the caller's filters as given.
        let mut tx = init.to_vec();
        let mut trace = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        for t in 0..opts.max_iters {
            let (rx, sinr, leakage) = self.forward(&tx)?;
            trace.push(IterationRecord { iteration: t, leakage, sinr });
            let next = self.apply_power(self.reverse(&rx)?)?;
            let delta = tx.iter().zip(&next).map(|(a, b)| chordal_distance(a, b)).fold(0.0, f64::max);
            tx = next;
            iterations = t + 1;
            if delta < opts.tol {
                converged = true;
                break;
            }
        }
        let (rx, sinr, leakage) = self.forward(&tx)?;
        trace.push(IterationRecord { iteration: iterations, leakage, sinr: sinr.clone() });
        Ok(MaxSinrOutput { tx, rx, sinr, iterations, converged, trace })
    }
}

/// Refines `init` for a coordinated scheme on the rebuilt channels `big`.
pub fn max_sinr(
    scheme: Scheme,
    init: &[CVec],
    big: &[CMat],
    sigma_nominal_sq: f64,
    opts: &MaxSinrOptions,
) -> Result<MaxSinrOutput> {
    Network::for_scheme(scheme, big, sigma_nominal_sq, opts.mu).optimize(init, opts)
}
