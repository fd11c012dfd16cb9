//! Golden test vectors for the codec.
//!
//! One record per line, three space-separated fields:
//!
//! ```text
//! <hex bitstream> (<m>,<n>,<b_psi>,<b_phi>,<n_g>,<n_sc>,<ia 0|1>) <re>:<im>,<re>:<im>,...
//! ```
//!
//! The third field lists the decompressed `V̂` entries for every V-reported
//! subcarrier in ascending order, row-major within each matrix, with 12
//! significant digits. Blank lines and lines starting with `#` are ignored.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CodecError;
use crate::linalg::{CMat, C64};
use crate::scenario::{generate_channels_with, ScenarioConfig};

use super::{decompress_v, encode_report, reported_subcarrier_indices, AngleEntry, CodecParams, CsiReport, SnrReport};

/// Records shipped with the crate.
pub const EMBEDDED: &str = include_str!("../../data/codec_golden.txt");

/// Largest entry deviation tolerated when checking stored `V̂` values.
pub const VHAT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRecord {
    pub packed: Vec<u8>,
    pub params: CodecParams,
    pub vhat: Vec<CMat>,
}

fn bad(msg: impl Into<String>) -> CodecError {
    CodecError::Golden(msg.into())
}

pub fn format_params(p: &CodecParams) -> String {
    format!(
        "({},{},{},{},{},{},{})",
        p.m, p.n, p.b_psi, p.b_phi, p.n_g, p.n_sc, p.ia_block_reduction as u8
    )
}

pub fn parse_params(s: &str) -> Result<CodecParams, CodecError> {
    let inner = s
        .strip_prefix('(')
        .and_then(|x| x.strip_suffix(')'))
        .ok_or_else(|| bad(format!("params tuple must be parenthesized: {s}")))?;
    let f: Vec<usize> = inner
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| bad(format!("{t}: {e}"))))
        .collect::<Result<_, _>>()?;
    if f.len() != 7 {
        return Err(bad(format!("params tuple needs 7 fields, got {}", f.len())));
    }
    let narrow = |x: usize| u8::try_from(x).map_err(|_| bad(format!("bit width {x} out of range")));
    let p = CodecParams {
        m: f[0],
        n: f[1],
        b_psi: narrow(f[2])?,
        b_phi: narrow(f[3])?,
        n_g: f[4],
        n_sc: f[5],
        ia_block_reduction: match f[6] {
            0 => false,
            1 => true,
            x => return Err(bad(format!("ia flag must be 0 or 1, got {x}"))),
        },
    };
    p.validate()?;
    Ok(p)
}

impl GoldenRecord {
    pub fn from_report(report: &CsiReport) -> Result<Self, CodecError> {
        let vhat = report
            .angles
            .iter()
            .map(|e| decompress_v(e, &report.params))
            .collect::<Result<_, _>>()?;
        Ok(Self { packed: report.packed.clone(), params: report.params, vhat })
    }

    pub fn to_line(&self) -> String {
        let entries: Vec<String> = self
            .vhat
            .iter()
            .flat_map(|m| {
                (0..m.nrows()).flat_map(move |r| (0..m.ncols()).map(move |c| m[(r, c)]))
            })
            .map(|z| format!("{:.11e}:{:.11e}", z.re, z.im))
            .collect();
        format!("{} {} {}", hex::encode(&self.packed), format_params(&self.params), entries.join(","))
    }

    pub fn parse_line(line: &str) -> Result<Self, CodecError> {
        let mut fields = line.split_whitespace();
        let (Some(hx), Some(ps), Some(vals), None) = (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(bad("expected exactly three fields"));
        };
        let packed = hex::decode(hx).map_err(|e| bad(format!("hex: {e}")))?;
        let params = parse_params(ps)?;
        let nums: Vec<C64> = vals
            .split(',')
            .map(|t| {
                let (re, im) = t.split_once(':').ok_or_else(|| bad(format!("entry `{t}` is not re:im")))?;
                let re: f64 = re.parse().map_err(|e| bad(format!("{re}: {e}")))?;
                let im: f64 = im.parse().map_err(|e| bad(format!("{im}: {e}")))?;
                Ok(C64::new(re, im))
            })
            .collect::<Result<_, CodecError>>()?;
        let (v_idx, _) = reported_subcarrier_indices(params.n_g, params.n_sc);
        let per = params.m * params.n;
        if nums.len() != per * v_idx.len() {
            return Err(bad(format!("expected {} V̂ entries, got {}", per * v_idx.len(), nums.len())));
        }
        let vhat = nums.chunks(per).map(|c| CMat::from_row_slice(params.m, params.n, c)).collect();
        Ok(Self { packed, params, vhat })
    }

    /// Decodes the bitstream, re-encodes it, and compares the rebuilt `V̂`
    /// against the stored entries.
    pub fn verify(&self) -> Result<(), CodecError> {
        let report = CsiReport::unpack(&self.packed, self.params)?;
        let repacked = CsiReport::from_parts(self.params, report.angles.clone(), report.snr.clone())?;
        if repacked.packed != self.packed {
            return Err(bad("re-encoded bitstream differs"));
        }
        for (i, (entry, stored)) in report.angles.iter().zip(&self.vhat).enumerate() {
            let vhat = decompress_v(entry, &self.params)?;
            let dev = vhat.iter().zip(stored.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if !(dev <= VHAT_TOL) {
                return Err(bad(format!("V̂ at reported subcarrier {i} deviates by {dev:.3e}")));
            }
        }
        Ok(())
    }
}

pub fn parse_file(text: &str) -> Result<Vec<GoldenRecord>, CodecError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(GoldenRecord::parse_line)
        .collect()
}

fn zero_report(params: CodecParams) -> Result<CsiReport, CodecError> {
    let (v_idx, snr_idx) = reported_subcarrier_indices(params.n_g, params.n_sc);
    let (np, nq) = super::angles::angle_counts(params.m, params.n, params.ia_block_reduction);
    let angles = vec![AngleEntry { phi: vec![0; np], psi: vec![0; nq] }; v_idx.len()];
    let snr = SnrReport { avg_idx: vec![0; params.n], delta_db: vec![vec![0; snr_idx.len()]; params.n] };
    CsiReport::from_parts(params, angles, snr)
}

/// Deterministically regenerates the shipped record set.
pub fn generate_records() -> Result<Vec<GoldenRecord>, CodecError> {
    let mut out = Vec::new();
    let base = CodecParams { n_sc: 1, ..CodecParams::default() };
    for p in [
        base,
        CodecParams { ia_block_reduction: true, ..base },
        CodecParams { m: 2, ..base },
        CodecParams { b_psi: 5, b_phi: 7, ..base },
    ] {
        out.push(GoldenRecord::from_report(&zero_report(p)?)?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x601d);
    let combos: [(usize, usize, u8, u8, usize, usize, bool); 8] = [
        (6, 2, 7, 9, 38, 38, false),
        (6, 2, 7, 9, 38, 38, true),
        (6, 2, 7, 9, 16, 38, true),
        (6, 2, 5, 7, 16, 38, false),
        (6, 2, 7, 9, 1, 5, false),
        (6, 2, 7, 9, 2, 5, true),
        (4, 2, 7, 9, 4, 9, false),
        (2, 2, 5, 7, 1, 4, false),
    ];
    for (m, n, b_psi, b_phi, n_g, n_sc, ia) in combos {
        let params = CodecParams { m, n, b_psi, b_phi, n_g, n_sc, ia_block_reduction: ia };
        let cfg = ScenarioConfig { n_sc, rms_delay_spread: 100e-9, ..ScenarioConfig::default() };
        let ch = generate_channels_with(&cfg, &mut rng);
        let ms = rng.random_range(0..3);
        let bs_blocks = m / 2;
        let big: Vec<CMat> = (0..n_sc).map(|s| ch.big_h(ms, s).columns(0, 2 * bs_blocks).into_owned()).collect();
        let report = encode_report(&big, cfg.sigma_nominal_sq.sqrt(), params)?;
        out.push(GoldenRecord::from_report(&report)?);
    }
    Ok(out)
}

pub fn render_file(records: &[GoldenRecord]) -> String {
    let mut s = String::from(
        "# Codec golden vectors: <hex bitstream> (m,n,b_psi,b_phi,n_g,n_sc,ia) <V̂ entries re:im, row-major per reported subcarrier>\n",
    );
    for r in records {
        s.push_str(&r.to_line());
        s.push('\n');
    }
    s
}

/// Random well-formed report for round-trip fuzzing.
pub fn random_report<R: Rng + ?Sized>(params: CodecParams, rng: &mut R) -> Result<CsiReport, CodecError> {
    let (v_idx, snr_idx) = reported_subcarrier_indices(params.n_g, params.n_sc);
    let (np, nq) = super::angles::angle_counts(params.m, params.n, params.ia_block_reduction);
    let angles = (0..v_idx.len())
        .map(|_| AngleEntry {
            phi: (0..np).map(|_| rng.random_range(0..1u16 << params.b_phi)).collect(),
            psi: (0..nq).map(|_| rng.random_range(0..1u16 << params.b_psi)).collect(),
        })
        .collect();
    let snr = SnrReport {
        avg_idx: (0..params.n).map(|_| rng.random()).collect(),
        delta_db: (0..params.n).map(|_| (0..snr_idx.len()).map(|_| rng.random_range(-8..=7)).collect()).collect(),
    };
    CsiReport::from_parts(params, angles, snr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelftestSummary {
    pub golden_records: usize,
    pub roundtrips: usize,
}

/// Checks every embedded golden record and fuzzes pack/unpack.
pub fn selftest(roundtrips: usize, seed: u64) -> Result<SelftestSummary, CodecError> {
    let records = parse_file(EMBEDDED)?;
    if records.is_empty() {
        return Err(bad("no embedded golden records"));
    }
    for (i, r) in records.iter().enumerate() {
        r.verify().map_err(|e| bad(format!("record {i}: {e}")))?;
    }
    let regenerated = generate_records()?;
    if regenerated.len() != records.len() {
        return Err(bad("regenerated record count differs from embedded file"));
    }
    for (i, (a, b)) in regenerated.iter().zip(&records).enumerate() {
        if a.packed != b.packed || a.params != b.params {
            return Err(bad(format!("record {i}: encoder output no longer matches golden bitstream")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = [(2usize, 2usize), (4, 2), (6, 2)];
    for t in 0..roundtrips {
        let (m, n) = shapes[t % shapes.len()];
        let (b_psi, b_phi) = if rng.random::<bool>() { (7, 9) } else { (5, 7) };
        let n_g = super::VALID_NG[rng.random_range(0..super::VALID_NG.len())];
        let ia = m == 6 && rng.random::<bool>();
        let params = CodecParams { m, n, b_psi, b_phi, n_g, n_sc: 38, ia_block_reduction: ia };
        let rep = random_report(params, &mut rng)?;
        let back = CsiReport::unpack(&rep.packed, params)?;
        if back.angles != rep.angles || back.snr != rep.snr {
            return Err(bad(format!("round-trip mismatch on trial {t}")));
        }
    }
    Ok(SelftestSummary { golden_records: records.len(), roundtrips })
}
