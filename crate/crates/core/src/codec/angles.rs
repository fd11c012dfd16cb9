//! Givens-rotation parametrization of unitary-column matrices.
//!
//! The forward path normalizes column phases so the last row is real and
//! nonnegative, optionally rotates the per-BS row blocks (IA bit saving),
//! and then for each column removes the row phases with a diagonal phase
//! matrix (the φ angles) and zeros the sub-diagonal entries with real Givens
//! rotations (the ψ angles). The inverse rebuilds the matrix from the first
//! `n` columns of the identity.

use std::f64::consts::{PI, TAU};

use crate::error::CodecError;
use crate::linalg::{phasor, CMat, C64};

use super::CodecParams;

/// Rows per BS block of the concatenated V matrix.
pub const BLOCK_ROWS: usize = 2;

/// Orthonormality tolerance accepted by [`compress_v`].
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Quantized angles for one reported subcarrier.
///
/// Both lists are in extraction order: column 0 first, top row first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AngleEntry {
    pub phi: Vec<u16>,
    pub psi: Vec<u16>,
}

/// Unquantized angles, same layout as [`AngleEntry`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawAngles {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Number of columns that carry angles: `min(n, m − 1)`.
pub fn angle_columns(m: usize, n: usize) -> usize {
    n.min(m.saturating_sub(1))
}

/// Whether the φ of `(row, col)` is dropped by the IA block reduction.
fn phi_omitted(ia: bool, m: usize, row: usize, col: usize) -> bool {
    ia && col == 0 && row.is_multiple_of(BLOCK_ROWS) && row + BLOCK_ROWS < m
}

/// `(φ count, ψ count)` per column.
pub fn column_counts(m: usize, n: usize, ia: bool) -> Vec<(usize, usize)> {
    (0..angle_columns(m, n))
        .map(|c| {
            let phis = (c..m - 1).filter(|&r| !phi_omitted(ia, m, r, c)).count();
            (phis, m - 1 - c)
        })
        .collect()
}

/// Total `(φ count, ψ count)` per subcarrier.
pub fn angle_counts(m: usize, n: usize, ia: bool) -> (usize, usize) {
    column_counts(m, n, ia)
        .iter()
        .fold((0, 0), |(a, b), &(p, q)| (a + p, b + q))
}

pub fn phi_step(b_phi: u8) -> f64 {
    PI / (1u64 << (b_phi - 1)) as f64
}

pub fn psi_step(b_psi: u8) -> f64 {
    PI / (1u64 << (b_psi + 1)) as f64
}

/// Codepoint `kπ/2^(b−1) + π/2^b`.
pub fn dequantize_phi(k: u16, b_phi: u8) -> f64 {
    (k as f64 + 0.5) * phi_step(b_phi)
}

/// Codepoint `kπ/2^(b+1) + π/2^(b+2)`.
pub fn dequantize_psi(k: u16, b_psi: u8) -> f64 {
    (k as f64 + 0.5) * psi_step(b_psi)
}

/// Nearest φ codepoint, with wraparound over `[0, 2π)`.
pub fn quantize_phi(phi: f64, b_phi: u8) -> u16 {
    let levels = 1i64 << b_phi;
    let k = (phi.rem_euclid(TAU) / phi_step(b_phi)).floor() as i64;
    k.rem_euclid(levels) as u16
}

/// Nearest ψ codepoint over `[0, π/2)`, clamping at both ends.
pub fn quantize_psi(psi: f64, b_psi: u8) -> u16 {
    let max = (1i64 << b_psi) - 1;
    let k = (psi / psi_step(b_psi)).floor() as i64;
    k.clamp(0, max) as u16
}

fn check_orthonormal(v: &CMat) -> Result<(), CodecError> {
    let gram = v.adjoint() * v;
    let dev = (gram - CMat::identity(v.ncols(), v.ncols()))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if dev.is_finite() && dev <= ORTHONORMAL_TOL {
        Ok(())
    } else {
        Err(CodecError::NotOrthonormal(dev))
    }
}

fn arg_or_zero(z: C64) -> f64 {
    if z.norm() == 0.0 {
        0.0
    } else {
        z.arg()
    }
}

fn scale_row(w: &mut CMat, r: usize, by: C64) {
    for c in 0..w.ncols() {
        w[(r, c)] *= by;
    }
}

/// Applies the phase normalizations that precede angle extraction: last row
/// real and nonnegative per column, then (with `ia`) every BS block except
/// the last rotated so its upper-left entry is real and nonnegative.
pub fn normalize_phases(v: &CMat, ia: bool) -> CMat {
    let (m, n) = v.shape();
    let mut w = v.clone();
    for c in 0..n {
        let rot = phasor(-arg_or_zero(w[(m - 1, c)]));
        for r in 0..m {
            w[(r, c)] *= rot;
        }
    }
    if ia {
        let mut top = 0;
        while top + BLOCK_ROWS < m {
            let rot = phasor(-arg_or_zero(w[(top, 0)]));
            for r in top..top + BLOCK_ROWS {
                scale_row(&mut w, r, rot);
            }
            top += BLOCK_ROWS;
        }
    }
    w
}

/// Exact angle extraction. `v` must have orthonormal columns.
pub fn extract_angles(v: &CMat, ia: bool) -> Result<RawAngles, CodecError> {
    check_orthonormal(v)?;
    let (m, n) = v.shape();
    if m < 2 || n < 1 || n > m {
        return Err(CodecError::InvalidParams(format!("unsupported V shape {m}×{n}")));
    }
    let mut w = normalize_phases(v, ia);
    let mut out = RawAngles::default();
    for c in 0..angle_columns(m, n) {
        for r in c..m - 1 {
            let phi = arg_or_zero(w[(r, c)]).rem_euclid(TAU);
            if !phi_omitted(ia, m, r, c) {
                out.phi.push(phi);
            }
            scale_row(&mut w, r, phasor(-phi));
        }
        for l in c + 1..m {
            // Both entries are real and nonnegative up to rounding here.
            let x_c = w[(c, c)].re;
            let x_l = w[(l, c)].re;
            let psi = x_l.max(0.0).atan2(x_c.max(0.0)).clamp(0.0, PI / 2.0);
            let (s, co) = psi.sin_cos();
            for k in 0..n {
                let a = w[(c, k)];
                let b = w[(l, k)];
                w[(c, k)] = a * co + b * s;
                w[(l, k)] = b * co - a * s;
            }
            out.psi.push(psi);
        }
    }
    Ok(out)
}

/// Rebuilds the `m×n` matrix from exact angles; omitted IA φ's are zero.
pub fn build_v(angles: &RawAngles, m: usize, n: usize, ia: bool) -> Result<CMat, CodecError> {
    let (exp_phi, exp_psi) = angle_counts(m, n, ia);
    if angles.phi.len() != exp_phi || angles.psi.len() != exp_psi {
        return Err(CodecError::AngleCount {
            expected_phi: exp_phi,
            expected_psi: exp_psi,
            got_phi: angles.phi.len(),
            got_psi: angles.psi.len(),
        });
    }
    // Per-column slices of the flat angle lists.
    let counts = column_counts(m, n, ia);
    let mut phi_at = Vec::with_capacity(counts.len());
    let mut psi_at = Vec::with_capacity(counts.len());
    let (mut pi, mut si) = (0, 0);
    for &(p, q) in &counts {
        phi_at.push(pi);
        psi_at.push(si);
        pi += p;
        si += q;
    }

    let mut w = CMat::identity(m, n);
    for c in (0..counts.len()).rev() {
        for l in (c + 1..m).rev() {
            let psi = angles.psi[psi_at[c] + (l - c - 1)];
            let (s, co) = psi.sin_cos();
            for k in 0..n {
                let a = w[(c, k)];
                let b = w[(l, k)];
                w[(c, k)] = a * co - b * s;
                w[(l, k)] = a * s + b * co;
            }
        }
        let mut next_phi = phi_at[c];
        for r in c..m - 1 {
            if phi_omitted(ia, m, r, c) {
                continue;
            }
            scale_row(&mut w, r, phasor(angles.phi[next_phi]));
            next_phi += 1;
        }
    }
    Ok(w)
}

/// Extracts and quantizes the angles of `v` according to `params`.
pub fn compress_v(v: &CMat, params: &CodecParams) -> Result<AngleEntry, CodecError> {
    if v.shape() != (params.m, params.n) {
        return Err(CodecError::InvalidParams(format!(
            "V is {}×{}, params expect {}×{}",
            v.nrows(),
            v.ncols(),
            params.m,
            params.n
        )));
    }
    let raw = extract_angles(v, params.ia_block_reduction)?;
    Ok(AngleEntry {
        phi: raw.phi.iter().map(|&a| quantize_phi(a, params.b_phi)).collect(),
        psi: raw.psi.iter().map(|&a| quantize_psi(a, params.b_psi)).collect(),
    })
}

pub fn dequantize(entry: &AngleEntry, params: &CodecParams) -> RawAngles {
    RawAngles {
        phi: entry.phi.iter().map(|&k| dequantize_phi(k, params.b_phi)).collect(),
        psi: entry.psi.iter().map(|&k| dequantize_psi(k, params.b_psi)).collect(),
    }
}

/// Rebuilds `V̂` from quantized angles.
pub fn decompress_v(entry: &AngleEntry, params: &CodecParams) -> Result<CMat, CodecError> {
    let phi_max = 1u32 << params.b_phi;
    let psi_max = 1u32 << params.b_psi;
    if entry.phi.iter().any(|&k| k as u32 >= phi_max) || entry.psi.iter().any(|&k| k as u32 >= psi_max) {
        return Err(CodecError::Malformed("angle index exceeds field width".into()));
    }
    build_v(&dequantize(entry, params), params.m, params.n, params.ia_block_reduction)
}

/// Worst-case spectral-norm deviation of `V̂` caused by quantization: every
/// factor is unitary, so the deviations of the individual phase and Givens
/// factors (each at most its angle error, i.e. half a step) add up.
pub fn quantization_error_bound(params: &CodecParams) -> f64 {
    let (n_phi, n_psi) = angle_counts(params.m, params.n, params.ia_block_reduction);
    n_phi as f64 * 0.5 * phi_step(params.b_phi) + n_psi as f64 * 0.5 * psi_step(params.b_psi)
}
