//! Bit-exact serialization of a CSI report.
//!
//! Layout, MSB first within every field:
//!
//! 1. one 8-bit average SNR per stream;
//! 2. 4-bit two's-complement SNR deltas, stream by stream, each stream's
//!    deltas in ascending subcarrier order;
//! 3. for each V-reported subcarrier in ascending order, the angles column
//!    by column: that column's φ's (`b_phi` bits each) then its ψ's
//!    (`b_psi` bits each).
//!
//! The stream is zero-padded to a whole number of bytes.

use crate::error::CodecError;

use super::angles::{column_counts, AngleEntry};
use super::snr::{SnrReport, AVG_BITS, DELTA_BITS};
use super::{bit_count, reported_subcarrier_indices, CodecParams};

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bits: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn put(&mut self, value: u32, width: usize) {
        debug_assert!(width <= 32);
        debug_assert!(width == 32 || value >> width == 0, "value {value} wider than {width} bits");
        for i in (0..width).rev() {
            if self.bits.is_multiple_of(8) {
                self.bytes.push(0);
            }
            let bit = ((value >> i) & 1) as u8;
            let last = self.bytes.last_mut().unwrap();
            *last |= bit << (7 - self.bits % 8);
            self.bits += 1;
        }
    }

    pub fn bit_len(&self) -> usize {
        self.bits
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn get(&mut self, width: usize) -> Result<u32, CodecError> {
        if self.pos + width > self.bytes.len() * 8 {
            return Err(CodecError::Truncated {
                needed: (self.pos + width).div_ceil(8),
                got: self.bytes.len(),
            });
        }
        let mut v = 0u32;
        for _ in 0..width {
            let bit = (self.bytes[self.pos / 8] >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | bit as u32;
            self.pos += 1;
        }
        Ok(v)
    }

    pub fn position(&self) -> usize {
        self.pos
    }
}

fn check_shape(params: &CodecParams, angles: &[AngleEntry], snr: &SnrReport) -> Result<(), CodecError> {
    let (v_idx, snr_idx) = reported_subcarrier_indices(params.n_g, params.n_sc);
    if angles.len() != v_idx.len() {
        return Err(CodecError::Malformed(format!(
            "{} angle entries for {} reported subcarriers",
            angles.len(),
            v_idx.len()
        )));
    }
    if snr.avg_idx.len() != params.n || snr.delta_db.len() != params.n {
        return Err(CodecError::Malformed(format!("SNR report must cover {} streams", params.n)));
    }
    if snr.delta_db.iter().any(|d| d.len() != snr_idx.len()) {
        return Err(CodecError::Malformed(format!("expected {} SNR deltas per stream", snr_idx.len())));
    }
    let counts = column_counts(params.m, params.n, params.ia_block_reduction);
    let (np, nq) = counts.iter().fold((0, 0), |(a, b), &(p, q)| (a + p, b + q));
    for e in angles {
        if e.phi.len() != np || e.psi.len() != nq {
            return Err(CodecError::AngleCount {
                expected_phi: np,
                expected_psi: nq,
                got_phi: e.phi.len(),
                got_psi: e.psi.len(),
            });
        }
    }
    Ok(())
}

pub fn pack(params: &CodecParams, angles: &[AngleEntry], snr: &SnrReport) -> Result<Vec<u8>, CodecError> {
    params.validate()?;
    check_shape(params, angles, snr)?;
    let mut w = BitWriter::new();
    for &a in &snr.avg_idx {
        w.put(a as u32, AVG_BITS);
    }
    for stream in &snr.delta_db {
        for &d in stream {
            if !(super::snr::DELTA_MIN..=super::snr::DELTA_MAX).contains(&d) {
                return Err(CodecError::Malformed(format!("SNR delta {d} out of range")));
            }
            w.put((d as u8 & 0x0f) as u32, DELTA_BITS);
        }
    }
    let counts = column_counts(params.m, params.n, params.ia_block_reduction);
    let (phi_lim, psi_lim) = (1u32 << params.b_phi, 1u32 << params.b_psi);
    for e in angles {
        let (mut pi, mut si) = (0, 0);
        for &(np, nq) in &counts {
            for &k in &e.phi[pi..pi + np] {
                if k as u32 >= phi_lim {
                    return Err(CodecError::Malformed(format!("phi index {k} exceeds {} bits", params.b_phi)));
                }
                w.put(k as u32, params.b_phi as usize);
            }
            for &k in &e.psi[si..si + nq] {
                if k as u32 >= psi_lim {
                    return Err(CodecError::Malformed(format!("psi index {k} exceeds {} bits", params.b_psi)));
                }
                w.put(k as u32, params.b_psi as usize);
            }
            pi += np;
            si += nq;
        }
    }
    debug_assert_eq!(w.bit_len(), bit_count(params));
    Ok(w.into_bytes())
}

pub fn unpack(bytes: &[u8], params: &CodecParams) -> Result<(Vec<AngleEntry>, SnrReport), CodecError> {
    params.validate()?;
    let total_bits = bit_count(params);
    let needed = total_bits.div_ceil(8);
    if bytes.len() < needed {
        return Err(CodecError::Truncated { needed, got: bytes.len() });
    }
    if bytes.len() > needed {
        return Err(CodecError::Trailing(format!("{} extra bytes", bytes.len() - needed)));
    }
    let (v_idx, snr_idx) = reported_subcarrier_indices(params.n_g, params.n_sc);
    let mut r = BitReader::new(bytes);
    let mut snr = SnrReport::default();
    for _ in 0..params.n {
        snr.avg_idx.push(r.get(AVG_BITS)? as u8);
    }
    for _ in 0..params.n {
        let mut deltas = Vec::with_capacity(snr_idx.len());
        for _ in 0..snr_idx.len() {
            let raw = r.get(DELTA_BITS)? as u8;
            // Sign-extend the 4-bit field.
            deltas.push(((raw << 4) as i8) >> 4);
        }
        snr.delta_db.push(deltas);
    }
    let counts = column_counts(params.m, params.n, params.ia_block_reduction);
    let mut angles = Vec::with_capacity(v_idx.len());
    for _ in 0..v_idx.len() {
        let mut e = AngleEntry::default();
        for &(np, nq) in &counts {
            for _ in 0..np {
                e.phi.push(r.get(params.b_phi as usize)? as u16);
            }
            for _ in 0..nq {
                e.psi.push(r.get(params.b_psi as usize)? as u16);
            }
        }
        angles.push(e);
    }
    debug_assert_eq!(r.position(), total_bits);
    let pad = needed * 8 - total_bits;
    if pad > 0 && r.get(pad)? != 0 {
        return Err(CodecError::Trailing("non-zero padding bits".into()));
    }
    Ok((angles, snr))
}
