//! Per-stream SNR reporting: an 8-bit band average plus 4-bit per-subcarrier deltas.

pub const AVG_MIN_DB: f64 = -10.0;
pub const AVG_MAX_DB: f64 = 53.75;
pub const AVG_BITS: usize = 8;
pub const AVG_STEP_DB: f64 = (AVG_MAX_DB - AVG_MIN_DB) / ((1 << AVG_BITS) - 1) as f64;
pub const DELTA_BITS: usize = 4;
pub const DELTA_MIN: i8 = -8;
pub const DELTA_MAX: i8 = 7;

/// Floor applied to SNRs of vanishing singular values before reporting.
pub const SNR_FLOOR_DB: f64 = -100.0;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SnrReport {
    /// Quantized band average per stream.
    pub avg_idx: Vec<u8>,
    /// `delta_db[stream][i]` for the i-th SNR-reported subcarrier.
    pub delta_db: Vec<Vec<i8>>,
}

pub fn dequantize_avg(idx: u8) -> f64 {
    AVG_MIN_DB + idx as f64 * AVG_STEP_DB
}

pub fn quantize_avg(avg_db: f64) -> u8 {
    ((avg_db - AVG_MIN_DB) / AVG_STEP_DB).round().clamp(0.0, 255.0) as u8
}

/// `snr_db[stream][i]` over the SNR-reported subcarriers.
pub fn quantize_snr(snr_db: &[Vec<f64>]) -> SnrReport {
    let mut report = SnrReport::default();
    for stream in snr_db {
        let vals: Vec<f64> = stream.iter().map(|&x| x.max(SNR_FLOOR_DB)).collect();
        let avg = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
        let idx = quantize_avg(avg);
        let avg_deq = dequantize_avg(idx);
        report.avg_idx.push(idx);
        report.delta_db.push(
            vals.iter()
                .map(|&x| (x - avg_deq).round().clamp(DELTA_MIN as f64, DELTA_MAX as f64) as i8)
                .collect(),
        );
    }
    report
}

/// SNR in dB per stream at every V-reported subcarrier.
///
/// Reported points are `avg + delta`; V-subcarriers between two reported
/// points are linearly interpolated in dB, and those past the last reported
/// point take its value.
pub fn reconstruct_snr(report: &SnrReport, snr_indices: &[usize], v_indices: &[usize]) -> Vec<Vec<f64>> {
    report
        .avg_idx
        .iter()
        .zip(&report.delta_db)
        .map(|(&avg, deltas)| {
            let base = dequantize_avg(avg);
            let pts: Vec<(f64, f64)> = snr_indices
                .iter()
                .zip(deltas)
                .map(|(&sc, &d)| (sc as f64, base + d as f64))
                .collect();
            v_indices.iter().map(|&sc| interpolate(&pts, sc as f64)).collect()
        })
        .collect()
}

fn interpolate(pts: &[(f64, f64)], x: f64) -> f64 {
    let first = pts[0];
    if x <= first.0 {
        return first.1;
    }
    for w in pts.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    pts[pts.len() - 1].1
}
