use crate::linalg::{canonical_phase, svd, CMat, CVec};

#[derive(Debug, Clone)]
pub struct EigenPrecoder {
    /// Right singular vectors in descending gain order, each scaled to an
    /// equal share of unit power.
    pub vectors: Vec<CVec>,
    pub gains: Vec<f64>,
    /// Set when a requested stream sees (numerically) zero gain.
    pub rank_deficient: bool,
}

/// Eigenbeamformers of a single link.
///
/// A degenerate singular value pair (e.g. `h = I`) has no preferred basis; the
/// identity columns are returned in that case.
pub fn eigen_precoder(h: &CMat, n_streams: usize) -> EigenPrecoder {
    let n_tx = h.ncols();
    assert!(n_streams >= 1 && n_streams <= n_tx);
    let d = svd(h);
    let s_max = d.s.first().copied().unwrap_or(0.0);
    let tie = d.s.len() >= 2 && (d.s[0] - d.s[1]).abs() <= 1e-12 * s_max.max(f64::MIN_POSITIVE);
    let share = (1.0 / n_streams as f64).sqrt();
    let vectors = (0..n_streams)
        .map(|i| {
            let v = if tie || s_max == 0.0 {
                CMat::identity(n_tx, n_tx).column(i).into_owned()
            } else {
                canonical_phase(d.v.column(i).into_owned())
            };
            v.scale(share)
        })
        .collect();
    let gains: Vec<f64> = (0..n_streams).map(|i| d.s.get(i).copied().unwrap_or(0.0)).collect();
    let rank_deficient = gains.iter().any(|&g| g <= 1e-12 * s_max.max(f64::MIN_POSITIVE));
    EigenPrecoder { vectors, gains, rank_deficient }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{C64, ONE, ZERO};

    #[test]
    fn identity_channel_uses_identity_columns() {
        let e = eigen_precoder(&CMat::identity(2, 2), 2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(e.vectors[0], CVec::from_vec(vec![ONE * s, ZERO]));
        assert_eq!(e.vectors[1], CVec::from_vec(vec![ZERO, ONE * s]));
        assert!(!e.rank_deficient);
    }

    #[test]
    fn rank_one_channel_is_flagged() {
        let h = CMat::from_row_slice(2, 2, &[ONE, ONE, ONE, ONE]);
        let e = eigen_precoder(&h, 2);
        assert!(e.rank_deficient);
        assert!(e.gains[1] < 1e-12);
        assert!(!eigen_precoder(&h, 1).rank_deficient);
    }

    #[test]
    fn single_stream_gets_full_power() {
        let h = CMat::from_row_slice(2, 2, &[ONE, C64::new(0.0, 1.0), ZERO, C64::new(0.5, 0.0)]);
        let e = eigen_precoder(&h, 1);
        assert!((e.vectors[0].norm() - 1.0).abs() < 1e-14);
    }
}
