//! Joint-transmission initialization: pseudo-inverse of the stacked
//! per-user eigenbeamformers.

use crate::linalg::{pinv_wide, svd, CMat, CVec};

#[derive(Debug, Clone)]
pub struct CompInit {
    /// One 6-element transmit vector per user, before power normalization.
    pub vectors: Vec<CVec>,
    /// The stacked rows `s_{k,1}·v_{k,1}ᴴ`, one per user.
    pub stacked: CMat,
    /// Set when the stack was rank deficient and a regularized inverse was used.
    pub regularized: bool,
}

/// `big[k]` is MS `k`'s 2×6 concatenated channel.
pub fn comp_init(big: &[CMat]) -> CompInit {
    let n_users = big.len();
    let n_tx = big[0].ncols();
    let mut stacked = CMat::zeros(n_users, n_tx);
    for (k, h) in big.iter().enumerate() {
        let d = svd(h);
        let row = d.v.column(0).adjoint().scale(d.s[0]);
        stacked.set_row(k, &row);
    }
    let (p, regularized) = pinv_wide(&stacked);
    let vectors = (0..n_users).map(|k| p.column(k).into_owned()).collect();
    CompInit { vectors, stacked, regularized }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{chordal_distance, frob_sq, C64};

    #[test]
    fn orthogonal_rows_give_matched_filter() {
        // Each user sees only its own BS with a rank-one block.
        let mut big = vec![CMat::zeros(2, 6); 3];
        for k in 0..3 {
            big[k][(0, 2 * k)] = C64::new(2.0, 1.0);
            big[k][(0, 2 * k + 1)] = C64::new(0.0, -1.0);
        }
        let init = comp_init(&big);
        assert!(!init.regularized);
        for k in 0..3 {
            let row = init.stacked.row(k).adjoint();
            assert!(chordal_distance(&init.vectors[k], &row) < 1e-12);
        }
        let prod = &init.stacked * CMat::from_columns(&init.vectors);
        assert!(frob_sq(&(prod - CMat::identity(3, 3))).sqrt() < 1e-10);
    }
}
