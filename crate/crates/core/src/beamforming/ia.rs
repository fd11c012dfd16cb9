//! Closed-form interference alignment for three 2×2 users with one stream each.

use crate::linalg::{condition_number, eig2, inverse, normalized, CMat, CVec};

use super::eigen::eigen_precoder;

/// Cross links whose condition number exceeds this are treated as singular.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct IaInit {
    /// Unit-norm transmit vector per BS.
    pub vectors: Vec<CVec>,
    /// True when the construction was impossible and dominant
    /// eigenbeamformers were returned instead.
    pub fallback: bool,
    /// Largest condition number among the cross links.
    pub max_condition: f64,
}

/// Largest condition number among the six cross links `H_{k,j}`, `k ≠ j`.
pub fn cross_condition(h: &[Vec<CMat>]) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        for j in 0..3 {
            if k != j {
                worst = worst.max(condition_number(&h[k][j]));
            }
        }
    }
    worst
}

/// Transmit vectors that align both interferers at every receiver.
///
/// `h[k][j]` is the 2×2 channel from BS `j` to MS `k`. With
/// `E = H₂₀⁻¹H₂₁H₀₁⁻¹H₀₂H₁₂⁻¹H₁₀`, BS 0 sends along an eigenvector of `E`
/// (the one with the larger-magnitude eigenvalue), and BS 1 and BS 2 follow as
/// `H₂₁⁻¹H₂₀v₀` and `H₁₂⁻¹H₁₀v₀`, which places both interferers on a common
/// line at each MS.
pub fn ia_closed_form(h: &[Vec<CMat>]) -> IaInit {
    ia_with_eigvec(h, 0)
}

/// Same as [`ia_closed_form`] but seeded with eigenvector `which` (0 or 1) of `E`.
pub fn ia_with_eigvec(h: &[Vec<CMat>], which: usize) -> IaInit {
    let max_condition = cross_condition(h);
    let fallback = || IaInit {
        vectors: (0..3).map(|j| eigen_precoder(&h[j][j], 1).vectors.remove(0)).map(unit).collect(),
        fallback: true,
        max_condition,
    };
    if !(max_condition < MAX_CONDITION) {
        return fallback();
    }
    let (Some(i20), Some(i01), Some(i12), Some(i21)) =
        (inverse(&h[2][0]), inverse(&h[0][1]), inverse(&h[1][2]), inverse(&h[2][1]))
    else {
        return fallback();
    };
    let e = &i20 * &h[2][1] * &i01 * &h[0][2] * &i12 * &h[1][0];
    let v0 = eig2(&e)[which].1.clone();
    let v1 = &i21 * &h[2][0] * &v0;
    let v2 = &i12 * &h[1][0] * &v0;
    match (normalized(&v1), normalized(&v2)) {
        (Some(v1), Some(v2)) if v0.iter().chain(v1.iter()).chain(v2.iter()).all(|z| z.re.is_finite() && z.im.is_finite()) => {
            IaInit { vectors: vec![v0, v1, v2], fallback: false, max_condition }
        }
        _ => fallback(),
    }
}

fn unit(v: CVec) -> CVec {
    normalized(&v).unwrap_or(v)
}

/// `|sin θ|` between the two interference vectors arriving at MS `k`.
pub fn interference_misalignment(h: &[Vec<CMat>], v: &[CVec], k: usize) -> f64 {
    let others: Vec<usize> = (0..3).filter(|&j| j != k).collect();
    let a = &h[k][others[0]] * &v[others[0]];
    let b = &h[k][others[1]] * &v[others[1]];
    crate::linalg::chordal_distance(&a, &b)
}
