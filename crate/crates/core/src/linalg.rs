//! Small dense complex linear algebra used throughout the simulator.
//!
//! Everything here operates on tiny matrices (at most 6×6), so the
//! dynamically sized nalgebra types are used for uniformity rather than speed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Unit phasor `exp(j·theta)`.
#[inline]
pub fn phasor(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Sum of squared magnitudes of all entries.
pub fn frob_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn vec_norm_sq(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `aᴴ·b`.
pub fn inner(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Returns `v / ‖v‖`, or `None` when the norm is zero or not finite.
pub fn normalized(v: &CVec) -> Option<CVec> {
    let n = vec_norm_sq(v).sqrt();
    if n > 0.0 && n.is_finite() {
        Some(v.unscale(n))
    } else {
        None
    }
}

/// Chordal distance between the lines spanned by `a` and `b`, i.e. the sine
/// of the angle between them. Zero vectors are at distance 1 from everything.
///
/// Computed as the norm of the component of `b̂` orthogonal to `â`, which
/// stays accurate for nearly parallel inputs.
pub fn chordal_distance(a: &CVec, b: &CVec) -> f64 {
    let (Some(a), Some(b)) = (normalized(a), normalized(b)) else {
        return 1.0;
    };
    let proj = inner(&a, &b);
    let resid = &b - &a * proj;
    vec_norm_sq(&resid).sqrt().min(1.0)
}

/// Orthogonal projector onto the column space of an orthonormal-column matrix.
fn projector(q: &CMat) -> CMat {
    q * q.adjoint()
}

/// Subspace distance `‖P_a − P_b‖_F / √2` between the column spans of two
/// orthonormal-column matrices of equal shape.
pub fn subspace_distance(a: &CMat, b: &CMat) -> f64 {
    let d = projector(a) - projector(b);
    (frob_sq(&d) / 2.0).sqrt()
}

/// Thin SVD with singular values sorted in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors, `rows × k`.
    pub u: CMat,
    pub s: Vec<f64>,
    /// Right singular vectors as columns, `cols × k`.
    pub v: CMat,
}

pub fn svd(m: &CMat) -> Svd {
    let dec = m.clone().svd(true, true);
    let u = dec.u.expect("u requested");
    let v_t = dec.v_t.expect("v_t requested");
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        dec.singular_values[b]
            .partial_cmp(&dec.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let v_full = v_t.adjoint();
    let mut su = CMat::zeros(u.nrows(), k);
    let mut sv = CMat::zeros(v_full.nrows(), k);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        sv.set_column(dst, &v_full.column(src));
        s.push(dec.singular_values[src]);
    }
    Svd { u: su, s, v: sv }
}

/// Ratio of largest to smallest singular value (∞ for singular input).
pub fn condition_number(m: &CMat) -> f64 {
    let s = svd(m).s;
    let lo = *s.last().unwrap_or(&0.0);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        s[0] / lo
    }
}

/// Solves `a·x = b` for a Hermitian positive definite `a`, falling back to LU.
pub fn hpd_solve(a: &CMat, b: &CVec) -> Option<CVec> {
    if let Some(ch) = a.clone().cholesky() {
        return Some(ch.solve(b));
    }
    a.clone().lu().solve(b)
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    a.clone().try_inverse()
}

/// Moore–Penrose pseudo-inverse of a wide full-row-rank matrix.
///
/// When the smallest singular value falls below `1e-8·s_max` the matrix is
/// treated as rank deficient and a Tikhonov-regularized inverse
/// `Aᴴ(AAᴴ + δ²I)⁻¹` with `δ = 1e-6·‖A‖₂` is returned instead; the flag in
/// the result reports which branch was taken.
pub fn pinv_wide(a: &CMat) -> (CMat, bool) {
    let dec = svd(a);
    let s_max = dec.s.first().copied().unwrap_or(0.0);
    let s_min = dec.s.last().copied().unwrap_or(0.0);
    if s_max > 0.0 && s_min > 1e-8 * s_max {
        let mut sinv = CMat::zeros(dec.s.len(), dec.s.len());
        for (i, &s) in dec.s.iter().enumerate() {
            sinv[(i, i)] = C64::new(1.0 / s, 0.0);
        }
        (&dec.v * sinv * dec.u.adjoint(), false)
    } else {
        let delta = 1e-6 * s_max.max(f64::MIN_POSITIVE);
        let ah = a.adjoint();
        let mut gram = a * &ah;
        for i in 0..gram.nrows() {
            gram[(i, i)] += C64::new(delta * delta, 0.0);
        }
        let inv = inverse(&gram).unwrap_or_else(|| CMat::zeros(gram.nrows(), gram.ncols()));
        (ah * inv, true)
    }
}

/// Eigenpairs of a general complex 2×2 matrix, larger-magnitude eigenvalue first.
///
/// Eigenvectors are unit norm with the first component rotated to be real and
/// nonnegative (when it is zero the second component is made real instead).
pub fn eig2(m: &CMat) -> [(C64, CVec); 2] {
    debug_assert!(m.nrows() == 2 && m.ncols() == 2);
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let mut lambdas = [half_tr + disc, half_tr - disc];
    if lambdas[1].norm() > lambdas[0].norm() {
        lambdas.swap(0, 1);
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    lambdas.map(|lambda| {
        // Rows of (M − λI) annihilate the eigenvector; take whichever
        // candidate is numerically larger.
        let cand1 = CVec::from_vec(vec![b, lambda - a]);
        let cand2 = CVec::from_vec(vec![lambda - d, c]);
        let v = if vec_norm_sq(&cand1) >= vec_norm_sq(&cand2) { cand1 } else { cand2 };
        let v = if vec_norm_sq(&v).sqrt() <= 1e-14 * scale {
            // M is (numerically) a multiple of the identity.
            CVec::from_vec(vec![ONE, ZERO])
        } else {
            normalized(&v).expect("nonzero candidate")
        };
        (lambda, canonical_phase(v))
    })
}

/// Rotates `v` by a unit phasor so that its first non-negligible component is
/// real and nonnegative.
pub fn canonical_phase(v: CVec) -> CVec {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return v;
    }
    for z in v.iter() {
        if z.norm() > 1e-12 * scale {
            let rot = z.conj() / z.norm();
            return v.map(|x| x * rot);
        }
    }
    v
}
