//! Independent reference implementations used as test oracles. None of these
//! call into the crate's linear algebra.
#![allow(dead_code)]

use iacomp_core::linalg::{CMat, CVec, C64};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn cn<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn rand_cmat<R: Rng>(rng: &mut R, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| cn(rng))
}

pub fn rand_cvec<R: Rng>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| cn(rng))
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormalizes the given vectors (classical Gram–Schmidt, applied twice).
pub fn gram_schmidt(vs: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let p = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= qi * p;
                }
            }
        }
        let n = norm(&w);
        if n > 1e-12 {
            out.push(w.iter().map(|z| z / n).collect());
        }
    }
    out
}

/// m×n matrix with orthonormal columns drawn from Gaussian vectors.
pub fn random_unitary_cols<R: Rng>(rng: &mut R, m: usize, n: usize) -> CMat {
    let raw: Vec<Vec<C64>> = (0..n).map(|_| (0..m).map(|_| cn(rng)).collect()).collect();
    let q = gram_schmidt(&raw);
    CMat::from_fn(m, n, |r, c| q[c][r])
}

pub fn col(m: &CMat, c: usize) -> Vec<C64> {
    (0..m.nrows()).map(|r| m[(r, c)]).collect()
}

/// Sine of the angle between two vectors, as the residual of projecting the
/// normalized `b` onto the normalized `a`.
pub fn chordal(a: &[C64], b: &[C64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    let a: Vec<C64> = a.iter().map(|z| z / na).collect();
    let b: Vec<C64> = b.iter().map(|z| z / nb).collect();
    let p = dot(&a, &b);
    norm(&b.iter().zip(&a).map(|(y, x)| y - x * p).collect::<Vec<_>>())
}

/// Distance between the spans of two sets of orthonormal columns: the largest
/// residual of projecting one basis onto the other.
pub fn span_distance(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for x in a {
        let mut r = x.clone();
        for q in b {
            let p = dot(q, x);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= qi * p;
            }
        }
        worst = worst.max(norm(&r));
    }
    worst
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &CMat, b: &CVec) -> CVec {
    let n = a.nrows();
    let mut m: Vec<Vec<C64>> = (0..n).map(|r| (0..n).map(|c| a[(r, c)]).chain([b[r]]).collect()).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].norm().partial_cmp(&m[j][k].norm()).unwrap()).unwrap();
        m.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..=n {
                let t = m[k][j];
                m[i][j] -= f * t;
            }
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let s: C64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    CVec::from_vec(x)
}

/// Inverse via Gaussian elimination, column by column.
pub fn gauss_inverse(a: &CMat) -> CMat {
    let n = a.nrows();
    let mut out = CMat::zeros(n, n);
    for c in 0..n {
        let mut e = CVec::zeros(n);
        e[c] = C64::new(1.0, 0.0);
        out.set_column(c, &gauss_solve(a, &e));
    }
    out
}

/// Eigenvalues (descending) and the dominant unit eigenvector of a 2×2
/// Hermitian matrix, from the characteristic polynomial.
pub fn herm_eig2(a: &CMat) -> ((f64, f64), Vec<C64>) {
    let (p, q, r) = (a[(0, 0)].re, a[(1, 1)].re, a[(0, 1)]);
    let mean = 0.5 * (p + q);
    let rad = (0.25 * (p - q).powi(2) + r.norm_sqr()).sqrt();
    let (l1, l2) = (mean + rad, mean - rad);
    // (A − l1 I) v = 0 ⇒ v ∝ (r, l1 − p) or (l1 − q, conj r).
    let c1 = vec![r, C64::new(l1 - p, 0.0)];
    let c2 = vec![C64::new(l1 - q, 0.0), r.conj()];
    let v = if norm(&c1) >= norm(&c2) { c1 } else { c2 };
    let n = norm(&v);
    let v = if n < 1e-300 { vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)] } else { v.iter().map(|z| z / n).collect() };
    ((l1, l2), v)
}

/// `H(f_s) = Σ_l g_l exp(−j2π s·Δf·l·τ)` evaluated term by term.
pub fn dft_oracle(taps: &[C64], tap_spacing: f64, n_sc: usize, spacing: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(n_sc);
    for s in 0..n_sc {
        let mut acc = C64::new(0.0, 0.0);
        for (l, g) in taps.iter().enumerate() {
            let theta = -2.0 * std::f64::consts::PI * (s as f64 * spacing) * (l as f64 * tap_spacing);
            acc += g * C64::new(theta.cos(), theta.sin());
        }
        out.push(acc);
    }
    out
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}
