//! Random problem generators and nalgebra oracles shared by integration tests.
#![allow(dead_code)]

use lipperturb::linalg::Matrix;
use lipperturb::Exponent;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const EXPONENTS: [Exponent; 3] = [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity];

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
    Matrix::from_rows(&rows).unwrap()
}

pub fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// `D + 0.3·G/√n` with `|Dᵢᵢ| ∈ [1, 2]`: condition number stays small.
pub fn well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut out = gaussian(rng, n, n) * (0.3 / (n as f64).sqrt());
    for i in 0..n {
        let mag: f64 = rng.random_range(1.0..2.0);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        out[(i, i)] += sign * mag;
    }
    out
}

/// Induced operator norm: column sums, largest singular value, row sums.
pub fn op_norm(m: &DMatrix<f64>, p: Exponent) -> f64 {
    match p {
        Exponent::Finite(q) if q == 1.0 => (0..m.ncols())
            .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        Exponent::Finite(q) if q == 2.0 => m.clone().svd(false, false).singular_values.max(),
        Exponent::Infinity => (0..m.nrows())
            .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        other => panic!("no oracle for p = {other}"),
    }
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s
}

pub fn inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("invertible")
}

pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().pseudo_inverse(1e-14).expect("pseudo-inverse")
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn row(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

pub fn column(m: &DMatrix<f64>, j: usize) -> Vec<f64> {
    m.column(j).iter().copied().collect()
}

/// Root of an increasing `f` on `[lo, hi]`, bisected down to adjacent floats.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) <= 0.0 && f(hi) >= 0.0, "bracket");
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return if f(hi).abs() < f(lo).abs() { hi } else { lo };
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `(λ₁, λ₂)` valid whenever `‖ΔT − ΔS‖ ≤ k‖ΔS‖`, trading part of `λ₁` for
/// `λ₂ = share·min(k/(1−k), 0.95)`; uses `‖ΔT‖ ≥ (1−k)‖ΔS‖`.
pub fn split_constant(k: f64, share: f64) -> (f64, f64) {
    let l2 = share * (k / (1.0 - k)).min(0.95);
    let l1 = (k - l2 * (1.0 - k)).max(0.0);
    (l1 * (1.0 + 1e-9) + 1e-12, l2)
}
