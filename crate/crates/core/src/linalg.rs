//! Small dense helpers shared by the oracles and certifiers.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed of the start vector used by every power iteration.
const POWER_START_SEED: u64 = 0x05ee_d0f9_03e4;

pub const POWER_ITERATIONS: usize = 50;

/// Estimate of the largest eigenvalue of `AᵀA` (the squared spectral norm of
/// `A`) by power iteration from a fixed pseudo-random start.
pub fn squared_spectral_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_START_SEED);
    let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() + 0.5);
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let av = a * &v;
        let w = a.tr_mul(&av);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        estimate = v.dot(&w);
        v = w / norm;
    }
    estimate.max(0.0)
}

/// Same as [`squared_spectral_norm`] for an explicit symmetric PSD matrix.
pub fn largest_eigenvalue_psd(q: &DMatrix<f64>) -> f64 {
    let n = q.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_START_SEED);
    let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() + 0.5);
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = q * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        estimate = v.dot(&w);
        v = w / norm;
    }
    estimate.max(0.0)
}

/// Power iteration approaches the top eigenvalue from below; steps built on it
/// get a small margin.
pub const LIPSCHITZ_MARGIN: f64 = 1.01;

pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Indices of the `k` largest values, ordered by value descending with ties
/// broken toward the lower index.
pub fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    // stable sort keeps lower indices first among equal values
    idx.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    idx.truncate(k);
    idx
}

/// `k`-th largest value (1-based `k`).
pub fn kth_largest(values: &[f64], k: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted[k - 1]
}
