//! Smooth-`f` DC test for least trimmed squares: d-stationary iff `g` is
//! differentiable at `x` and `∇f(x) = ∇g(x)`.

use nalgebra::DVector;
use rand::seq::index::sample as sample_indices;

use super::{CertifierTolerances, DStatReport};
use crate::linalg::kth_largest;
use crate::problems::{Family, LtsInstance};
use crate::samplers::rng_from_seed;

/// Offset applied to the caller's seed for the sampled completions.
pub const COMPLETION_SEED_OFFSET: u64 = 0xC0_4D_1E_75;

/// `∇g_T(x) = Aᵀw`, `w_i = r_i` on `T`.
fn trimmed_gradient(inst: &LtsInstance, r: &DVector<f64>, rows: &[usize]) -> DVector<f64> {
    let mut w = DVector::zeros(r.len());
    for &i in rows {
        w[i] = r[i];
    }
    inst.a.tr_mul(&w)
}

/// `C(n, k)` saturating at `u64::MAX`.
fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Calls `visit` on every `k`-subset of `0..n`, in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn certify_lts(inst: &LtsInstance, x: &DVector<f64>, tol: &CertifierTolerances, seed: u64) -> DStatReport {
    let r = inst.residual(x);
    let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
    let cutoff = kth_largest(&sq, inst.q);
    let band = tol.delta_tie * cutoff.max(1.0);

    let mut above = Vec::new();
    let mut at = Vec::new();
    for (i, &s) in sq.iter().enumerate() {
        if s > cutoff + band {
            above.push(i);
        } else if (s - cutoff).abs() <= band {
            at.push(i);
        }
    }
    let n_pick = inst.q - above.len();
    let grad_f = inst.a.tr_mul(&r);

    let report = |pass: bool, gap: f64, estimated: bool| DStatReport {
        family: Family::Lts,
        pass,
        gap,
        tie_set_size: at.len(),
        per_coordinate_deltas: Vec::new(),
        anomaly: None,
        estimated,
    };

    // reference completion: lexicographically smallest
    let mut reference = above.clone();
    reference.extend_from_slice(&at[..n_pick]);
    let grad_ref = trimmed_gradient(inst, &r, &reference);
    let mismatch = (&grad_f - &grad_ref).norm();

    if n_pick == at.len() {
        return report(mismatch <= tol.eps, mismatch, false);
    }
    if mismatch > tol.eps {
        return report(false, mismatch, false);
    }

    let mut worst: f64 = 0.0;
    let mut measure = |chosen: &[usize]| {
        let mut rows = above.clone();
        rows.extend(chosen.iter().map(|&j| at[j]));
        worst = worst.max((trimmed_gradient(inst, &r, &rows) - &grad_ref).norm());
    };

    let total = binomial(at.len(), n_pick);
    let estimated = total > tol.lts_enum_cap as u64;
    if !estimated {
        for_each_combination(at.len(), n_pick, &mut measure);
    } else {
        let first: Vec<usize> = (0..n_pick).collect();
        let last: Vec<usize> = (at.len() - n_pick..at.len()).collect();
        measure(&first);
        measure(&last);
        let mut rng = rng_from_seed(seed.wrapping_add(COMPLETION_SEED_OFFSET));
        for _ in 0..tol.lts_random_completions {
            let mut pick = sample_indices(&mut rng, at.len(), n_pick).into_vec();
            pick.sort_unstable();
            measure(&pick);
        }
    }
    let gap = worst.max(mismatch);
    report(gap <= tol.eps, gap, estimated)
}
