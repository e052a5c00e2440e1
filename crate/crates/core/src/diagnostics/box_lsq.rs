//! `min ‖target − Gμ‖₂` over `μ ∈ [0, 1]^p`.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{squared_spectral_norm, LIPSCHITZ_MARGIN};

const FIRST_ORDER_TOL: f64 = 1e-10;
const MAX_ITER: usize = 10_000;
const REFINE_MAX_ITER: usize = 200;
const KKT_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct BoxLsq {
    pub mu: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Accelerated projected gradient with restart, step `1/‖G‖²`, then an exact
/// active-set refinement started from that point.
pub fn box_constrained_lsq(g: &DMatrix<f64>, target: &DVector<f64>) -> BoxLsq {
    let p = g.ncols();
    if p == 0 {
        return BoxLsq { mu: DVector::zeros(0), residual_norm: target.norm(), iterations: 0 };
    }
    let lipschitz = squared_spectral_norm(g) * LIPSCHITZ_MARGIN;
    if lipschitz == 0.0 {
        return BoxLsq { mu: DVector::zeros(p), residual_norm: target.norm(), iterations: 0 };
    }
    let step = 1.0 / lipschitz;
    let grad = |mu: &DVector<f64>| g.tr_mul(&(g * mu - target));

    let mut mu = DVector::zeros(p);
    let mut y = mu.clone();
    let mut t = 1.0_f64;
    let mut iterations = 0;
    for it in 1..=MAX_ITER {
        iterations = it;
        let gy = grad(&y);
        let next = (&y - gy * step).map(clamp01);
        let moved = &next - &mu;
        if (&y - &next).dot(&moved) > 0.0 {
            t = 1.0;
            y = next.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &next + moved * ((t - 1.0) / t_next);
            t = t_next;
        }
        mu = next;
        let gm = grad(&mu);
        let stationarity = (&mu - (&mu - gm).map(clamp01)).amax();
        if stationarity <= FIRST_ORDER_TOL {
            break;
        }
    }
    let (mu, residual_norm) = refine_active_set(g, target, mu);
    BoxLsq { mu, residual_norm, iterations }
}

#[derive(Clone, Copy, PartialEq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

/// Primal active-set refinement from a feasible start. Finite in exact
/// arithmetic; capped here and the best residual seen is kept.
fn refine_active_set(g: &DMatrix<f64>, target: &DVector<f64>, start: DVector<f64>) -> (DVector<f64>, f64) {
    let p = g.ncols();
    let mut mu = start;
    let mut state: Vec<Bound> = mu
        .iter()
        .map(|&v| {
            if v <= 0.0 {
                Bound::Lower
            } else if v >= 1.0 {
                Bound::Upper
            } else {
                Bound::Free
            }
        })
        .collect();
    let col_norm: Vec<f64> = (0..p).map(|j| g.column(j).norm()).collect();
    let kkt_tol = KKT_TOL * (target.norm() + g.norm()).max(1.0);

    let mut best = (mu.clone(), (target - g * &mu).norm());
    for _ in 0..REFINE_MAX_ITER.max(10 * p) {
        let free: Vec<usize> = (0..p).filter(|&j| state[j] == Bound::Free).collect();
        let rhs = target - g * mu.map_with_location(|j, _, v| if state[j] == Bound::Free { 0.0 } else { v });
        let sol = if free.is_empty() {
            Some(DVector::zeros(0))
        } else {
            g.select_columns(&free).svd(true, true).solve(&rhs, 1e-14).ok()
        };
        let Some(sol) = sol else { break };

        let blocked = free.iter().zip(sol.iter()).any(|(_, &v)| !(0.0..=1.0).contains(&v));
        if blocked {
            // walk toward the free solution until the first bound is hit
            let mut step = 1.0_f64;
            let mut hit = None;
            for (k, &j) in free.iter().enumerate() {
                let (from, to) = (mu[j], sol[k]);
                let limit = if to > 1.0 {
                    (1.0 - from) / (to - from)
                } else if to < 0.0 {
                    from / (from - to)
                } else {
                    continue;
                };
                if limit < step {
                    step = limit;
                    hit = Some(j);
                }
            }
            for (k, &j) in free.iter().enumerate() {
                mu[j] = (mu[j] + step * (sol[k] - mu[j])).clamp(0.0, 1.0);
            }
            for &j in &free {
                if mu[j] <= 0.0 || Some(j) == hit && sol[free.iter().position(|&f| f == j).unwrap()] < 0.0 {
                    mu[j] = 0.0;
                    state[j] = Bound::Lower;
                } else if mu[j] >= 1.0 || Some(j) == hit {
                    mu[j] = 1.0;
                    state[j] = Bound::Upper;
                }
            }
        } else {
            for (k, &j) in free.iter().enumerate() {
                mu[j] = sol[k];
            }
            let grad = g.tr_mul(&(g * &mu - target));
            let release = (0..p)
                .filter_map(|j| {
                    let w = grad[j];
                    let violation = match state[j] {
                        Bound::Lower => -w,
                        Bound::Upper => w,
                        Bound::Free => return None,
                    };
                    (violation > kkt_tol * col_norm[j].max(1.0)).then_some((j, violation))
                })
                .max_by(|a, b| a.1.total_cmp(&b.1));
            let res = (target - g * &mu).norm();
            if res < best.1 {
                best = (mu.clone(), res);
            }
            match release {
                Some((j, _)) => state[j] = Bound::Free,
                None => break,
            }
            continue;
        }
        let res = (target - g * &mu).norm();
        if res < best.1 {
            best = (mu.clone(), res);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn empty_box() {
        let out = box_constrained_lsq(&DMatrix::zeros(3, 0), &dvector![3.0, 4.0, 0.0]);
        assert_eq!(out.mu.len(), 0);
        assert_eq!(out.residual_norm, 5.0);
    }

    #[test]
    fn clamped_scalar() {
        let out = box_constrained_lsq(&DMatrix::from_element(1, 1, 2.0), &dvector![10.0]);
        assert!((out.mu[0] - 1.0).abs() < 1e-12);
        assert!((out.residual_norm - 8.0).abs() < 1e-12);
    }

    #[test]
    fn interior_minimizer_is_recovered() {
        let g = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let mu_star = dvector![0.3, 0.6];
        let target = &g * &mu_star;
        let out = box_constrained_lsq(&g, &target);
        assert!((out.mu - mu_star).amax() < 1e-8);
        assert!(out.residual_norm < 1e-8);
    }
}
