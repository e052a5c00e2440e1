//! Prox-linear oracle for `h = c∘F` with `F(x) = Ax` affine.
//!
//! The model at `x` is `m(y) = c(Ay) + (ρ/2)‖y − x‖²`, a piecewise
//! quadratic in `y` with breakpoints where `a_iᵀy = 0`. It is minimized by a
//! primal active-set method started at `y = x`. Every row is on its
//! positive branch, on its flat branch, or held at its kink. Each step moves
//! toward the minimizer of the current piece and stops at the first
//! breakpoint it meets, so the model decreases monotonically. Rows with
//! `b_i ≤ 0` have a convex kink and are held there until their multiplier
//! leaves `[0, −b_i]`; rows with `b_i > 0` switch branch when crossed.
//! `m(z) ≤ m(x) = h(x)` is checked on return.

use std::sync::Mutex;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::explore::{DescentOracle, Proposal};
use crate::problems::ReluInstance;

/// `|a_iᵀx|` at or below this, relative to `max(1, ‖Ax‖∞)`, counts as a kink
/// at the start of a solve.
const KINK_SNAP: f64 = 1e-12;
/// A step direction with `|a_iᵀd|` below this (relative to `‖a_i‖‖d‖`) is
/// treated as parallel to row `i`'s kink.
const PARALLEL: f64 = 1e-12;
/// Multiplier slack before a held row is released.
const MULTIPLIER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProxLinearConfig {
    pub rho_prox: f64,
    /// Cap on inner active-set steps.
    pub inner_max_iter: usize,
    /// Inner loop stops once a full step is shorter than this.
    pub inner_tol: f64,
}

impl Default for ProxLinearConfig {
    fn default() -> Self {
        Self { rho_prox: 0.1, inner_max_iter: 500, inner_tol: 1e-12 }
    }
}

impl ProxLinearConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_prox > 0.0 && self.rho_prox.is_finite()) {
            return Err(Error::invalid("rho_prox", "must be positive"));
        }
        if !(self.inner_tol > 0.0 && self.inner_tol.is_finite()) {
            return Err(Error::invalid("inner_tol", "must be positive"));
        }
        if self.inner_max_iter == 0 {
            return Err(Error::invalid("inner_max_iter", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Pos,
    Flat,
    Kink,
}

type Factor = Cholesky<f64, Dyn>;

pub struct ProxLinearOracle<'a> {
    inst: &'a ReluInstance,
    cfg: ProxLinearConfig,
    row_norm: Vec<f64>,
    /// Last factorization of `A_PᵀA_P + ρI`, keyed by the positive set `P`.
    /// Only saves work; results do not depend on it.
    cache: Mutex<Option<(Vec<bool>, Factor)>>,
}

impl<'a> ProxLinearOracle<'a> {
    pub fn new(inst: &'a ReluInstance, cfg: ProxLinearConfig) -> Result<Self> {
        cfg.validate()?;
        let row_norm = (0..inst.m()).map(|i| inst.a.row(i).norm()).collect();
        Ok(Self { inst, cfg, row_norm, cache: Mutex::new(None) })
    }

    pub fn config(&self) -> &ProxLinearConfig {
        &self.cfg
    }

    /// `m(y)` for the model centred at `x`.
    pub fn model_value(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let u = &self.inst.a * y;
        self.inst.outer(&u) + 0.5 * self.cfg.rho_prox * (y - x).norm_squared()
    }

    fn factor(&self, positive: &[bool]) -> Factor {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((p, f)) = cache.as_ref() {
            if p.as_slice() == positive {
                return f.clone();
            }
        }
        let a = &self.inst.a;
        let n = a.ncols();
        let rows: Vec<usize> = (0..positive.len()).filter(|&i| positive[i]).collect();
        let ap = a.select_rows(rows.iter());
        let gram = ap.tr_mul(&ap) + DMatrix::identity(n, n) * self.cfg.rho_prox;
        let f = Cholesky::new(gram).expect("A_PᵀA_P + ρI is positive definite");
        *cache = Some((positive.to_vec(), f.clone()));
        f
    }

    /// Step from `y` to the minimizer of the piece fixed by `branch`, held
    /// rows constrained to their kink, and the multipliers of the held rows.
    /// Solved in correction form so the error scales with the step.
    fn piece_step(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        u: &DVector<f64>,
        branch: &[Branch],
    ) -> (DVector<f64>, Vec<(usize, f64)>) {
        let a = &self.inst.a;
        let b = &self.inst.b;
        let positive: Vec<bool> = branch.iter().map(|&s| s == Branch::Pos).collect();
        let held: Vec<usize> = (0..branch.len()).filter(|&i| branch[i] == Branch::Kink).collect();
        let h = self.factor(&positive);

        let residual = DVector::from_fn(b.len(), |i, _| if positive[i] { b[i] - u[i] } else { 0.0 });
        let rhs = a.tr_mul(&residual) - (y - x) * self.cfg.rho_prox;
        let d0 = h.solve(&rhs);
        if held.is_empty() {
            return (d0, Vec::new());
        }
        let ak = a.select_rows(held.iter());
        let w = h.solve(&ak.transpose());
        let s = &ak * &w;
        let kink_rhs = &ak * &d0 + DVector::from_iterator(held.len(), held.iter().map(|&i| u[i]));
        let nu = match Cholesky::new(s.clone()) {
            Some(c) => c.solve(&kink_rhs),
            None => s.svd(true, true).solve(&kink_rhs, 1e-14).expect("svd computed with both factors"),
        };
        let d = d0 - w * &nu;
        (d, held.into_iter().zip(nu.iter().copied()).collect())
    }

    /// Exact minimizer over `s ∈ [0, 1]` of `m(y + s·d)`, a piecewise
    /// quadratic in `s`. Returns `s` and the rows whose breakpoint is `s`.
    fn line_search(
        &self,
        u: &DVector<f64>,
        ad: &DVector<f64>,
        e: &DVector<f64>,
        d: &DVector<f64>,
        branch: &[Branch],
    ) -> (f64, Vec<usize>) {
        let b = &self.inst.b;
        let rho = self.cfg.rho_prox;
        let mut breaks: Vec<(f64, usize)> = (0..u.len())
            .filter(|&i| ad[i] != 0.0 && branch[i] != Branch::Kink)
            .map(|i| (-u[i] / ad[i], i))
            .filter(|&(s, _)| s > 0.0 && s < 1.0)
            .collect();
        if breaks.is_empty() {
            // d reaches the minimizer of a convex piece
            return (1.0, Vec::new());
        }
        breaks.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));

        // ψ(s) = φ(s) − φ(0) tracked through its slope and curvature, so
        // decreases far below the size of φ are still resolved
        let mut slope = rho * e.dot(d);
        let mut curv = rho * d.norm_squared();
        let first_mid = breaks.first().map_or(0.5, |&(s, _)| 0.5 * s);
        for i in 0..u.len() {
            if branch[i] != Branch::Kink && u[i] + first_mid * ad[i] > 0.0 {
                slope += (u[i] - b[i]) * ad[i];
                curv += ad[i] * ad[i];
            }
        }

        let (mut best_s, mut best_psi) = (0.0, 0.0);
        let (mut lo, mut psi_lo) = (0.0, 0.0);
        let mut k = 0;
        loop {
            let hi = breaks.get(k).map_or(1.0, |&(s, _)| s);
            let len = hi - lo;
            let inner = if curv > 0.0 {
                (-slope / curv).clamp(0.0, len)
            } else if slope < 0.0 {
                len
            } else {
                0.0
            };
            for off in [inner, len] {
                let psi = psi_lo + slope * off + 0.5 * curv * off * off;
                if psi < best_psi {
                    best_psi = psi;
                    best_s = lo + off;
                }
            }
            if k >= breaks.len() {
                break;
            }
            psi_lo += slope * len + 0.5 * curv * len * len;
            slope += curv * len;
            // at the crossing the row's residual is −b_i
            while k < breaks.len() && breaks[k].0 == hi {
                let i = breaks[k].1;
                let sign = if ad[i] > 0.0 { 1.0 } else { -1.0 };
                slope += sign * (-b[i]) * ad[i];
                curv += sign * ad[i] * ad[i];
                k += 1;
            }
            lo = hi;
        }
        let at_break = breaks.iter().filter(|&&(s, _)| s == best_s).map(|&(_, i)| i).collect();
        (best_s, at_break)
    }

    /// Returns `(z, m(z), h(z))`.
    pub fn solve_model(&self, x: &DVector<f64>) -> (DVector<f64>, f64, f64) {
        let a = &self.inst.a;
        let b = &self.inst.b;
        let rho = self.cfg.rho_prox;

        let mut y = x.clone();
        let mut u = a * &y;
        let h_x = self.inst.outer(&u);
        let snap = KINK_SNAP * u.amax().max(1.0);
        let mut branch: Vec<Branch> = u
            .iter()
            .zip(b.iter())
            .map(|(&ui, &bi)| if ui > snap || (ui >= -snap && bi > 0.0) { Branch::Pos } else { Branch::Flat })
            .collect();
        // hold convex kinks the current point already sits on, unless there
        // are too many to be independent (the origin, typically)
        let on_convex_kink: Vec<usize> = (0..u.len()).filter(|&i| u[i].abs() <= snap && b[i] <= 0.0).collect();
        if on_convex_kink.len() < x.len() {
            for i in on_convex_kink {
                branch[i] = Branch::Kink;
            }
        }

        for _ in 0..self.cfg.inner_max_iter {
            let (d, multipliers) = self.piece_step(x, &y, &u, &branch);
            if !d.iter().all(|v| v.is_finite()) {
                break;
            }
            let ad = a * &d;

            if d.norm() > self.cfg.inner_tol * (1.0 + y.norm()) {
                let (step, at_break) = self.line_search(&u, &ad, &(&y - x), &d, &branch);
                if step > 0.0 {
                    y.axpy(step, &d, 1.0);
                    u.axpy(step, &ad, 1.0);
                    for i in 0..u.len() {
                        if branch[i] != Branch::Kink || u[i].abs() > snap {
                            branch[i] = if u[i] > 0.0 { Branch::Pos } else { Branch::Flat };
                        }
                    }
                    for i in at_break {
                        branch[i] = if b[i] > 0.0 { Branch::Pos } else { Branch::Kink };
                    }
                    continue;
                }
                // no progress: rows sitting on a kink are on the wrong branch
                // for this direction; move all of them at once
                let mut changed = false;
                for i in 0..u.len() {
                    if branch[i] == Branch::Kink
                        || u[i].abs() > snap
                        || ad[i].abs() <= PARALLEL * self.row_norm[i] * d.norm()
                    {
                        continue;
                    }
                    let next = match (b[i] > 0.0, ad[i] > 0.0) {
                        (true, true) => Branch::Pos,
                        (false, true) => Branch::Kink,
                        (_, false) => Branch::Flat,
                    };
                    changed |= next != branch[i];
                    branch[i] = next;
                }
                if changed {
                    continue;
                }
            }

            // optimal on this piece; release the worst misplaced held row
            let worst = multipliers
                .iter()
                .filter_map(|&(i, nu)| {
                    let upper = (-b[i]).max(0.0);
                    let slack = MULTIPLIER_SLACK * upper.max(1.0);
                    if nu < -slack {
                        Some((i, -nu, Branch::Flat))
                    } else if nu > upper + slack {
                        Some((i, nu - upper, Branch::Pos))
                    } else {
                        None
                    }
                })
                .max_by(|p, q| p.1.total_cmp(&q.1));
            match worst {
                Some((i, _, side)) => branch[i] = side,
                None => break,
            }
        }

        let h_y = self.inst.outer(&u);
        let model = h_y + 0.5 * rho * (&y - x).norm_squared();
        if model <= h_x && h_y <= h_x && y.iter().all(|v| v.is_finite()) {
            (y, model, h_y)
        } else {
            (x.clone(), h_x, h_x)
        }
    }
}

impl DescentOracle for ProxLinearOracle<'_> {
    fn propose(&self, x: &DVector<f64>) -> Proposal {
        let (z, _, _) = self.solve_model(x);
        Proposal::clean(z)
    }
}

/// One prox-linear proposal from `x`.
pub fn prox_linear_propose(inst: &ReluInstance, x: &DVector<f64>, cfg: ProxLinearConfig) -> Result<DVector<f64>> {
    check_dim(inst.n(), x.len())?;
    Ok(ProxLinearOracle::new(inst, cfg)?.propose(x).z)
}
