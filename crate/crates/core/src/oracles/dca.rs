//! DCA: linearize the concave part at a subgradient and solve the convex
//! remainder, `z ∈ argmin f₁(·) − ⟨g, ·⟩` with `g ∈ ∂f₂(x)`.
//!
//! With `mu > 0` the split is shifted to `f₁ + (μ/2)‖·‖²`, `f₂ + (μ/2)‖·‖²`,
//! which leaves `h` unchanged and makes both parts strongly convex.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::lasso::L1Quadratic;
use crate::error::{check_dim, Error, Result};
use crate::explore::{DescentOracle, Proposal};
use crate::linalg::{largest_eigenvalue_psd, LIPSCHITZ_MARGIN};
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Normal equations; only valid when `f₁` is quadratic.
    ClosedFormQuadratic,
    ProximalGradientL1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcaConfig {
    pub inner_solver: InnerSolver,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Strong-convexity shift added to both DC parts.
    #[serde(default)]
    pub mu: f64,
}

impl Default for DcaConfig {
    fn default() -> Self {
        Self { inner_solver: InnerSolver::ProximalGradientL1, inner_tol: 1e-8, inner_max_iter: 2000, mu: 0.0 }
    }
}

impl DcaConfig {
    /// Closed form for LTS, proximal gradient otherwise.
    pub fn for_problem(problem: &Problem) -> Self {
        let inner_solver = match problem {
            Problem::Lts(_) => InnerSolver::ClosedFormQuadratic,
            _ => InnerSolver::ProximalGradientL1,
        };
        Self { inner_solver, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tol > 0.0 && self.inner_tol.is_finite()) {
            return Err(Error::invalid("inner_tol", "must be positive"));
        }
        if self.inner_max_iter == 0 {
            return Err(Error::invalid("inner_max_iter", "must be positive"));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("mu", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Relative ridge used when the normal equations are singular.
const SINGULAR_RIDGE: f64 = 1e-12;

/// Relative slack on the subproblem decrease check; differences below this
/// are roundoff, not solver failure.
const DECREASE_SLACK: f64 = 1e-12;

enum Solver {
    ProxGrad { lipschitz: f64 },
    Normal { chol: Cholesky<f64, Dyn>, regularized: bool },
}

pub struct DcaOracle<'a> {
    problem: &'a Problem,
    cfg: DcaConfig,
    /// `AᵀA + μI`.
    gram: DMatrix<f64>,
    atb: DVector<f64>,
    lambda: f64,
    solver: Solver,
}

impl<'a> DcaOracle<'a> {
    pub fn new(problem: &'a Problem, cfg: DcaConfig) -> Result<Self> {
        cfg.validate()?;
        let lambda = match problem {
            Problem::TrimmedLasso(p) => p.lambda,
            Problem::Lts(_) => 0.0,
            Problem::Relu(_) => return Err(Error::UnsupportedProblem { oracle: "dca", family: "relu" }),
        };
        let a = problem.design();
        let mut gram = a.tr_mul(a);
        for i in 0..gram.nrows() {
            gram[(i, i)] += cfg.mu;
        }
        let atb = a.tr_mul(problem.targets());
        let solver = match cfg.inner_solver {
            InnerSolver::ProximalGradientL1 => Solver::ProxGrad {
                lipschitz: (largest_eigenvalue_psd(&gram) * LIPSCHITZ_MARGIN).max(f64::MIN_POSITIVE),
            },
            InnerSolver::ClosedFormQuadratic => {
                if lambda != 0.0 {
                    return Err(Error::UnsupportedProblem {
                        oracle: "dca/closed_form",
                        family: problem.family().as_str(),
                    });
                }
                match Cholesky::new(gram.clone()) {
                    Some(chol) => Solver::Normal { chol, regularized: false },
                    None => {
                        let scale = gram.diagonal().amax().max(1.0);
                        let mut reg = gram.clone();
                        for i in 0..reg.nrows() {
                            reg[(i, i)] += SINGULAR_RIDGE * scale;
                        }
                        let chol = Cholesky::new(reg)
                            .ok_or_else(|| Error::Precondition("normal equations not factorizable".into()))?;
                        Solver::Normal { chol, regularized: true }
                    }
                }
            }
        };
        Ok(Self { problem, cfg, gram, atb, lambda, solver })
    }

    pub fn config(&self) -> &DcaConfig {
        &self.cfg
    }

    /// Subgradient of the (shifted) concave part at `x`.
    pub fn linearization(&self, x: &DVector<f64>) -> DVector<f64> {
        let base = match self.problem {
            Problem::TrimmedLasso(p) => p.g_subgradient(x),
            Problem::Lts(p) => p.g_subgradient(x),
            Problem::Relu(_) => unreachable!("rejected at construction"),
        };
        base + x * self.cfg.mu
    }

    /// Convex subproblem at `x`, up to the constant `½‖b‖²`.
    pub fn subproblem(&self, x: &DVector<f64>) -> L1Quadratic<'_> {
        L1Quadratic { q: &self.gram, c: &self.atb + self.linearization(x), lambda: self.lambda }
    }
}

impl DescentOracle for DcaOracle<'_> {
    fn propose(&self, x: &DVector<f64>) -> Proposal {
        let sub = self.subproblem(x);
        let (z, mut anomaly) = match &self.solver {
            Solver::ProxGrad { lipschitz } => {
                let out = sub.solve(x, *lipschitz, self.cfg.inner_tol, self.cfg.inner_max_iter);
                (out.z, false)
            }
            Solver::Normal { chol, regularized } => (chol.solve(&sub.c), *regularized),
        };
        let (phi_z, phi_x) = (sub.value(&z), sub.value(x));
        let scale = sub.magnitude(x).max(sub.magnitude(&z)).max(1.0);
        let ok = z.iter().all(|v| v.is_finite()) && phi_z <= phi_x + DECREASE_SLACK * scale;
        if ok {
            Proposal { z, anomaly }
        } else {
            anomaly = true;
            Proposal { z: x.clone(), anomaly }
        }
    }
}

/// One DCA proposal from `x` (builds the oracle on the fly).
pub fn dca_propose(problem: &Problem, x: &DVector<f64>, cfg: DcaConfig) -> Result<DVector<f64>> {
    check_dim(problem.n(), x.len())?;
    Ok(DcaOracle::new(problem, cfg)?.propose(x).z)
}
