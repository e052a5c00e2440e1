//! Closed-form d-stationarity certifiers for the benchmark families, plus a
//! brute-force directional-derivative probe used to validate them.

mod box_lsq;
mod brute_force;
mod lts;
mod relu;
mod trimmed_lasso;

pub use box_lsq::{box_constrained_lsq, BoxLsq};
pub use brute_force::{brute_force_dstat_check, SlopeProbe};
pub use lts::certify_lts;
pub use relu::certify_relu;
pub use trimmed_lasso::{certify_trimmed_lasso, tie_distances};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::problems::{Family, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifierTolerances {
    pub eps: f64,
    pub delta_tie: f64,
    pub lts_enum_cap: usize,
    pub lts_random_completions: usize,
    pub relu_vertex_cap: usize,
}

impl Default for CertifierTolerances {
    fn default() -> Self {
        Self { eps: 1e-6, delta_tie: 1e-10, lts_enum_cap: 8192, lts_random_completions: 256, relu_vertex_cap: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anomaly {
    /// Too many β-kinks to enumerate; reported as non-d-stationary.
    TieCapExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DStatReport {
    pub family: Family,
    pub pass: bool,
    pub gap: f64,
    pub tie_set_size: usize,
    pub per_coordinate_deltas: Vec<f64>,
    pub anomaly: Option<Anomaly>,
    /// The gap came from sampled completions rather than full enumeration,
    /// so a pass is one-sided.
    pub estimated: bool,
}

/// Compact serialized form of a [`DStatReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DStatSummary {
    pub family: Family,
    pub pass: bool,
    pub gap: f64,
    pub tie_set_size: usize,
    pub anomaly: Option<Anomaly>,
}

impl DStatReport {
    pub fn summary(&self) -> DStatSummary {
        DStatSummary {
            family: self.family,
            pass: self.pass,
            gap: self.gap,
            tie_set_size: self.tie_set_size,
            anomaly: self.anomaly,
        }
    }
}

/// Dispatches to the family certifier. `seed` only feeds the LTS sampled
/// completions.
pub fn certify(problem: &Problem, x: &DVector<f64>, tol: &CertifierTolerances, seed: u64) -> Result<DStatReport> {
    check_dim(problem.n(), x.len())?;
    Ok(match problem {
        Problem::TrimmedLasso(p) => certify_trimmed_lasso(p, x, tol),
        Problem::Lts(p) => certify_lts(p, x, tol, seed),
        Problem::Relu(p) => certify_relu(p, x, tol),
    })
}
