//! Feasible base oracles for the augmented loop.

mod dca;
mod lasso;
mod prox_linear;

pub use dca::{dca_propose, DcaConfig, DcaOracle, InnerSolver};
pub use lasso::{InnerSolve, L1Quadratic};
pub use prox_linear::{prox_linear_propose, ProxLinearConfig, ProxLinearOracle};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explore::DescentOracle;
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "oracle", rename_all = "snake_case")]
pub enum OracleSpec {
    Dca(DcaConfig),
    ProxLinear(ProxLinearConfig),
}

impl OracleSpec {
    pub fn name(&self) -> &'static str {
        match self {
            OracleSpec::Dca(_) => "dca",
            OracleSpec::ProxLinear(_) => "prox_linear",
        }
    }

    /// Builds the oracle for `problem`, precomputing per-instance factors.
    pub fn build<'a>(&self, problem: &'a Problem) -> Result<Box<dyn DescentOracle + Send + Sync + 'a>> {
        match (self, problem) {
            (OracleSpec::Dca(cfg), _) => Ok(Box::new(DcaOracle::new(problem, *cfg)?)),
            (OracleSpec::ProxLinear(cfg), Problem::Relu(inst)) => Ok(Box::new(ProxLinearOracle::new(inst, *cfg)?)),
            (OracleSpec::ProxLinear(_), other) => {
                Err(Error::UnsupportedProblem { oracle: "prox_linear", family: other.family().as_str() })
            }
        }
    }
}
