//! Random exploration on top of feasible descent oracles for nonsmooth,
//! nonconvex problems, with the oracles, problem families, exact
//! d-stationarity certifiers and the paired experiment harness.

mod error;
mod explore;
pub mod linalg;
pub mod samplers;

pub mod diagnostics;
pub mod harness;
pub mod oracles;
pub mod problems;

pub use nalgebra::{DMatrix, DVector};

pub use diagnostics::{certify, CertifierTolerances, DStatReport, DStatSummary};
pub use error::{Error, Result};
pub use explore::{
    augmented_iteration, read_trajectory_csv, rep_step, run, step_budget, step_budget_bound, step_budget_holds,
    DescentOracle, ExplorationParams, ExplorationSetup, FeasibleSet, FnObjective, FullSpace, HalfSpace, IterationFlags,
    IterationRecord, Objective, Proposal, RepOutcome, RunState, StationaryOracle, Trajectory,
};
pub use harness::{ExperimentConfig, ExperimentReport, Label, SummaryTable};
pub use oracles::{DcaConfig, OracleSpec, ProxLinearConfig};
pub use problems::{Design, Family, GeneratorParams, InstanceFile, Problem};
pub use samplers::{DirectionKind, DirectionSampler, StepSampler};
