//! The random exploration step, the greedy augmented loop built on it, and
//! the trajectory it records.
//!
//! One augmented iteration draws a single direction `v` and step `t̂`, keeps
//! `y = x + t̂·v` only if it is feasible and satisfies the sufficient-decrease
//! test `h(y) + (γ/2)·t̂² < h(x)`, asks the base oracle for `z`, and moves to
//! whichever of `y`, `z` has the smaller objective (ties go to `z`).

use std::io::{BufRead, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::samplers::{rng_from_seed, DirectionSampler, RunRng, StepSampler};

/// An objective `h` evaluated at points of `ℝⁿ`.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
}

/// Wraps a closure as an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&DVector<f64>) -> f64> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&DVector<f64>) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.f)(x)
    }
}

/// Closed convex feasible region, accessed only through membership.
pub trait FeasibleSet {
    fn dim(&self) -> usize;
    fn contains(&self, x: &DVector<f64>) -> bool;
}

/// `C = ℝⁿ`.
#[derive(Debug, Clone, Copy)]
pub struct FullSpace {
    pub dim: usize,
}

impl FeasibleSet for FullSpace {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, _x: &DVector<f64>) -> bool {
        true
    }
}

/// `{x : ⟨a, x⟩ ≤ b}`.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    pub normal: DVector<f64>,
    pub offset: f64,
}

impl FeasibleSet for HalfSpace {
    fn dim(&self) -> usize {
        self.normal.len()
    }

    fn contains(&self, x: &DVector<f64>) -> bool {
        self.normal.dot(x) <= self.offset
    }
}

/// A feasible descent method `x ↦ z`.
pub trait DescentOracle {
    fn propose(&self, x: &DVector<f64>) -> Proposal;
}

#[derive(Debug, Clone)]
pub struct Proposal {
    pub z: DVector<f64>,
    /// Set when the oracle had to fall back (solver failure, singular system).
    pub anomaly: bool,
}

impl Proposal {
    pub fn clean(z: DVector<f64>) -> Self {
        Self { z, anomaly: false }
    }
}

/// Oracle that never moves. Useful to check that exploration alone descends.
#[derive(Debug, Clone, Copy, Default)]
pub struct StationaryOracle;

impl DescentOracle for StationaryOracle {
    fn propose(&self, x: &DVector<f64>) -> Proposal {
        Proposal::clean(x.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationParams {
    /// Quadratic acceptance penalty γ.
    pub gamma: f64,
    /// Step cap r.
    pub r: f64,
    pub exploration_enabled: bool,
}

impl ExplorationParams {
    pub fn new(gamma: f64, r: f64, exploration_enabled: bool) -> Result<Self> {
        let p = Self { gamma, r, exploration_enabled };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("must be finite and positive, got {}", self.gamma)));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::invalid("r", format!("must be finite and positive, got {}", self.r)));
        }
        Ok(())
    }
}

impl Default for ExplorationParams {
    fn default() -> Self {
        Self { gamma: 1.0, r: 1.0, exploration_enabled: true }
    }
}

/// Everything the exploration step needs besides the objective and the set.
#[derive(Debug, Clone, Copy)]
pub struct ExplorationSetup {
    pub directions: DirectionSampler,
    pub steps: StepSampler,
    pub params: ExplorationParams,
}

impl ExplorationSetup {
    pub fn new(directions: DirectionSampler, steps: StepSampler, params: ExplorationParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { directions, steps, params })
    }

    pub fn with_exploration(mut self, enabled: bool) -> Self {
        self.params.exploration_enabled = enabled;
        self
    }
}

#[derive(Debug, Clone)]
pub struct RepOutcome {
    pub v_ex: DVector<f64>,
    pub t_hat: f64,
    pub t_ex: f64,
    pub y: DVector<f64>,
    pub h_y: f64,
    pub accepted: bool,
    /// The candidate was feasible but its objective was not finite.
    pub numeric_anomaly: bool,
}

/// One exploration step from `x` (with `h_x = h(x)` already known).
///
/// Draws exactly one direction and one step. The objective is not evaluated
/// when the candidate is infeasible.
#[allow(clippy::too_many_arguments)]
pub fn rep_step(
    x: &DVector<f64>,
    h_x: f64,
    objective: &dyn Objective,
    feasible: &dyn FeasibleSet,
    directions: &DirectionSampler,
    steps: &StepSampler,
    params: &ExplorationParams,
    rng: &mut RunRng,
) -> RepOutcome {
    let v_ex = directions.sample(rng);
    let t_hat = steps.sample(rng);
    let candidate = x + &v_ex * t_hat;

    let mut numeric_anomaly = false;
    if feasible.contains(&candidate) {
        let h_c = objective.value(&candidate);
        if !h_c.is_finite() {
            numeric_anomaly = true;
        } else if h_c + 0.5 * params.gamma * t_hat * t_hat < h_x {
            return RepOutcome { v_ex, t_hat, t_ex: t_hat, y: candidate, h_y: h_c, accepted: true, numeric_anomaly };
        }
    }
    RepOutcome { v_ex, t_hat, t_ex: 0.0, y: x.clone(), h_y: h_x, accepted: false, numeric_anomaly }
}

/// Iterate, its cached objective value, and the owned generator of one run.
#[derive(Debug, Clone)]
pub struct RunState {
    pub k: usize,
    pub x: DVector<f64>,
    pub h_x: f64,
    pub sum_sq_steps: f64,
    pub rng: RunRng,
}

impl RunState {
    pub fn new(x0: DVector<f64>, objective: &dyn Objective, seed: u64) -> Result<Self> {
        check_dim(objective.dim(), x0.len())?;
        let h_x = objective.value(&x0);
        if !h_x.is_finite() {
            return Err(Error::Precondition("objective is not finite at the starting point".into()));
        }
        Ok(Self { k: 0, x: x0, h_x, sum_sq_steps: 0.0, rng: rng_from_seed(seed) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `h(x^k)`.
    pub h_x: f64,
    /// `h(z^{k+1})`.
    pub h_z: f64,
    pub rep_accepted: bool,
    pub t_ex: f64,
    /// `‖x^k − z^{k+1}‖₂`.
    pub residual: f64,
}

/// Per-iteration bookkeeping that is not part of the serialized record.
#[derive(Debug, Clone, Copy, Default)]
pub struct IterationFlags {
    pub numeric_anomaly: bool,
    pub oracle_anomaly: bool,
    pub chose_exploration: bool,
}

/// One augmented iteration: explore, query the oracle, keep the better point.
pub fn augmented_iteration(
    state: &mut RunState,
    objective: &dyn Objective,
    feasible: &dyn FeasibleSet,
    oracle: &dyn DescentOracle,
    setup: &ExplorationSetup,
) -> Result<(IterationRecord, IterationFlags)> {
    let mut flags = IterationFlags::default();

    let (y, h_y, t_ex, accepted) = if setup.params.exploration_enabled {
        let out = rep_step(
            &state.x,
            state.h_x,
            objective,
            feasible,
            &setup.directions,
            &setup.steps,
            &setup.params,
            &mut state.rng,
        );
        flags.numeric_anomaly = out.numeric_anomaly;
        (out.y, out.h_y, out.t_ex, out.accepted)
    } else {
        (state.x.clone(), state.h_x, 0.0, false)
    };

    let proposal = oracle.propose(&state.x);
    flags.oracle_anomaly = proposal.anomaly;
    let z = proposal.z;
    check_dim(state.x.len(), z.len())?;
    if !feasible.contains(&z) {
        return Err(Error::InfeasibleOracleOutput { iteration: state.k });
    }
    let h_z = objective.value(&z);
    let residual = (&state.x - &z).norm();

    let record = IterationRecord { k: state.k, h_x: state.h_x, h_z, rep_accepted: accepted, t_ex, residual };

    // strict comparison: ties go to the oracle point
    let take_y = h_y < h_z || !h_z.is_finite();
    if take_y {
        flags.chose_exploration = accepted;
        state.x = y;
        state.h_x = h_y;
    } else {
        state.x = z;
        state.h_x = h_z;
    }
    state.sum_sq_steps += t_ex * t_ex;
    state.k += 1;
    Ok((record, flags))
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    pub final_x: DVector<f64>,
    pub final_h: f64,
    pub sum_sq_steps: f64,
    pub accepted_moves: usize,
    pub numeric_anomalies: usize,
    pub oracle_anomalies: usize,
}

impl Trajectory {
    /// `h(x⁰)`.
    pub fn initial_h(&self) -> f64 {
        self.records.first().map(|r| r.h_x).unwrap_or(self.final_h)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `h(x^0), h(x^1), …, h(x^N)`.
    pub fn objective_path(&self) -> Vec<f64> {
        let mut path: Vec<f64> = self.records.iter().map(|r| r.h_x).collect();
        path.push(self.final_h);
        path
    }

    pub fn is_monotone(&self) -> bool {
        self.objective_path().windows(2).all(|w| w[1] <= w[0])
    }

    /// Header plus one row per iteration, floats at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,h_x,h_z,rep_accepted,t_ex,residual")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{},{:.16e},{:.16e}",
                r.k,
                r.h_x,
                r.h_z,
                u8::from(r.rep_accepted),
                r.t_ex,
                r.residual
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

/// Parses rows produced by [`Trajectory::write_csv`].
pub fn read_trajectory_csv<R: BufRead>(input: R) -> Result<Vec<IterationRecord>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty trajectory csv".into()))??;
    if header.trim() != "k,h_x,h_z,rep_accepted,t_ex,residual" {
        return Err(Error::Format(format!("unexpected header `{header}`")));
    }
    let bad = |line: &str| Error::Format(format!("bad trajectory row `{line}`"));
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(bad(&line));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad(&line));
        records.push(IterationRecord {
            k: cols[0].parse().map_err(|_| bad(&line))?,
            h_x: float(cols[1])?,
            h_z: float(cols[2])?,
            rep_accepted: match cols[3] {
                "1" => true,
                "0" => false,
                _ => return Err(bad(&line)),
            },
            t_ex: float(cols[4])?,
            residual: float(cols[5])?,
        });
    }
    Ok(records)
}

/// Runs exactly `n_iter` augmented iterations from `x0`.
pub fn run(
    objective: &dyn Objective,
    feasible: &dyn FeasibleSet,
    oracle: &dyn DescentOracle,
    setup: &ExplorationSetup,
    x0: DVector<f64>,
    n_iter: usize,
    seed: u64,
) -> Result<Trajectory> {
    if n_iter == 0 {
        return Err(Error::Precondition("iteration count must be at least 1".into()));
    }
    setup.params.validate()?;
    check_dim(objective.dim(), feasible.dim())?;
    if !feasible.contains(&x0) {
        return Err(Error::InfeasibleStart);
    }
    let mut state = RunState::new(x0, objective, seed)?;
    let mut records = Vec::with_capacity(n_iter);
    let (mut accepted_moves, mut numeric_anomalies, mut oracle_anomalies) = (0, 0, 0);
    for _ in 0..n_iter {
        let (record, flags) = augmented_iteration(&mut state, objective, feasible, oracle, setup)?;
        accepted_moves += usize::from(record.rep_accepted);
        numeric_anomalies += usize::from(flags.numeric_anomaly);
        oracle_anomalies += usize::from(flags.oracle_anomaly);
        records.push(record);
    }
    Ok(Trajectory {
        records,
        final_h: state.h_x,
        final_x: state.x,
        sum_sq_steps: state.sum_sq_steps,
        accepted_moves,
        numeric_anomalies,
        oracle_anomalies,
    })
}

/// `Σ_k (t^k_ex)²`, recomputed from the log.
pub fn step_budget(trajectory: &Trajectory) -> f64 {
    trajectory.records.iter().map(|r| r.t_ex * r.t_ex).sum()
}

/// `(2/γ)(h(x⁰) − h(x^N))`, the upper bound on [`step_budget`].
pub fn step_budget_bound(trajectory: &Trajectory, params: &ExplorationParams) -> f64 {
    2.0 / params.gamma * (trajectory.initial_h() - trajectory.final_h)
}

/// Checks the square-summable step invariant with a relative tolerance.
pub fn step_budget_holds(trajectory: &Trajectory, params: &ExplorationParams, rel_tol: f64) -> bool {
    let used = step_budget(trajectory);
    let bound = step_budget_bound(trajectory, params);
    let scale = trajectory.initial_h().abs().max(trajectory.final_h.abs()).max(1.0);
    used <= bound + rel_tol * scale * 2.0 / params.gamma
}
