use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::seeds::{arm_seed, instance_seed, ARM_AUG, ARM_BASE};
use super::stats::{classify_delta, mcnemar_exact_one_sided, median, median_index, Label};
use crate::diagnostics::{certify, DStatReport};
use crate::error::{Error, Result};
use crate::explore::{run, step_budget_holds, ExplorationParams, ExplorationSetup, FullSpace, Trajectory};
use crate::problems::{generate, Family};
use crate::samplers::{rng_from_seed, DirectionSampler, StepSampler};

/// Which augmented iterate the certifier sees.
pub const CERTIFIER_TARGET: &str = "median_seed_final_iterate";

/// Relative slack on the square-summable step check.
const BUDGET_REL_TOL: f64 = 1e-9;

/// Invariant checks on every run of an instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunChecks {
    pub runs: usize,
    pub monotonicity_violations: usize,
    pub budget_violations: usize,
    /// Most accepted exploration moves in a single run.
    pub max_accepted_moves: usize,
    pub oracle_anomalies: usize,
    pub numeric_anomalies: usize,
}

impl RunChecks {
    fn record(&mut self, traj: &Trajectory, params: &ExplorationParams) {
        self.runs += 1;
        self.monotonicity_violations += usize::from(!traj.is_monotone());
        self.budget_violations += usize::from(!step_budget_holds(traj, params, BUDGET_REL_TOL));
        self.max_accepted_moves = self.max_accepted_moves.max(traj.accepted_moves);
        self.oracle_anomalies += traj.oracle_anomalies;
        self.numeric_anomalies += traj.numeric_anomalies;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedResult {
    pub instance_id: usize,
    pub h_base: f64,
    pub h_aug_per_seed: Vec<f64>,
    pub h_aug_median: f64,
    pub delta: f64,
    pub label: Label,
    pub dstat_base: DStatReport,
    pub dstat_aug: DStatReport,
    /// Position in `aug_seeds` of the certified augmented run.
    pub certified_seed_index: usize,
    pub aug_accepted_moves: Vec<usize>,
    pub checks: RunChecks,
    #[serde(skip)]
    pub base_final: DVector<f64>,
    #[serde(skip)]
    pub aug_final: DVector<f64>,
}

#[derive(Debug, Clone)]
pub enum InstanceOutcome {
    Completed(Box<PairedResult>),
    Failed { instance_id: usize, error: String },
}

impl InstanceOutcome {
    pub fn instance_id(&self) -> usize {
        match self {
            InstanceOutcome::Completed(r) => r.instance_id,
            InstanceOutcome::Failed { instance_id, .. } => *instance_id,
        }
    }

    pub fn completed(&self) -> Option<&PairedResult> {
        match self {
            InstanceOutcome::Completed(r) => Some(r.as_ref()),
            InstanceOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub family: Family,
    pub attempted: usize,
    pub completed: usize,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    pub mean_delta: Option<f64>,
    pub median_win_delta: Option<f64>,
    pub mcnemar_p: f64,
    pub non_dstat_base: usize,
    pub non_dstat_aug: usize,
    pub runs: usize,
    pub n_outer: usize,
    /// Largest number of accepted exploration moves in any single run.
    pub max_accepted_moves: usize,
    pub monotonicity_violations: usize,
    pub budget_violations: usize,
    pub oracle_anomalies: usize,
    pub numeric_anomalies: usize,
    pub certifier_target: String,
    pub failures: Vec<(usize, String)>,
}

impl SummaryTable {
    /// Deterministic fold over outcomes ordered by instance id.
    pub fn from_outcomes<'a>(
        family: Family,
        n_outer: usize,
        outcomes: impl IntoIterator<Item = &'a InstanceOutcome>,
    ) -> Self {
        let mut sorted: Vec<&InstanceOutcome> = outcomes.into_iter().collect();
        sorted.sort_by_key(|o| o.instance_id());

        let mut table = SummaryTable {
            family,
            attempted: sorted.len(),
            completed: 0,
            wins: 0,
            ties: 0,
            losses: 0,
            mean_delta: None,
            median_win_delta: None,
            mcnemar_p: 1.0,
            non_dstat_base: 0,
            non_dstat_aug: 0,
            runs: 0,
            n_outer,
            max_accepted_moves: 0,
            monotonicity_violations: 0,
            budget_violations: 0,
            oracle_anomalies: 0,
            numeric_anomalies: 0,
            certifier_target: CERTIFIER_TARGET.to_string(),
            failures: Vec::new(),
        };
        let mut deltas = Vec::new();
        let mut win_deltas = Vec::new();
        for outcome in sorted {
            let r = match outcome {
                InstanceOutcome::Completed(r) => r,
                InstanceOutcome::Failed { instance_id, error } => {
                    table.failures.push((*instance_id, error.clone()));
                    continue;
                }
            };
            table.completed += 1;
            match r.label {
                Label::Win => {
                    table.wins += 1;
                    win_deltas.push(r.delta);
                }
                Label::Tie => table.ties += 1,
                Label::Loss => table.losses += 1,
            }
            deltas.push(r.delta);
            table.non_dstat_base += usize::from(!r.dstat_base.pass);
            table.non_dstat_aug += usize::from(!r.dstat_aug.pass);
            table.runs += r.checks.runs;
            table.max_accepted_moves = table.max_accepted_moves.max(r.checks.max_accepted_moves);
            table.monotonicity_violations += r.checks.monotonicity_violations;
            table.budget_violations += r.checks.budget_violations;
            table.oracle_anomalies += r.checks.oracle_anomalies;
            table.numeric_anomalies += r.checks.numeric_anomalies;
        }
        if !deltas.is_empty() {
            table.mean_delta = Some(deltas.iter().sum::<f64>() / deltas.len() as f64);
        }
        table.median_win_delta = median(&win_deltas);
        table.mcnemar_p = mcnemar_exact_one_sided(table.wins as u64, table.losses as u64);
        table
    }

    pub fn wtl(&self) -> String {
        format!("{}/{}/{}", self.wins, self.ties, self.losses)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub summary: SummaryTable,
    pub outcomes: Vec<InstanceOutcome>,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    summary: &'a SummaryTable,
    config: &'a ExperimentConfig,
}

impl ExperimentReport {
    pub fn summary_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(&SummaryFile { summary: &self.summary, config: &self.config })?;
        text.push('\n');
        Ok(text)
    }

    pub fn instances_csv(&self) -> String {
        let mut buf = Vec::new();
        write_instances_csv(&mut buf, self.config.aug_seeds.len(), &self.outcomes)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Writes `summary.json` and `instances.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.json"), self.summary_json()?)?;
        fs::write(dir.join("instances.csv"), self.instances_csv())?;
        Ok(())
    }
}

fn trajectory_file(dir: &Path, instance: usize, arm: &str) -> std::path::PathBuf {
    dir.join(format!("instance{instance:04}_{arm}.csv"))
}

/// Base arm once, augmented arm once per seed, then certification.
pub fn run_instance(cfg: &ExperimentConfig, instance_id: usize, trajectory_dir: Option<&Path>) -> Result<PairedResult> {
    let seed = instance_seed(cfg.master_seed, instance_id as u64);
    let problem = generate(&cfg.generator, &mut rng_from_seed(seed))?.instance;
    let oracle = cfg.oracle.build(&problem)?;
    let n = problem.n();
    let setup = ExplorationSetup::new(
        DirectionSampler::new(cfg.direction, n)?,
        StepSampler::uniform(cfg.r)?,
        ExplorationParams::new(cfg.gamma, cfg.r, true)?,
    )?;
    let feasible = FullSpace { dim: n };
    let x0 = DVector::zeros(n);
    let mut checks = RunChecks::default();

    let base_seed = arm_seed(seed, ARM_BASE, 0);
    let base_setup = setup.with_exploration(false);
    let base = run(&problem, &feasible, oracle.as_ref(), &base_setup, x0.clone(), cfg.n_outer, base_seed)?;
    checks.record(&base, &base_setup.params);
    if let Some(dir) = trajectory_dir {
        base.write_csv(fs::File::create(trajectory_file(dir, instance_id, "base"))?)?;
    }

    let mut aug_runs = Vec::with_capacity(cfg.aug_seeds.len());
    for &s in &cfg.aug_seeds {
        let run_seed = arm_seed(seed, ARM_AUG, s);
        let traj = run(&problem, &feasible, oracle.as_ref(), &setup, x0.clone(), cfg.n_outer, run_seed)?;
        checks.record(&traj, &setup.params);
        if let Some(dir) = trajectory_dir {
            traj.write_csv(fs::File::create(trajectory_file(dir, instance_id, &format!("aug{s}")))?)?;
        }
        aug_runs.push((run_seed, traj));
    }

    let h_aug: Vec<f64> = aug_runs.iter().map(|(_, t)| t.final_h).collect();
    let h_aug_median = median(&h_aug).expect("aug_seeds validated nonempty");
    let (delta, label) = classify_delta(base.final_h, h_aug_median);
    let pick = median_index(&h_aug).expect("aug_seeds validated nonempty");

    let dstat_base = certify(&problem, &base.final_x, &cfg.tolerances, base_seed)?;
    let dstat_aug = certify(&problem, &aug_runs[pick].1.final_x, &cfg.tolerances, aug_runs[pick].0)?;

    Ok(PairedResult {
        instance_id,
        h_base: base.final_h,
        h_aug_per_seed: h_aug,
        h_aug_median,
        delta,
        label,
        dstat_base,
        dstat_aug,
        certified_seed_index: pick,
        aug_accepted_moves: aug_runs.iter().map(|(_, t)| t.accepted_moves).collect(),
        checks,
        base_final: base.final_x,
        aug_final: aug_runs.swap_remove(pick).1.final_x,
    })
}

/// Runs every instance (in parallel when threads are available) and
/// aggregates in instance order. Writes outputs when `output_dir` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let trajectory_dir = match (&cfg.output_dir, cfg.save_trajectories) {
        (Some(dir), true) => {
            let d = dir.join("trajectories");
            fs::create_dir_all(&d)?;
            Some(d)
        }
        _ => None,
    };

    let outcomes: Vec<InstanceOutcome> = (0..cfg.n_instances)
        .into_par_iter()
        .map(|i| match run_instance(cfg, i, trajectory_dir.as_deref()) {
            Ok(r) => InstanceOutcome::Completed(Box::new(r)),
            Err(e) => InstanceOutcome::Failed { instance_id: i, error: e.to_string() },
        })
        .collect();

    let summary = SummaryTable::from_outcomes(cfg.family(), cfg.n_outer, &outcomes);
    let report = ExperimentReport { config: cfg.clone(), summary, outcomes };
    if let Some(dir) = &cfg.output_dir {
        report.write_to(dir)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// instances.csv

/// One parsed row of `instances.csv`. Numeric fields are `None` on error rows.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRow {
    pub instance_id: usize,
    pub h_base: Option<f64>,
    pub h_aug: Vec<Option<f64>>,
    pub delta: Option<f64>,
    /// `win`, `tie`, `loss` or `error`.
    pub label: String,
    pub dstat_base_pass: Option<bool>,
    pub dstat_base_gap: Option<f64>,
    pub dstat_aug_pass: Option<bool>,
    pub dstat_aug_gap: Option<f64>,
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_instances_csv<W: Write>(mut out: W, n_seeds: usize, outcomes: &[InstanceOutcome]) -> Result<()> {
    let mut header = vec!["instance_id".to_string(), "h_base".to_string()];
    header.extend((0..n_seeds).map(|s| format!("h_aug_s{s}")));
    header.extend(
        ["delta", "label", "dstat_base_pass", "dstat_base_gap", "dstat_aug_pass", "dstat_aug_gap"].map(String::from),
    );
    writeln!(out, "{}", header.join(","))?;

    let mut sorted: Vec<&InstanceOutcome> = outcomes.iter().collect();
    sorted.sort_by_key(|o| o.instance_id());
    for outcome in sorted {
        let cols: Vec<String> = match outcome {
            InstanceOutcome::Completed(r) => {
                let mut cols = vec![r.instance_id.to_string(), fmt_f(r.h_base)];
                cols.extend(r.h_aug_per_seed.iter().map(|&v| fmt_f(v)));
                cols.push(fmt_f(r.delta));
                cols.push(r.label.as_str().to_string());
                cols.push(r.dstat_base.pass.to_string());
                cols.push(fmt_f(r.dstat_base.gap));
                cols.push(r.dstat_aug.pass.to_string());
                cols.push(fmt_f(r.dstat_aug.gap));
                cols
            }
            InstanceOutcome::Failed { instance_id, .. } => {
                let mut cols = vec![instance_id.to_string(), String::new()];
                cols.extend((0..n_seeds).map(|_| String::new()));
                cols.extend([
                    String::new(),
                    "error".into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                cols
            }
        };
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}

pub fn read_instances_csv<R: BufRead>(input: R) -> Result<Vec<InstanceRow>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty instances csv".into()))??;
    let width = header.split(',').count();
    if width < 8 {
        return Err(Error::Format(format!("unexpected header `{header}`")));
    }
    let n_seeds = width - 8;
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || Error::Format(format!("bad instances row `{line}`"));
        if cols.len() != width {
            return Err(bad());
        }
        let float = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>().map(Some).map_err(|_| bad())
            }
        };
        let boolean = |s: &str| -> Result<Option<bool>> {
            match s {
                "" => Ok(None),
                "true" => Ok(Some(true)),
                "false" => Ok(Some(false)),
                _ => Err(bad()),
            }
        };
        rows.push(InstanceRow {
            instance_id: cols[0].parse().map_err(|_| bad())?,
            h_base: float(cols[1])?,
            h_aug: cols[2..2 + n_seeds].iter().map(|c| float(c)).collect::<Result<_>>()?,
            delta: float(cols[2 + n_seeds])?,
            label: cols[3 + n_seeds].to_string(),
            dstat_base_pass: boolean(cols[4 + n_seeds])?,
            dstat_base_gap: float(cols[5 + n_seeds])?,
            dstat_aug_pass: boolean(cols[6 + n_seeds])?,
            dstat_aug_gap: float(cols[7 + n_seeds])?,
        });
    }
    Ok(rows)
}
