//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs the focused experiments at full scale (a few minutes on one core).
//! Criteria listed in `KNOWN_RED` are reported as FAIL but do not fail the
//! target; any other failure does.

use std::cell::Cell;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rep_core::diagnostics::brute_force_dstat_check;
use rep_core::harness::{mcnemar_exact_one_sided, run_experiment, verify_rate_bound};
use rep_core::oracles::{DcaOracle, ProxLinearOracle};
use rep_core::problems::{generate, LtsInstance, ReluInstance, TrimmedLassoInstance};
use rep_core::samplers::rng_from_seed;
use rep_core::{
    certify, run, step_budget_holds, CertifierTolerances, DMatrix, DVector, DcaConfig, DescentOracle, DirectionKind,
    DirectionSampler, ExperimentConfig, ExperimentReport, ExplorationParams, ExplorationSetup, FullSpace,
    GeneratorParams, Problem, Proposal, ProxLinearConfig, StepSampler, SummaryTable, Trajectory,
};

/// ReLU wins stay far below the threshold; see the README.
const KNOWN_RED: &[u32] = &[5];

struct Verdict {
    id: u32,
    pass: bool,
    detail: String,
}

/// Tallies invariant checks over every run made here.
#[derive(Default)]
struct InvariantTally {
    runs: usize,
    violations: usize,
}

impl InvariantTally {
    fn add_summary(&mut self, s: &SummaryTable) {
        self.runs += s.runs;
        self.violations += s.monotonicity_violations + s.budget_violations;
    }

    fn add_trajectory(&mut self, t: &Trajectory, params: &ExplorationParams) {
        self.runs += 1;
        self.violations += usize::from(!t.is_monotone()) + usize::from(!step_budget_holds(t, params, 1e-9));
    }
}

fn experiment(cfg: &ExperimentConfig, tally: &mut InvariantTally) -> ExperimentReport {
    let report = run_experiment(cfg).expect("experiment config is valid");
    tally.add_summary(&report.summary);
    report
}

fn stats(s: &SummaryTable) -> String {
    format!("W/T/L {} non-d-stat {}/{}", s.wtl(), s.non_dstat_base, s.non_dstat_aug)
}

fn criterion_1() -> Verdict {
    let pins = [(9u64, "1.95e-3"), (99, "1.58e-30"), (44, "5.68e-14")];
    let mut pass = mcnemar_exact_one_sided(9, 0) == 1.953125e-3;
    let mut parts = Vec::new();
    for (w, published) in pins {
        let got = format!("{:.2e}", mcnemar_exact_one_sided(w, 0));
        pass &= got == published;
        parts.push(format!("({w},0) -> {got}"));
    }
    Verdict { id: 1, pass, detail: parts.join(", ") }
}

fn criterion_2(tally: &mut InvariantTally) -> Verdict {
    let full = experiment(&ExperimentConfig::trimmed_lasso_focused(), tally).summary;
    let smoke = experiment(&ExperimentConfig::trimmed_lasso_focused().with_scale(20, 1000), tally).summary;
    let pass = full.wins >= 85
        && full.losses <= 3
        && full.non_dstat_base >= 85
        && full.non_dstat_aug <= 15
        && smoke.wins >= smoke.losses + 10;
    Verdict { id: 2, pass, detail: format!("full {}, p = {:.2e}; smoke {}", stats(&full), full.mcnemar_p, smoke.wtl()) }
}

fn criterion_3(tally: &mut InvariantTally) -> Verdict {
    let mut cfg = ExperimentConfig::trimmed_lasso_focused();
    cfg.direction = DirectionKind::Sphere;
    let s = experiment(&cfg, tally).summary;
    let pass = s.max_accepted_moves * 100 <= s.n_outer && s.wins <= 10;
    Verdict { id: 3, pass, detail: format!("{}, most accepted moves in a run {}", stats(&s), s.max_accepted_moves) }
}

fn criterion_4(tally: &mut InvariantTally) -> Verdict {
    let full = experiment(&ExperimentConfig::lts_focused(), tally).summary;
    let smoke = experiment(&ExperimentConfig::lts_focused().with_scale(20, 1000), tally).summary;
    let pass =
        full.losses <= 2 && full.non_dstat_base <= 5 && full.non_dstat_aug <= 5 && full.wins >= 1 && smoke.losses == 0;
    Verdict { id: 4, pass, detail: format!("full {}; smoke {}", stats(&full), smoke.wtl()) }
}

fn criterion_5(tally: &mut InvariantTally) -> Verdict {
    let a = experiment(&ExperimentConfig::relu_focused(0.2, 2.0), tally).summary;
    let b = experiment(&ExperimentConfig::relu_focused(0.4, 2.0), tally).summary;
    let wins = a.wins + b.wins;
    let losses = a.losses + b.losses;
    let (nd_base, nd_aug) = (a.non_dstat_base + b.non_dstat_base, a.non_dstat_aug + b.non_dstat_aug);
    let pass = losses <= 4 && wins >= 15 && nd_base <= 5 && nd_aug <= 5;
    Verdict {
        id: 5,
        pass,
        detail: format!(
            "(0.2,2) {}; (0.4,2) {}; aggregate wins {wins} (need >= 15), losses {losses}, non-d-stat {nd_base}/{nd_aug}",
            stats(&a),
            stats(&b)
        ),
    }
}

/// Trimmed lasso with both DC parts shifted by `(μ/2)‖x‖²`; `h ≥ 0`.
fn criterion_7(tally: &mut InvariantTally) -> Verdict {
    let mu = 0.5;
    let params = ExplorationParams::default();
    let mut holds = 0;
    let mut total = 0;
    for i in 0..10u64 {
        let gen = GeneratorParams::TrimmedLasso {
            m: 50,
            n: 100,
            k: 5,
            lambda: 1.0,
            noise_std: 0.1,
            design: Default::default(),
        };
        let problem = generate(&gen, &mut rng_from_seed(1000 + i)).unwrap().instance;
        let oracle = DcaOracle::new(&problem, DcaConfig { mu, ..DcaConfig::default() }).unwrap();
        let setup = ExplorationSetup::new(
            DirectionSampler::gauss_axis(100, 300.0).unwrap(),
            StepSampler::uniform(1.0).unwrap(),
            params,
        )
        .unwrap();
        for seed in 0..3 {
            let traj = run(&problem, &FullSpace { dim: 100 }, &oracle, &setup, DVector::zeros(100), 500, seed).unwrap();
            tally.add_trajectory(&traj, &params);
            total += 1;
            holds += usize::from(verify_rate_bound(&traj, 2.0 * mu, 0.0));
        }
    }
    Verdict { id: 7, pass: holds == total, detail: format!("bound holds on {holds}/{total} augmented runs, N = 500") }
}

/// Prox-linear oracle that audits every proposal it makes.
struct Audited<'a> {
    inner: ProxLinearOracle<'a>,
    inst: &'a ReluInstance,
    proposals: Cell<usize>,
    violations: Cell<usize>,
}

impl DescentOracle for Audited<'_> {
    fn propose(&self, x: &DVector<f64>) -> Proposal {
        let (z, model, h_z) = self.inner.solve_model(x);
        let h_x = self.inst.value(x);
        let exact_model = self.inner.model_value(x, &z);
        self.proposals.set(self.proposals.get() + 1);
        if !(model <= h_x && exact_model <= h_x && h_z <= h_x && self.inst.value(&z) <= h_x) {
            self.violations.set(self.violations.get() + 1);
        }
        Proposal::clean(z)
    }
}

fn criterion_8(tally: &mut InvariantTally) -> Verdict {
    let params = ExplorationParams::default();
    let (mut proposals, mut violations) = (0, 0);
    for i in 0..10u64 {
        let q_param = if i % 2 == 0 { 0.2 } else { 0.4 };
        let gen = GeneratorParams::Relu {
            m: 200,
            n: 50,
            q_param,
            rho_b: 2.0,
            target_noise_std: rep_core::problems::RELU_TARGET_NOISE_STD,
            design: Default::default(),
        };
        let problem = generate(&gen, &mut rng_from_seed(2000 + i)).unwrap().instance;
        let Problem::Relu(inst) = &problem else { unreachable!() };
        let oracle = Audited {
            inner: ProxLinearOracle::new(inst, ProxLinearConfig::default()).unwrap(),
            inst,
            proposals: Cell::new(0),
            violations: Cell::new(0),
        };
        for explore in [false, true] {
            let setup = ExplorationSetup::new(
                DirectionSampler::sphere(50).unwrap(),
                StepSampler::uniform(1.0).unwrap(),
                params,
            )
            .unwrap()
            .with_exploration(explore);
            let traj = run(&problem, &FullSpace { dim: 50 }, &oracle, &setup, DVector::zeros(50), 300, i).unwrap();
            tally.add_trajectory(&traj, &setup.params);
        }
        proposals += oracle.proposals.get();
        violations += oracle.violations.get();
    }
    Verdict { id: 8, pass: violations == 0, detail: format!("{violations} violations in {proposals} proposals") }
}

#[derive(Default)]
struct Agreement {
    instances: usize,
    passes: usize,
    pass_agree: usize,
    big_gaps: usize,
    big_gap_agree: usize,
}

impl Agreement {
    fn check(&mut self, problem: &Problem, x: &DVector<f64>, seed: u64) {
        let report = certify(problem, x, &CertifierTolerances::default(), seed).unwrap();
        if !report.pass && report.gap <= 0.1 {
            return;
        }
        let slope = brute_force_dstat_check(problem, x, 10_000, 1e-4, &mut rng_from_seed(seed)).min_slope;
        if report.pass {
            self.passes += 1;
            self.pass_agree += usize::from(slope >= -1e-4);
        } else {
            self.big_gaps += 1;
            self.big_gap_agree += usize::from(slope < -1e-4);
        }
    }

    fn ok(&self) -> bool {
        self.passes > 0 && self.big_gaps > 0 && self.pass_agree == self.passes && self.big_gap_agree == self.big_gaps
    }

    fn describe(&self, family: &str) -> String {
        format!(
            "{family}: {} instances, pass => slope >= -1e-4 on {}/{}, gap > 0.1 => slope < -1e-4 on {}/{}",
            self.instances, self.pass_agree, self.passes, self.big_gap_agree, self.big_gaps
        )
    }
}

fn small_points(problem: &Problem, oracle: &dyn DescentOracle, seed: u64) -> Vec<DVector<f64>> {
    let n = problem.n();
    let mut rng = rng_from_seed(seed ^ 0xA5A5);
    let random = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let setup = ExplorationSetup::new(
        DirectionSampler::sphere(n).unwrap(),
        StepSampler::uniform(1.0).unwrap(),
        ExplorationParams::new(1.0, 1.0, false).unwrap(),
    )
    .unwrap();
    let settled = run(problem, &FullSpace { dim: n }, oracle, &setup, random.clone(), 300, seed).unwrap().final_x;
    vec![DVector::zeros(n), random, settled]
}

fn criterion_9() -> Verdict {
    let mut tl = Agreement::default();
    let mut lts = Agreement::default();
    let mut relu = Agreement::default();
    for seed in 0..30u64 {
        let mut rng = rng_from_seed(3000 + seed);
        let n = 1 + (seed as usize) % 3;
        let mut mat = |m: usize| DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let (a_tl, a_lts, a_relu) = (mat(4), mat(8), mat(6));
        let mut vec = |m: usize, s: f64| DVector::from_fn(m, |_, _| s * rng.random_range(-1.0..1.0));
        let (b_tl, b_lts, b_relu) = (vec(4, 2.0), vec(8, 3.0), vec(6, 2.0));

        let k = 1 + (seed as usize / 3) % n;
        let p = Problem::TrimmedLasso(TrimmedLassoInstance::new(a_tl, b_tl, 0.5, k).unwrap());
        let oracle =
            DcaOracle::new(&p, DcaConfig { inner_tol: 1e-13, inner_max_iter: 100_000, ..DcaConfig::default() })
                .unwrap();
        tl.instances += 1;
        for x in small_points(&p, &oracle, seed) {
            tl.check(&p, &x, seed);
        }

        let p = Problem::Lts(LtsInstance::new(a_lts, b_lts, 2).unwrap());
        let oracle = DcaOracle::new(&p, DcaConfig::for_problem(&p)).unwrap();
        lts.instances += 1;
        for x in small_points(&p, &oracle, seed) {
            lts.check(&p, &x, seed);
        }

        let inst = ReluInstance::new(a_relu, b_relu).unwrap();
        let oracle = ProxLinearOracle::new(&inst, ProxLinearConfig::default()).unwrap();
        let p = Problem::Relu(inst.clone());
        relu.instances += 1;
        for x in small_points(&p, &oracle, seed) {
            relu.check(&p, &x, seed);
        }
    }
    Verdict {
        id: 9,
        pass: tl.ok() && lts.ok() && relu.ok(),
        detail: [tl.describe("trimmed lasso"), lts.describe("lts"), relu.describe("relu")].join("; "),
    }
}

fn criterion_10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    let configs = [
        ("trimmed_lasso", ExperimentConfig::trimmed_lasso_focused().with_scale(20, 1000)),
        ("lts", ExperimentConfig::lts_focused().with_scale(20, 1000)),
        ("relu", ExperimentConfig::relu_focused(0.4, 2.0).with_scale(20, 300)),
    ];
    for (name, cfg) in configs {
        let mut bytes = Vec::new();
        for rerun in 0..2 {
            let mut cfg = cfg.clone();
            let out = dir.path().join(format!("{name}{rerun}"));
            cfg.output_dir = Some(out.clone());
            run_experiment(&cfg).unwrap();
            bytes.push((
                std::fs::read(out.join("summary.json")).unwrap(),
                std::fs::read(out.join("instances.csv")).unwrap(),
            ));
        }
        identical &= bytes[0] == bytes[1];
    }
    Verdict {
        id: 10,
        pass: identical,
        detail: "summary.json and instances.csv compared byte for byte on three smoke configs".into(),
    }
}

fn main() -> ExitCode {
    let mut tally = InvariantTally::default();
    let mut verdicts = Vec::new();
    let mut timed = |f: &mut dyn FnMut(&mut InvariantTally) -> Verdict, tally: &mut InvariantTally| {
        let start = Instant::now();
        let mut v = f(tally);
        v.detail = format!("{} [{:.0?}]", v.detail, start.elapsed());
        println!("{}", line(&v));
        verdicts.push(v);
    };
    timed(&mut |_| criterion_1(), &mut tally);
    timed(&mut criterion_2, &mut tally);
    timed(&mut criterion_3, &mut tally);
    timed(&mut criterion_4, &mut tally);
    timed(&mut criterion_5, &mut tally);
    timed(&mut criterion_7, &mut tally);
    timed(&mut criterion_8, &mut tally);
    timed(&mut |_| criterion_9(), &mut tally);
    timed(&mut |_| criterion_10(), &mut tally);
    let six = Verdict {
        id: 6,
        pass: tally.violations == 0 && tally.runs > 0,
        detail: format!("{} violations over {} runs", tally.violations, tally.runs),
    };
    println!("{}", line(&six));
    verdicts.push(six);

    verdicts.sort_by_key(|v| v.id);
    println!();
    let mut unexpected = 0;
    for v in &verdicts {
        println!("{}", line(v));
        if !v.pass && !KNOWN_RED.contains(&v.id) {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn line(v: &Verdict) -> String {
    let known = if !v.pass && KNOWN_RED.contains(&v.id) { " (known)" } else { "" };
    format!("criterion {:>2}: {}{known}  {}", v.id, if v.pass { "PASS" } else { "FAIL" }, v.detail)
}
