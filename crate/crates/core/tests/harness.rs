use proptest::prelude::*;
use rand::Rng;
use rep_core::diagnostics::certify_trimmed_lasso;
use rep_core::harness::{
    mcnemar_exact_one_sided, mcnemar_log_p, read_instances_csv, run_experiment, verify_rate_bound, InstanceOutcome,
};
use rep_core::oracles::DcaOracle;
use rep_core::problems::TrimmedLassoInstance;
use rep_core::samplers::rng_from_seed;
use rep_core::{
    run, CertifierTolerances, DMatrix, DStatReport, DVector, DcaConfig, DirectionSampler, ExperimentConfig,
    ExplorationParams, ExplorationSetup, FullSpace, Label, Problem, StepSampler,
};

/// `P(Bin(n, ½) ≥ w)` from exact integer binomial coefficients.
fn binomial_tail_exact(w: u64, l: u64) -> f64 {
    let n = w + l;
    let mut c: u128 = 1;
    let mut total: u128 = 0;
    for i in 0..=n {
        if i >= w {
            total += c;
        }
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    total as f64 / 2f64.powi(n as i32)
}

#[test]
fn mcnemar_without_losses_is_a_power_of_two() {
    for w in 0..=1000u64 {
        let log_p = mcnemar_log_p(w, 0);
        let expected = -(w as f64) * std::f64::consts::LN_2;
        assert!((log_p - expected).abs() <= 1e-15 * expected.abs().max(1.0), "w = {w}");
    }
    assert_eq!(mcnemar_exact_one_sided(0, 0), 1.0);
    assert_eq!(mcnemar_exact_one_sided(9, 0), 1.953125e-3);
}

#[test]
fn mcnemar_matches_integer_binomial_tails() {
    for w in 0..=60u64 {
        for l in 0..=60u64 {
            let got = mcnemar_exact_one_sided(w, l);
            let want = binomial_tail_exact(w, l);
            assert!((got - want).abs() <= 1e-12 * want, "({w}, {l}): {got} vs {want}");
        }
    }
}

proptest! {
    #[test]
    fn mcnemar_is_a_probability_and_falls_with_wins(w in 0u64..2000, l in 0u64..2000) {
        let p = mcnemar_exact_one_sided(w, l);
        prop_assert!(p <= 1.0);
        prop_assert!(mcnemar_log_p(w, l).is_finite());
        prop_assert!(mcnemar_log_p(w + 1, l) <= mcnemar_log_p(w, l));
        prop_assert!(mcnemar_log_p(w, l + 1) >= mcnemar_log_p(w, l));
    }
}

fn small_config(n_instances: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml_str(
        r#"
        family = "trimmed_lasso"
        m = 10
        n = 20
        k = 2
        n_instances = 4
        n_outer = 60
        sampler = "gauss_axis"
        mu = 300.0
        master_seed = 17
        "#,
    )
    .unwrap();
    cfg.n_instances = n_instances;
    cfg
}

#[test]
fn experiment_outputs_round_trip_and_replay() {
    let cfg = small_config(6);
    let report = run_experiment(&cfg).unwrap();
    let again = run_experiment(&cfg).unwrap();
    assert_eq!(report.summary_json().unwrap(), again.summary_json().unwrap());
    assert_eq!(report.instances_csv(), again.instances_csv());

    let s = &report.summary;
    assert_eq!(s.wins + s.ties + s.losses, s.completed);
    assert_eq!(s.completed, 6);
    assert_eq!(s.monotonicity_violations, 0);
    assert_eq!(s.budget_violations, 0);

    let rows = read_instances_csv(report.instances_csv().as_bytes()).unwrap();
    assert_eq!(rows.len(), 6);
    for (row, outcome) in rows.iter().zip(&report.outcomes) {
        let r = outcome.completed().unwrap();
        assert_eq!(row.instance_id, r.instance_id);
        assert_eq!(row.h_base, Some(r.h_base));
        assert_eq!(row.h_aug, r.h_aug_per_seed.iter().map(|&v| Some(v)).collect::<Vec<_>>());
        assert_eq!(row.delta, Some(r.delta));
        assert_eq!(Label::parse(&row.label), Some(r.label));
        assert_eq!(row.dstat_base_pass, Some(r.dstat_base.pass));
        assert_eq!(row.dstat_base_gap, Some(r.dstat_base.gap));
        assert_eq!(row.dstat_aug_pass, Some(r.dstat_aug.pass));
        assert_eq!(row.dstat_aug_gap, Some(r.dstat_aug.gap));
    }
}

#[test]
fn instance_results_do_not_depend_on_experiment_size() {
    let four = run_experiment(&small_config(4)).unwrap();
    let six = run_experiment(&small_config(6)).unwrap();
    for (a, b) in four.outcomes.iter().zip(&six.outcomes) {
        assert_eq!(a.completed().unwrap(), b.completed().unwrap());
    }
}

#[test]
fn failed_instances_are_written_as_error_rows() {
    let mut report = run_experiment(&small_config(2)).unwrap();
    report.outcomes.push(InstanceOutcome::Failed { instance_id: 2, error: "boom".into() });
    let rows = read_instances_csv(report.instances_csv().as_bytes()).unwrap();
    assert_eq!(rows[2].label, "error");
    assert_eq!(rows[2].h_base, None);
    assert!(rows[2].h_aug.iter().all(Option::is_none));
}

#[test]
fn dstat_report_json_round_trips() {
    let mut rng = rng_from_seed(3);
    let a = DMatrix::from_fn(4, 6, |_, _| rng.random_range(-1.0..1.0));
    let b = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
    let inst = TrimmedLassoInstance::new(a, b, 0.7, 2).unwrap();
    let x = DVector::from_vec(vec![0.1, -1.0 / 3.0, 0.0, 2.0, 1e-300, -7.25]);
    let report = certify_trimmed_lasso(&inst, &x, &CertifierTolerances::default());
    let text = serde_json::to_string(&report).unwrap();
    let back: DStatReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
}

#[test]
fn config_file_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    std::fs::write(&path, "family = \"lts\"\nm = 30\nn = 5\nq = 3\nn_instances = 2\nn_outer = 10\n").unwrap();
    let cfg = ExperimentConfig::from_path(&path).unwrap();
    assert_eq!(cfg.generator.dims(), (30, 5));
    assert_eq!(cfg.aug_seeds, vec![0, 1, 2]);
    assert!(ExperimentConfig::from_path(&dir.path().join("missing.toml")).unwrap_err().is_config_error());
}

#[test]
fn rate_bound_holds_on_a_shifted_dca_run() {
    let mut rng = rng_from_seed(8);
    let a = DMatrix::from_fn(15, 20, |_, _| rng.random_range(-1.0..1.0));
    let b = DVector::from_fn(15, |_, _| rng.random_range(-2.0..2.0));
    let p = Problem::TrimmedLasso(TrimmedLassoInstance::new(a, b, 1.0, 3).unwrap());
    let oracle = DcaOracle::new(&p, DcaConfig { mu: 0.5, ..DcaConfig::default() }).unwrap();
    let setup = ExplorationSetup::new(
        DirectionSampler::gauss_axis(20, 300.0).unwrap(),
        StepSampler::uniform(1.0).unwrap(),
        ExplorationParams::default(),
    )
    .unwrap();
    let traj = run(&p, &FullSpace { dim: 20 }, &oracle, &setup, DVector::zeros(20), 200, 1).unwrap();
    assert!(verify_rate_bound(&traj, 1.0, 0.0));
    // a bound built on a larger modulus than the oracle has must eventually fail
    assert!(!verify_rate_bound(&traj, 1e6, 0.0));
}

#[test]
fn shipped_configs_match_the_presets() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let load = |name: &str| ExperimentConfig::from_path(&dir.join(name)).unwrap();
    assert_eq!(load("trimmed_lasso.toml"), ExperimentConfig::trimmed_lasso_focused());
    assert_eq!(load("lts.toml"), ExperimentConfig::lts_focused());
    assert_eq!(load("relu_q02.toml"), ExperimentConfig::relu_focused(0.2, 2.0));
    assert_eq!(load("relu_q04.toml"), ExperimentConfig::relu_focused(0.4, 2.0));
    let smoke = load("smoke.toml");
    assert_eq!(smoke.n_instances, 20);
    assert_eq!(smoke.generator, ExperimentConfig::trimmed_lasso_focused().generator);
}
