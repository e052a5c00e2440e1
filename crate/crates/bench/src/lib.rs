//! Fixtures shared by the benchmarks: one instance per family at the
//! focused-experiment sizes, plus a point after a short base run.

use rep_core::harness::seeds::instance_seed;
use rep_core::problems::generate;
use rep_core::samplers::rng_from_seed;
use rep_core::{run, DVector, ExperimentConfig, ExplorationParams, ExplorationSetup, FullSpace, Problem};
use rep_core::{DirectionSampler, StepSampler};

pub struct Fixture {
    pub config: ExperimentConfig,
    pub problem: Problem,
    /// Iterate after `warm` base iterations from zero.
    pub point: DVector<f64>,
}

pub fn fixture(config: ExperimentConfig, warm: usize) -> Fixture {
    let problem = generate(&config.generator, &mut rng_from_seed(instance_seed(config.master_seed, 0)))
        .expect("preset configs are valid")
        .instance;
    let n = problem.n();
    let setup = ExplorationSetup::new(
        DirectionSampler::sphere(n).expect("n > 0"),
        StepSampler::uniform(1.0).expect("r > 0"),
        ExplorationParams::new(1.0, 1.0, false).expect("valid"),
    )
    .expect("valid");
    let point = {
        let oracle = config.oracle.build(&problem).expect("preset oracle matches family");
        run(&problem, &FullSpace { dim: n }, oracle.as_ref(), &setup, DVector::zeros(n), warm, 0)
            .expect("run succeeds")
            .final_x
    };
    Fixture { config, problem, point }
}

pub fn trimmed_lasso() -> Fixture {
    fixture(ExperimentConfig::trimmed_lasso_focused(), 200)
}

pub fn lts() -> Fixture {
    fixture(ExperimentConfig::lts_focused(), 200)
}

pub fn relu() -> Fixture {
    fixture(ExperimentConfig::relu_focused(0.4, 2.0), 100)
}
