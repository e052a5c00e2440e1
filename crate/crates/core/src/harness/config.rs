//! Experiment configuration, read from a flat `key = value` TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::CertifierTolerances;
use crate::error::{Error, Result};
use crate::oracles::{DcaConfig, InnerSolver, OracleSpec, ProxLinearConfig};
use crate::problems::{Design, Family, GeneratorParams, RELU_TARGET_NOISE_STD};
use crate::samplers::DirectionKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub generator: GeneratorParams,
    pub n_instances: usize,
    pub aug_seeds: Vec<u64>,
    pub n_outer: usize,
    pub direction: DirectionKind,
    pub gamma: f64,
    pub r: f64,
    pub oracle: OracleSpec,
    pub master_seed: u64,
    pub tolerances: CertifierTolerances,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip)]
    pub save_trajectories: bool,
}

/// File-level keys; everything optional so that validation can report
/// exactly what is missing.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    family: Option<String>,
    m: Option<usize>,
    n: Option<usize>,
    k: Option<usize>,
    lambda: Option<f64>,
    noise_std: Option<f64>,
    q: Option<usize>,
    sigma_clean: Option<f64>,
    outlier_std: Option<f64>,
    q_param: Option<f64>,
    rho_b: Option<f64>,
    design: Option<String>,
    n_instances: Option<usize>,
    aug_seeds: Option<Vec<u64>>,
    #[serde(alias = "N_outer", alias = "N")]
    n_outer: Option<usize>,
    sampler: Option<String>,
    mu: Option<f64>,
    r: Option<f64>,
    gamma: Option<f64>,
    oracle: Option<String>,
    rho_prox: Option<f64>,
    inner_tol: Option<f64>,
    inner_max_iter: Option<usize>,
    dca_mu: Option<f64>,
    master_seed: Option<u64>,
    output_dir: Option<PathBuf>,
    save_trajectories: Option<bool>,
}

fn require<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let family: Family = require(raw.family, "family")?.parse()?;
        let m = require(raw.m, "m")?;
        let n = require(raw.n, "n")?;
        let design: Design = raw.design.as_deref().map_or(Ok(Design::default()), str::parse)?;
        let generator = match family {
            Family::TrimmedLasso => GeneratorParams::TrimmedLasso {
                m,
                n,
                k: require(raw.k, "k")?,
                lambda: raw.lambda.unwrap_or(1.0),
                noise_std: raw.noise_std.unwrap_or(0.1),
                design,
            },
            Family::Lts => GeneratorParams::Lts {
                m,
                n,
                q: require(raw.q, "q")?,
                sigma_clean: raw.sigma_clean.unwrap_or(4.0),
                outlier_std: raw.outlier_std.unwrap_or(10.0),
                design,
            },
            Family::Relu => GeneratorParams::Relu {
                m,
                n,
                q_param: require(raw.q_param, "q_param")?,
                rho_b: require(raw.rho_b, "rho_b")?,
                target_noise_std: RELU_TARGET_NOISE_STD,
                design,
            },
        };

        let direction = match raw.sampler.as_deref().unwrap_or("sphere") {
            "sphere" => DirectionKind::Sphere,
            "gauss_axis" => DirectionKind::GaussAxis { mu: require(raw.mu, "mu")? },
            other => return Err(Error::Config(format!("unknown sampler `{other}`"))),
        };

        let default_oracle = if family == Family::Relu { "prox_linear" } else { "dca" };
        let oracle = match raw.oracle.as_deref().unwrap_or(default_oracle) {
            "dca" => {
                let defaults = DcaConfig::default();
                let inner_solver = if family == Family::Lts {
                    InnerSolver::ClosedFormQuadratic
                } else {
                    InnerSolver::ProximalGradientL1
                };
                OracleSpec::Dca(DcaConfig {
                    inner_solver,
                    inner_tol: raw.inner_tol.unwrap_or(defaults.inner_tol),
                    inner_max_iter: raw.inner_max_iter.unwrap_or(defaults.inner_max_iter),
                    mu: raw.dca_mu.unwrap_or(0.0),
                })
            }
            "prox_linear" => {
                let defaults = ProxLinearConfig::default();
                OracleSpec::ProxLinear(ProxLinearConfig {
                    rho_prox: raw.rho_prox.unwrap_or(defaults.rho_prox),
                    inner_max_iter: raw.inner_max_iter.unwrap_or(defaults.inner_max_iter),
                    inner_tol: raw.inner_tol.unwrap_or(defaults.inner_tol),
                })
            }
            other => return Err(Error::Config(format!("unknown oracle `{other}`"))),
        };

        let cfg = Self {
            generator,
            n_instances: require(raw.n_instances, "n_instances")?,
            aug_seeds: raw.aug_seeds.unwrap_or_else(|| vec![0, 1, 2]),
            n_outer: require(raw.n_outer, "n_outer")?,
            direction,
            gamma: raw.gamma.unwrap_or(1.0),
            r: raw.r.unwrap_or(1.0),
            oracle,
            master_seed: raw.master_seed.unwrap_or(0),
            tolerances: CertifierTolerances::default(),
            output_dir: raw.output_dir,
            save_trajectories: raw.save_trajectories.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn family(&self) -> Family {
        self.generator.family()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.generator.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.n_instances == 0 {
            return bad("n_instances must be at least 1".into());
        }
        if self.aug_seeds.is_empty() {
            return bad("aug_seeds must be nonempty".into());
        }
        if self.n_outer == 0 {
            return bad("n_outer must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be finite and positive, got {}", self.gamma));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad(format!("r must be finite and positive, got {}", self.r));
        }
        if let DirectionKind::GaussAxis { mu } = self.direction {
            if !(mu >= 1.0 && mu.is_finite()) {
                return bad(format!("mu must be >= 1, got {mu}"));
            }
        }
        match (&self.oracle, self.family()) {
            (OracleSpec::Dca(c), Family::TrimmedLasso | Family::Lts) => {
                c.validate().map_err(|e| Error::Config(e.to_string()))?
            }
            (OracleSpec::ProxLinear(c), Family::Relu) => c.validate().map_err(|e| Error::Config(e.to_string()))?,
            (spec, family) => return bad(format!("oracle `{}` does not support family `{family}`", spec.name())),
        }
        Ok(())
    }

    /// Trimmed lasso, m=50, n=100, k=5, λ=1, noise 0.1, N=5000, gauss-axis μ=300.
    pub fn trimmed_lasso_focused() -> Self {
        Self {
            generator: GeneratorParams::TrimmedLasso {
                m: 50,
                n: 100,
                k: 5,
                lambda: 1.0,
                noise_std: 0.1,
                design: Design::Scaled,
            },
            n_instances: 100,
            aug_seeds: vec![0, 1, 2],
            n_outer: 5000,
            direction: DirectionKind::GaussAxis { mu: 300.0 },
            gamma: 1.0,
            r: 1.0,
            oracle: OracleSpec::Dca(DcaConfig::default()),
            master_seed: 0,
            tolerances: CertifierTolerances::default(),
            output_dir: None,
            save_trajectories: false,
        }
    }

    /// LTS, m=100, n=50, q=10, σ_clean=4, outliers std 10, N=5000, sphere.
    pub fn lts_focused() -> Self {
        Self {
            generator: GeneratorParams::Lts {
                m: 100,
                n: 50,
                q: 10,
                sigma_clean: 4.0,
                outlier_std: 10.0,
                design: Design::Scaled,
            },
            direction: DirectionKind::Sphere,
            oracle: OracleSpec::Dca(DcaConfig {
                inner_solver: InnerSolver::ClosedFormQuadratic,
                ..DcaConfig::default()
            }),
            ..Self::trimmed_lasso_focused()
        }
    }

    /// ReLU regression, m=200, n=50, N_outer=1000, ρ_prox=0.1, sphere.
    pub fn relu_focused(q_param: f64, rho_b: f64) -> Self {
        Self {
            generator: GeneratorParams::Relu {
                m: 200,
                n: 50,
                q_param,
                rho_b,
                target_noise_std: RELU_TARGET_NOISE_STD,
                design: Design::Scaled,
            },
            n_outer: 1000,
            direction: DirectionKind::Sphere,
            oracle: OracleSpec::ProxLinear(ProxLinearConfig::default()),
            ..Self::trimmed_lasso_focused()
        }
    }

    pub fn with_scale(mut self, n_instances: usize, n_outer: usize) -> Self {
        self.n_instances = n_instances;
        self.n_outer = n_outer;
        self
    }
}
