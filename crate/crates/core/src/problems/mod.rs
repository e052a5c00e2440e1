//! Benchmark objectives: trimmed lasso, least trimmed squares, ReLU regression.

mod lts;
mod relu;
mod trimmed_lasso;

pub use lts::LtsInstance;
pub use relu::ReluInstance;
pub use trimmed_lasso::TrimmedLassoInstance;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::explore::Objective;

/// Sum of the `k` largest entries.
pub fn top_k_sum(values: &[f64], k: usize) -> Result<f64> {
    if k > values.len() {
        return Err(Error::Precondition(format!("top_k with k = {k} on {} values", values.len())));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted[..k].iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    TrimmedLasso,
    Lts,
    Relu,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::TrimmedLasso => "trimmed_lasso",
            Family::Lts => "lts",
            Family::Relu => "relu",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trimmed_lasso" => Ok(Family::TrimmedLasso),
            "lts" => Ok(Family::Lts),
            "relu" => Ok(Family::Relu),
            other => Err(Error::Config(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    TrimmedLasso(TrimmedLassoInstance),
    Lts(LtsInstance),
    Relu(ReluInstance),
}

impl Problem {
    pub fn family(&self) -> Family {
        match self {
            Problem::TrimmedLasso(_) => Family::TrimmedLasso,
            Problem::Lts(_) => Family::Lts,
            Problem::Relu(_) => Family::Relu,
        }
    }

    pub fn design(&self) -> &DMatrix<f64> {
        match self {
            Problem::TrimmedLasso(p) => &p.a,
            Problem::Lts(p) => &p.a,
            Problem::Relu(p) => &p.a,
        }
    }

    pub fn targets(&self) -> &DVector<f64> {
        match self {
            Problem::TrimmedLasso(p) => &p.b,
            Problem::Lts(p) => &p.b,
            Problem::Relu(p) => &p.b,
        }
    }

    pub fn m(&self) -> usize {
        self.design().nrows()
    }

    pub fn n(&self) -> usize {
        self.design().ncols()
    }
}

impl Objective for Problem {
    fn dim(&self) -> usize {
        self.n()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Problem::TrimmedLasso(p) => p.value(x),
            Problem::Lts(p) => p.value(x),
            Problem::Relu(p) => p.value(x),
        }
    }
}

impl Objective for TrimmedLassoInstance {
    fn dim(&self) -> usize {
        self.n()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        TrimmedLassoInstance::value(self, x)
    }
}

impl Objective for LtsInstance {
    fn dim(&self) -> usize {
        self.n()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        LtsInstance::value(self, x)
    }
}

impl Objective for ReluInstance {
    fn dim(&self) -> usize {
        self.n()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        ReluInstance::value(self, x)
    }
}

// ---------------------------------------------------------------------------
// generators

/// Entry distribution of the design matrix `A`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// `N(0, 1/m)`: columns have unit expected norm.
    #[default]
    Scaled,
    /// `N(0, 1)`.
    Standard,
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaled" => Ok(Design::Scaled),
            "standard" => Ok(Design::Standard),
            other => Err(Error::Config(format!("unknown design `{other}`"))),
        }
    }
}

/// Generator parameters for one family, recorded alongside each instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GeneratorParams {
    TrimmedLasso {
        m: usize,
        n: usize,
        k: usize,
        lambda: f64,
        noise_std: f64,
        #[serde(default)]
        design: Design,
    },
    Lts {
        m: usize,
        n: usize,
        q: usize,
        sigma_clean: f64,
        outlier_std: f64,
        #[serde(default)]
        design: Design,
    },
    Relu {
        m: usize,
        n: usize,
        q_param: f64,
        rho_b: f64,
        target_noise_std: f64,
        #[serde(default)]
        design: Design,
    },
}

/// Noise on ReLU targets before sign flips and scaling.
pub const RELU_TARGET_NOISE_STD: f64 = 0.1;

impl GeneratorParams {
    pub fn family(&self) -> Family {
        match self {
            GeneratorParams::TrimmedLasso { .. } => Family::TrimmedLasso,
            GeneratorParams::Lts { .. } => Family::Lts,
            GeneratorParams::Relu { .. } => Family::Relu,
        }
    }

    pub fn design(&self) -> Design {
        match *self {
            GeneratorParams::TrimmedLasso { design, .. }
            | GeneratorParams::Lts { design, .. }
            | GeneratorParams::Relu { design, .. } => design,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match *self {
            GeneratorParams::TrimmedLasso { m, n, .. }
            | GeneratorParams::Lts { m, n, .. }
            | GeneratorParams::Relu { m, n, .. } => (m, n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = self.dims();
        if m == 0 || n == 0 {
            return Err(Error::invalid("m/n", "dimensions must be positive"));
        }
        match *self {
            GeneratorParams::TrimmedLasso { k, lambda, noise_std, .. } => {
                if k == 0 || k > n {
                    return Err(Error::invalid("k", format!("need 1 <= k <= n, got {k}")));
                }
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::invalid("lambda", "must be positive"));
                }
                if !(noise_std >= 0.0 && noise_std.is_finite()) {
                    return Err(Error::invalid("noise_std", "must be nonnegative"));
                }
            }
            GeneratorParams::Lts { q, sigma_clean, outlier_std, .. } => {
                if q == 0 || q > m {
                    return Err(Error::invalid("q", format!("need 1 <= q <= m, got {q}")));
                }
                if !(sigma_clean >= 0.0 && outlier_std >= 0.0 && sigma_clean.is_finite() && outlier_std.is_finite()) {
                    return Err(Error::invalid("sigma_clean/outlier_std", "must be nonnegative"));
                }
            }
            GeneratorParams::Relu { q_param, rho_b, target_noise_std, .. } => {
                if !(0.0..=1.0).contains(&q_param) {
                    return Err(Error::invalid("q_param", format!("must lie in [0, 1], got {q_param}")));
                }
                if !(rho_b > 0.0 && rho_b.is_finite()) {
                    return Err(Error::invalid("rho_b", "must be positive"));
                }
                if !(target_noise_std >= 0.0 && target_noise_std.is_finite()) {
                    return Err(Error::invalid("target_noise_std", "must be nonnegative"));
                }
            }
        }
        Ok(())
    }
}

/// A generated instance with its planted ground truth.
#[derive(Debug, Clone)]
pub struct Generated<T> {
    pub instance: T,
    pub planted: DVector<f64>,
    /// Outlier rows (LTS) or sign-flipped rows (ReLU); empty for trimmed lasso.
    pub flagged_rows: Vec<usize>,
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize, design: Design) -> DMatrix<f64> {
    let scale = match design {
        Design::Scaled => 1.0 / (m as f64).sqrt(),
        Design::Standard => 1.0,
    };
    // row-major fill so the stream order matches the serialized layout
    let data: Vec<f64> = (0..m * n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
    DMatrix::from_row_slice(m, n, &data)
}

fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, std: f64) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| std * rng.sample::<f64, _>(StandardNormal)))
}

/// Planted `k`-sparse ±1 signal, `b = Ax* + ε`.
pub fn generate_trimmed_lasso<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    k: usize,
    lambda: f64,
    noise_std: f64,
    design: Design,
    rng: &mut R,
) -> Result<Generated<TrimmedLassoInstance>> {
    GeneratorParams::TrimmedLasso { m, n, k, lambda, noise_std, design }.validate()?;
    let a = gaussian_matrix(rng, m, n, design);
    let mut x_star = DVector::zeros(n);
    let mut support = sample_indices(rng, n, k).into_vec();
    support.sort_unstable();
    for &i in &support {
        x_star[i] = if rng.random::<bool>() { 1.0 } else { -1.0 };
    }
    let b = &a * &x_star + gaussian_vector(rng, m, noise_std);
    Ok(Generated { instance: TrimmedLassoInstance::new(a, b, lambda, k)?, planted: x_star, flagged_rows: Vec::new() })
}

/// Dense planted `x* ~ N(0, I)`; clean rows carry `N(0, σ_clean²)` noise and
/// `q` uniformly chosen rows carry `N(0, outlier_std²)` noise instead.
pub fn generate_lts<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    q: usize,
    sigma_clean: f64,
    outlier_std: f64,
    design: Design,
    rng: &mut R,
) -> Result<Generated<LtsInstance>> {
    GeneratorParams::Lts { m, n, q, sigma_clean, outlier_std, design }.validate()?;
    let a = gaussian_matrix(rng, m, n, design);
    let x_star = gaussian_vector(rng, n, 1.0);
    let clean = &a * &x_star;
    let mut outliers = sample_indices(rng, m, q).into_vec();
    outliers.sort_unstable();
    let mut is_outlier = vec![false; m];
    for &i in &outliers {
        is_outlier[i] = true;
    }
    let b = DVector::from_iterator(
        m,
        (0..m).map(|i| {
            let std = if is_outlier[i] { outlier_std } else { sigma_clean };
            clean[i] + std * rng.sample::<f64, _>(StandardNormal)
        }),
    );
    Ok(Generated { instance: LtsInstance::new(a, b, q)?, planted: x_star, flagged_rows: outliers })
}

/// `b = ρ_b·(relu(Ax*) + ε)` with a `⌈q_param·m⌉` subset of targets forced
/// negative before scaling.
pub fn generate_relu<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    q_param: f64,
    rho_b: f64,
    design: Design,
    rng: &mut R,
) -> Result<Generated<ReluInstance>> {
    GeneratorParams::Relu { m, n, q_param, rho_b, target_noise_std: RELU_TARGET_NOISE_STD, design }.validate()?;
    let a = gaussian_matrix(rng, m, n, design);
    let x_star = gaussian_vector(rng, n, 1.0);
    let clean = (&a * &x_star).map(|v| v.max(0.0));
    let mut b = clean + gaussian_vector(rng, m, RELU_TARGET_NOISE_STD);
    let n_neg = ((q_param * m as f64).ceil() as usize).min(m);
    let mut flipped = sample_indices(rng, m, n_neg).into_vec();
    flipped.sort_unstable();
    for &i in &flipped {
        b[i] = -b[i].abs();
    }
    b *= rho_b;
    Ok(Generated { instance: ReluInstance::new(a, b)?, planted: x_star, flagged_rows: flipped })
}

/// Generates one instance of the family described by `params`.
pub fn generate<R: Rng + ?Sized>(params: &GeneratorParams, rng: &mut R) -> Result<Generated<Problem>> {
    Ok(match *params {
        GeneratorParams::TrimmedLasso { m, n, k, lambda, noise_std, design } => {
            let g = generate_trimmed_lasso(m, n, k, lambda, noise_std, design, rng)?;
            Generated { instance: Problem::TrimmedLasso(g.instance), planted: g.planted, flagged_rows: g.flagged_rows }
        }
        GeneratorParams::Lts { m, n, q, sigma_clean, outlier_std, design } => {
            let g = generate_lts(m, n, q, sigma_clean, outlier_std, design, rng)?;
            Generated { instance: Problem::Lts(g.instance), planted: g.planted, flagged_rows: g.flagged_rows }
        }
        GeneratorParams::Relu { m, n, q_param, rho_b, design, .. } => {
            let g = generate_relu(m, n, q_param, rho_b, design, rng)?;
            Generated { instance: Problem::Relu(g.instance), planted: g.planted, flagged_rows: g.flagged_rows }
        }
    })
}

// ---------------------------------------------------------------------------
// instance files

/// On-disk instance: `{type, m, n, params, seed, A, b}` with `A` as an array
/// of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(rename = "type")]
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub params: Map<String, Value>,
    pub seed: Option<u64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl InstanceFile {
    pub fn from_problem(problem: &Problem, seed: Option<u64>, generator: Option<&GeneratorParams>) -> Self {
        let mut params = Map::new();
        match problem {
            Problem::TrimmedLasso(p) => {
                params.insert("lambda".into(), json!(p.lambda));
                params.insert("k".into(), json!(p.k));
            }
            Problem::Lts(p) => {
                params.insert("q".into(), json!(p.q));
            }
            Problem::Relu(_) => {}
        }
        if let Some(g) = generator {
            if let Ok(Value::Object(extra)) = serde_json::to_value(g) {
                for (key, value) in extra {
                    if key != "family" && key != "m" && key != "n" {
                        params.entry(key).or_insert(value);
                    }
                }
            }
        }
        let a = problem.design();
        Self {
            family: problem.family(),
            m: a.nrows(),
            n: a.ncols(),
            params,
            seed,
            a: a.row_iter().map(|row| row.iter().copied().collect()).collect(),
            b: problem.targets().iter().copied().collect(),
        }
    }

    pub fn to_problem(&self) -> Result<Problem> {
        if self.a.len() != self.m || self.a.iter().any(|row| row.len() != self.n) {
            return Err(Error::Format(format!("matrix A is not {}x{}", self.m, self.n)));
        }
        if self.b.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: self.b.len() });
        }
        let flat: Vec<f64> = self.a.iter().flatten().copied().collect();
        let a = DMatrix::from_row_slice(self.m, self.n, &flat);
        let b = DVector::from_vec(self.b.clone());
        let num = |key: &'static str| -> Result<f64> {
            self.params
                .get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Format(format!("instance params missing `{key}`")))
        };
        let count = |key: &'static str| -> Result<usize> {
            self.params
                .get(key)
                .and_then(Value::as_u64)
                .map(|v| v as usize)
                .ok_or_else(|| Error::Format(format!("instance params missing integer `{key}`")))
        };
        Ok(match self.family {
            Family::TrimmedLasso => {
                Problem::TrimmedLasso(TrimmedLassoInstance::new(a, b, num("lambda")?, count("k")?)?)
            }
            Family::Lts => Problem::Lts(LtsInstance::new(a, b, count("q")?)?),
            Family::Relu => Problem::Relu(ReluInstance::new(a, b)?),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
