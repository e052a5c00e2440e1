//! Direction and step-size distributions for the exploration step.
//!
//! Samplers are immutable descriptors; the generator is always owned by the
//! caller so that one descriptor can serve many concurrent runs.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator used for every seeded stream in the crate.
pub type RunRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws below this norm are discarded and redrawn.
const DEGENERATE_NORM: f64 = 1e-12;

/// Uniform direction on the unit sphere `S^{n-1}`.
pub fn sample_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    assert!(n >= 1, "sphere dimension must be positive");
    loop {
        let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm >= DEGENERATE_NORM {
            return g / norm;
        }
    }
}

/// Axis-biased direction: pick a coordinate uniformly, inflate its Gaussian
/// component by `mu`, normalize. At `mu = 1` this is the uniform sphere law.
pub fn sample_gauss_axis<R: Rng + ?Sized>(rng: &mut R, n: usize, mu: f64) -> DVector<f64> {
    assert!(n >= 1, "sphere dimension must be positive");
    assert!(mu >= 1.0, "gauss-axis scale must be at least 1");
    loop {
        let axis = rng.random_range(0..n);
        let mut g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        g[axis] *= mu;
        let norm = g.norm();
        if norm >= DEGENERATE_NORM {
            return g / norm;
        }
    }
}

/// Uniform step in `[0, r]`.
pub fn sample_step<R: Rng + ?Sized>(rng: &mut R, r: f64) -> f64 {
    debug_assert!(r > 0.0);
    rng.random::<f64>() * r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sampler", rename_all = "snake_case")]
pub enum DirectionKind {
    Sphere,
    GaussAxis { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionSampler {
    kind: DirectionKind,
    dim: usize,
}

impl DirectionSampler {
    pub fn sphere(dim: usize) -> Result<Self> {
        Self::new(DirectionKind::Sphere, dim)
    }

    pub fn gauss_axis(dim: usize, mu: f64) -> Result<Self> {
        Self::new(DirectionKind::GaussAxis { mu }, dim)
    }

    pub fn new(kind: DirectionKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("n", "direction dimension must be at least 1"));
        }
        if let DirectionKind::GaussAxis { mu } = kind {
            if !(mu >= 1.0 && mu.is_finite()) {
                return Err(Error::invalid("mu", format!("must be finite and >= 1, got {mu}")));
            }
        }
        Ok(Self { kind, dim })
    }

    pub fn kind(&self) -> DirectionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match self.kind {
            DirectionKind::Sphere => sample_sphere(rng, self.dim),
            DirectionKind::GaussAxis { mu } => sample_gauss_axis(rng, self.dim, mu),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSampler {
    r: f64,
}

impl StepSampler {
    pub fn uniform(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid("r", format!("must be finite and positive, got {r}")));
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_step(rng, self.r)
    }
}
