use nalgebra::{DMatrix, DVector};

use super::top_k_sum;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{sign, top_k_indices};

/// `h(x) = ½‖Ax − b‖² + λ(‖x‖₁ − top_k|x|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimmedLassoInstance {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub lambda: f64,
    pub k: usize,
}

impl TrimmedLassoInstance {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, lambda: f64, k: usize) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
        }
        if k == 0 || k > a.ncols() {
            return Err(Error::invalid("k", format!("need 1 <= k <= n = {}, got {k}", a.ncols())));
        }
        Ok(Self { a, b, lambda, k })
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.f1(x) - self.f2(x)
    }

    /// `½‖Ax − b‖² + λ‖x‖₁`.
    pub fn f1(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.residual(x).norm_squared() + self.lambda * x.lp_norm(1)
    }

    /// `λ·top_k(|x|)`.
    pub fn f2(&self, x: &DVector<f64>) -> f64 {
        let mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        self.lambda * top_k_sum(&mags, self.k).expect("k validated at construction")
    }

    /// Element of `∂f₂(x)`: `λ·sign(x_i)` on a top-k magnitude set (lowest
    /// index wins ties), zero elsewhere.
    pub fn g_subgradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let mut g = DVector::zeros(x.len());
        for i in top_k_indices(&mags, self.k) {
            g[i] = self.lambda * sign(x[i]);
        }
        g
    }
}
