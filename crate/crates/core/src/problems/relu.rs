use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Result};

/// `h(x) = ½ Σ (max{0, a_iᵀx} − b_i)²`, rows `a_iᵀ` of `A`.
///
/// DC split `h = f − g` with `β_i = max(b_i, 0)`, `α_i = max(−b_i, 0)`:
/// `f = ½Σ relu(a_iᵀx)² + Σ α_i relu(a_iᵀx) + ½‖b‖²`,
/// `g = Σ β_i relu(a_iᵀx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluInstance {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl ReluInstance {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        Ok(Self { a, b })
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn alpha(&self) -> DVector<f64> {
        self.b.map(|v| if v < 0.0 { -v } else { 0.0 })
    }

    pub fn beta(&self) -> DVector<f64> {
        self.b.map(|v| if v > 0.0 { v } else { 0.0 })
    }

    /// The outer function `c(u) = ½ Σ (max{0, u_i} − b_i)²`.
    pub fn outer(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.iter().zip(self.b.iter()).map(|(&ui, &bi)| (ui.max(0.0) - bi).powi(2)).sum::<f64>()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.outer(&(&self.a * x))
    }

    /// `(f(x), g(x))` of the DC split.
    ///
    /// The constant `½‖b‖²` is carried by `f` so that `h = f − g` exactly.
    pub fn dc_parts(&self, x: &DVector<f64>) -> (f64, f64) {
        let z = &self.a * x;
        let mut f = 0.5 * self.b.norm_squared();
        let mut g = 0.0;
        for (&zi, &bi) in z.iter().zip(self.b.iter()) {
            let p = zi.max(0.0);
            f += 0.5 * p * p + (-bi).max(0.0) * p;
            g += bi.max(0.0) * p;
        }
        (f, g)
    }
}
