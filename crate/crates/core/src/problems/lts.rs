use nalgebra::{DMatrix, DVector};

use super::top_k_sum;
use crate::error::{check_dim, Error, Result};
use crate::linalg::top_k_indices;

/// `h(x) = ½‖Ax − b‖² − ½·top_q((Ax − b)²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtsInstance {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub q: usize,
}

impl LtsInstance {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, q: usize) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        if q == 0 || q > a.nrows() {
            return Err(Error::invalid("q", format!("need 1 <= q <= m = {}, got {q}", a.nrows())));
        }
        Ok(Self { a, b, q })
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
        let r = self.residual(x);
        let sq: Vec<f64> = r.iter().map(|v| v * v).collect();
        0.5 * r.norm_squared() - 0.5 * top_k_sum(&sq, self.q).expect("q validated at construction")
    }

    /// `½‖Ax − b‖²`.
    pub fn f(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.residual(x).norm_squared()
    }

    /// `½·top_q((Ax − b)²)`.
    pub fn g(&self, x: &DVector<f64>) -> f64 {
        let sq: Vec<f64> = self.residual(x).iter().map(|v| v * v).collect();
        0.5 * top_k_sum(&sq, self.q).expect("q validated at construction")
    }

    /// Top-q squared-residual row set, lowest index first among ties.
    pub fn trimmed_rows(&self, x: &DVector<f64>) -> Vec<usize> {
        let sq: Vec<f64> = self.residual(x).iter().map(|v| v * v).collect();
        top_k_indices(&sq, self.q)
    }

    /// Element of `∂g(x)`: `Aᵀw` with `w = r` on the trimmed rows.
    pub fn g_subgradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = self.residual(x);
        let mut w = DVector::zeros(r.len());
        for i in self.trimmed_rows(x) {
            w[i] = r[i];
        }
        self.a.tr_mul(&w)
    }
}
