//! Exact DC inclusion check for ReLU regression in vertex form:
//! `Γ = max_{λ ∈ {0,1}^{|I₀β|}} min_{μ ∈ [0,1]^{|I₀α|}} ‖D + G_β λ − F_α μ‖₂`.

use nalgebra::{DMatrix, DVector};

use super::box_lsq::box_constrained_lsq;
use super::{Anomaly, CertifierTolerances, DStatReport};
use crate::problems::{Family, ReluInstance};

/// Relative kink bandwidth on `z = Ax`.
pub const KINK_BANDWIDTH: f64 = 1e-6;

pub fn certify_relu(inst: &ReluInstance, x: &DVector<f64>, tol: &CertifierTolerances) -> DStatReport {
    let z = &inst.a * x;
    let tau = KINK_BANDWIDTH * z.amax().max(1.0);
    let alpha = inst.alpha();
    let beta = inst.beta();
    let n = inst.n();

    let mut d = DVector::zeros(n);
    let mut kink_alpha = Vec::new();
    let mut kink_beta = Vec::new();
    for i in 0..inst.m() {
        if z[i] > tau {
            // g₀ − f₀ contribution: (β_i − z_i − α_i)·a_i
            let coef = beta[i] - z[i] - alpha[i];
            d += inst.a.row(i).transpose() * coef;
        } else if z[i].abs() <= tau {
            if alpha[i] > 0.0 {
                kink_alpha.push(i);
            } else if beta[i] > 0.0 {
                kink_beta.push(i);
            }
        }
    }

    let columns = |rows: &[usize], weights: &DVector<f64>| {
        DMatrix::from_fn(n, rows.len(), |r, c| weights[rows[c]] * inst.a[(rows[c], r)])
    };
    let g_beta = columns(&kink_beta, &beta);
    let f_alpha = columns(&kink_alpha, &alpha);
    let vertex_gap = |lambda_bits: u64| {
        let mut target = d.clone();
        for j in 0..kink_beta.len() {
            if lambda_bits >> j & 1 == 1 {
                target += g_beta.column(j);
            }
        }
        box_constrained_lsq(&f_alpha, &target).residual_norm
    };

    let tie_set_size = kink_alpha.len() + kink_beta.len();
    if kink_beta.len() > tol.relu_vertex_cap {
        // lower bound from the two extreme vertices only
        let all = if kink_beta.len() >= 64 { u64::MAX } else { (1u64 << kink_beta.len()) - 1 };
        let gap = vertex_gap(0).max(vertex_gap(all));
        return DStatReport {
            family: Family::Relu,
            pass: false,
            gap,
            tie_set_size,
            per_coordinate_deltas: Vec::new(),
            anomaly: Some(Anomaly::TieCapExceeded),
            estimated: true,
        };
    }

    let gap = (0..1u64 << kink_beta.len()).map(vertex_gap).fold(0.0_f64, f64::max);
    DStatReport {
        family: Family::Relu,
        pass: gap <= tol.eps,
        gap,
        tie_set_size,
        per_coordinate_deltas: Vec::new(),
        anomaly: None,
        estimated: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn smooth_stationary_point_passes() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x = dvector![1.0, 2.0];
        let b = &a * &x;
        let inst = ReluInstance::new(a, b).unwrap();
        let rep = certify_relu(&inst, &x, &CertifierTolerances::default());
        assert!(rep.pass);
        assert_eq!(rep.tie_set_size, 0);
        assert!(rep.gap < 1e-12);
    }

    #[test]
    fn smooth_nonstationary_point_reports_gradient_norm() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let inst = ReluInstance::new(a, dvector![1.0, 1.0]).unwrap();
        let x = dvector![2.0, 3.0];
        // ∇h = (1, 2)
        let rep = certify_relu(&inst, &x, &CertifierTolerances::default());
        assert!(!rep.pass);
        assert!((rep.gap - 5.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn alpha_kink_at_origin_passes() {
        let inst = ReluInstance::new(DMatrix::from_element(1, 1, 1.0), dvector![-1.0]).unwrap();
        let rep = certify_relu(&inst, &dvector![0.0], &CertifierTolerances::default());
        assert!(rep.pass);
        assert_eq!(rep.gap, 0.0);
        assert_eq!(rep.tie_set_size, 1);
    }

    #[test]
    fn beta_kink_at_origin_fails() {
        let inst = ReluInstance::new(DMatrix::from_element(1, 1, 1.0), dvector![1.0]).unwrap();
        let rep = certify_relu(&inst, &dvector![0.0], &CertifierTolerances::default());
        assert!(!rep.pass);
        assert!((rep.gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_many_beta_kinks_are_capped() {
        let m = 20;
        let inst = ReluInstance::new(DMatrix::from_element(m, 1, 1.0), DVector::from_element(m, 1.0)).unwrap();
        let rep = certify_relu(&inst, &dvector![0.0], &CertifierTolerances::default());
        assert!(!rep.pass);
        assert_eq!(rep.anomaly, Some(Anomaly::TieCapExceeded));
    }
}
