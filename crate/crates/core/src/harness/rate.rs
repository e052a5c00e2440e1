use crate::explore::Trajectory;

/// Checks `min_{k<N} ‖x^k − z^{k+1}‖ ≤ sqrt(2(h(x⁰) − h*)/(μ_total·N))` for
/// every prefix length `N`, with a `1e-9` relative slack.
pub fn verify_rate_bound(trajectory: &Trajectory, mu_total: f64, h_star: f64) -> bool {
    const REL_TOL: f64 = 1e-9;
    let numerator = 2.0 * (trajectory.initial_h() - h_star);
    if mu_total.is_nan() || mu_total <= 0.0 || numerator < 0.0 {
        return false;
    }
    let mut best = f64::INFINITY;
    for (idx, rec) in trajectory.records.iter().enumerate() {
        best = best.min(rec.residual);
        let bound = (numerator / (mu_total * (idx + 1) as f64)).sqrt();
        if best > bound * (1.0 + REL_TOL) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::IterationRecord;
    use nalgebra::dvector;

    fn fake(residuals: &[f64], h0: f64) -> Trajectory {
        Trajectory {
            records: residuals
                .iter()
                .enumerate()
                .map(|(k, &residual)| IterationRecord { k, h_x: h0, h_z: h0, rep_accepted: false, t_ex: 0.0, residual })
                .collect(),
            final_x: dvector![0.0],
            final_h: h0,
            sum_sq_steps: 0.0,
            accepted_moves: 0,
            numeric_anomalies: 0,
            oracle_anomalies: 0,
        }
    }

    #[test]
    fn critical_point_trajectory_passes() {
        assert!(verify_rate_bound(&fake(&[0.0; 10], 1.0), 1.0, 1.0));
    }

    #[test]
    fn inflated_residuals_fail() {
        // bound at N = 4 is sqrt(2·1/4) ≈ 0.707
        assert!(!verify_rate_bound(&fake(&[1.0, 1.0, 1.0, 1.0], 1.0), 1.0, 0.0));
        assert!(verify_rate_bound(&fake(&[1.0, 0.5, 0.5, 0.5], 1.0), 1.0, 0.0));
    }
}
