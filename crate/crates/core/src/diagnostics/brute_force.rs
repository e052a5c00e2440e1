use nalgebra::DVector;

use crate::explore::Objective;
use crate::samplers::{sample_sphere, RunRng};

#[derive(Debug, Clone)]
pub struct SlopeProbe {
    /// Minimum over directions of the smallest-step difference quotient.
    pub min_slope: f64,
    /// Minimum over directions at `t_probe`, `t_probe/10`, `t_probe/100`.
    pub min_slope_by_step: [f64; 3],
    pub worst_direction: DVector<f64>,
}

/// Estimates `min_d h'(x; d)` over `n_dirs` uniform sphere directions with
/// forward differences.
pub fn brute_force_dstat_check(
    objective: &dyn Objective,
    x: &DVector<f64>,
    n_dirs: usize,
    t_probe: f64,
    rng: &mut RunRng,
) -> SlopeProbe {
    let steps = [t_probe, t_probe / 10.0, t_probe / 100.0];
    let h_x = objective.value(x);
    let mut by_step = [f64::INFINITY; 3];
    let mut worst = (f64::INFINITY, DVector::zeros(x.len()));
    for _ in 0..n_dirs {
        let d = sample_sphere(rng, x.len());
        for (slot, &t) in steps.iter().enumerate() {
            let slope = (objective.value(&(x + &d * t)) - h_x) / t;
            by_step[slot] = by_step[slot].min(slope);
            if slot == 2 && slope < worst.0 {
                worst = (slope, d.clone());
            }
        }
    }
    SlopeProbe { min_slope: worst.0, min_slope_by_step: by_step, worst_direction: worst.1 }
}
