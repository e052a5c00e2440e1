//! Paired-comparison statistics.

use serde::{Deserialize, Serialize};

/// `|Δ|` at or below this counts as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Win,
    Tie,
    Loss,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Win => "win",
            Label::Tie => "tie",
            Label::Loss => "loss",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "win" => Some(Label::Win),
            "tie" => Some(Label::Tie),
            "loss" => Some(Label::Loss),
            _ => None,
        }
    }
}

/// `Δ = h_base − median_s h_aug,s`; positive favours augmentation.
pub fn classify_delta(h_base: f64, h_aug_median: f64) -> (f64, Label) {
    let delta = h_base - h_aug_median;
    let label = if delta > TIE_TOLERANCE {
        Label::Win
    } else if delta < -TIE_TOLERANCE {
        Label::Loss
    } else {
        Label::Tie
    };
    (delta, label)
}

/// Median (mean of the two middle values for even length). `None` if empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) })
}

/// Index of the lower median element (lowest index among equal values).
pub fn median_index(values: &[f64]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Some(idx[(values.len() - 1) / 2])
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    table.push(0.0);
    let mut acc = 0.0;
    for j in 1..=n {
        acc += (j as f64).ln();
        table.push(acc);
    }
    table
}

/// `ln Σ_{i ∈ range} C(n, i) 2⁻ⁿ`, summed around its largest term.
fn log_binomial_mass(n: usize, range: std::ops::RangeInclusive<usize>, lf: &[f64]) -> f64 {
    let log_half_n = -(n as f64) * std::f64::consts::LN_2;
    let terms: Vec<f64> = range.map(|i| lf[n] - lf[i] - lf[n - i] + log_half_n).collect();
    let peak = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    let sum: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
    peak + sum.ln()
}

/// Natural log of the one-sided exact McNemar p-value.
pub fn mcnemar_log_p(wins: u64, losses: u64) -> f64 {
    let n = (wins + losses) as usize;
    let w = wins as usize;
    if n == 0 || w == 0 {
        return 0.0;
    }
    let lf = ln_factorials(n);
    if 2 * w > n {
        log_binomial_mass(n, w..=n, &lf).min(0.0)
    } else {
        // upper tail near 1: go through the lower tail instead
        let lower = log_binomial_mass(n, 0..=w - 1, &lf);
        (-lower.exp()).ln_1p().min(0.0)
    }
}

/// `P(X ≥ wins)` for `X ~ Binomial(wins + losses, ½)`; 1 with no discordant pairs.
pub fn mcnemar_exact_one_sided(wins: u64, losses: u64) -> f64 {
    mcnemar_log_p(wins, losses).exp()
}
