use serde::Serialize;

use super::{grouped_means, row_values};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::numerics::special::z_critical;
use crate::numerics::stats::{pairwise_sum, wilson_interval};
use crate::numerics::{dot, Estimate, Flag, RngStream};

/// Fewer events than this flag a tail point as degenerate.
const MIN_TAIL_EVENTS: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct TailPoint {
    pub t: f64,
    /// `P(||X| - √n| ≥ t √n)`.
    pub prob: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub count: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShellStats {
    pub n: usize,
    pub samples: usize,
    pub replicas: usize,
    pub mean_norm: Estimate,
    pub var_norm: Estimate,
    pub mean_sq: Estimate,
    pub var_sq: Estimate,
    /// `E|X|⁴ - (E|X|²)²` on the same sample (unbiased scaling).
    pub var_sq_via_moments: f64,
    /// `Var|X|² / E|X|²`.
    pub var_sq_over_mean_sq: Estimate,
    /// `(E|X|⁴)^{1/4} / (E|X|²)^{1/2}`.
    pub fourth_to_second: Estimate,
    pub tail: Vec<TailPoint>,
}

fn unbiased_var(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = pairwise_sum(x) / n;
    let sq: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&sq) / (n - 1.0)
}

/// Thin-shell statistics of an isotropic spec.
pub fn shell_stats(
    spec: &DistributionSpec,
    samples: usize,
    t_grid: &[f64],
    replicas: usize,
    stream: &RngStream,
) -> Result<ShellStats> {
    spec.require_isotropic()?;
    let parts = row_values(spec, samples, replicas, stream, |x| dot(x, x))?;
    shell_stats_from_squared_norms(&parts, spec.dim, t_grid)
}

/// As [`shell_stats`] from `|X|²` values grouped by replica.
pub fn shell_stats_from_squared_norms(parts: &[Vec<f64>], n: usize, t_grid: &[f64]) -> Result<ShellStats> {
    if parts.len() < 2 || parts.iter().any(|p| p.len() < 2) {
        return Err(Error::InvalidArgument("need at least two replicas of at least two rows".into()));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0)) || t_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("t-grid must be non-negative and sorted".into()));
    }
    let samples: usize = parts.iter().map(Vec::len).sum();
    let all: Vec<f64> = parts.iter().flatten().copied().collect();
    let norms: Vec<f64> = all.iter().map(|v| v.sqrt()).collect();

    let (m1, m1_per) = grouped_means(parts, f64::sqrt);
    let (m2, m2_per) = grouped_means(parts, |v| v);
    let (m4, m4_per) = grouped_means(parts, |v| v * v);
    let var_norm_per: Vec<f64> = parts.iter().map(|p| unbiased_var(&p.iter().map(|v| v.sqrt()).collect::<Vec<_>>())).collect();
    let var_sq_per: Vec<f64> = parts.iter().map(|p| unbiased_var(p)).collect();
    let var_norm = unbiased_var(&norms);
    let var_sq = unbiased_var(&all);
    let nn = samples as f64;
    let var_sq_via_moments = (m4 - m2 * m2) * nn / (nn - 1.0);

    let ratio_per: Vec<f64> = var_sq_per.iter().zip(&m2_per).map(|(v, m)| v / m).collect();
    let fourth_per: Vec<f64> = m4_per.iter().zip(&m2_per).map(|(a, b)| a.powf(0.25) / b.sqrt()).collect();

    let sqrt_n = (n as f64).sqrt();
    let z = z_critical(0.05);
    let tail = t_grid
        .iter()
        .map(|&t| {
            let count = norms.iter().filter(|&&r| (r - sqrt_n).abs() >= t * sqrt_n).count();
            let (ci_low, ci_high) = wilson_interval(count, samples, z);
            let flags = if count < MIN_TAIL_EVENTS { vec![Flag::DegenerateTail] } else { vec![] };
            TailPoint { t, prob: count as f64 / nn, ci_low, ci_high, count, flags }
        })
        .collect();

    Ok(ShellStats {
        n,
        samples,
        replicas: parts.len(),
        mean_norm: Estimate::from_replicas(m1, &m1_per),
        var_norm: Estimate::from_replicas(var_norm, &var_norm_per),
        mean_sq: Estimate::from_replicas(m2, &m2_per),
        var_sq: Estimate::from_replicas(var_sq, &var_sq_per),
        var_sq_via_moments,
        var_sq_over_mean_sq: Estimate::from_replicas(var_sq / m2, &ratio_per),
        fourth_to_second: Estimate::from_replicas(m4.powf(0.25) / m2.sqrt(), &fourth_per),
        tail,
    })
}
