//! Kolmogorov distance of one-dimensional marginals to the standard normal,
//! direction surveys, and the thin-shell width `ε*`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{fold_replicas, DistributionSpec, SampleBatch};
use crate::error::{Error, Result};
use crate::numerics::ks::{ks_critical_value, ks_distance};
use crate::numerics::linalg::{dot, norm2};
use crate::numerics::special::normal_cdf;
use crate::numerics::stats::{quantile_sorted, replica_sizes, MIN_REPLICAS};
use crate::numerics::{random_unit_vector, Estimate, Flag, RngStream};

/// Step of the `ε` grid searched by [`abp_epsilon`].
pub const ABP_GRID_STEP: f64 = 0.001;

fn check_unit(theta: &[f64], n: usize) -> Result<()> {
    if theta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: theta.len() });
    }
    if (norm2(theta) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("direction must be unit to 1e-12, |θ| = {}", norm2(theta))));
    }
    Ok(())
}

fn projections(spec: &DistributionSpec, theta: &[f64], samples: usize, stream: &RngStream) -> Result<Vec<f64>> {
    let sizes = replica_sizes(samples, MIN_REPLICAS);
    let parts = fold_replicas(spec, &sizes, stream, Vec::new, |acc: &mut Vec<f64>, x| acc.push(dot(theta, x)))?;
    Ok(parts.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginalKs {
    pub ks: f64,
    pub samples: usize,
    /// 95% Kolmogorov critical value at this sample size: the noise floor.
    pub noise_floor: f64,
}

/// `sup_t |F̂_θ(t) - Φ(t)|` for `⟨θ, X⟩`, `X` isotropic and `θ` unit.
pub fn marginal_ks(spec: &DistributionSpec, theta: &[f64], samples: usize, stream: &RngStream) -> Result<MarginalKs> {
    spec.require_isotropic()?;
    check_unit(theta, spec.dim)?;
    if samples == 0 {
        return Err(Error::EmptySample);
    }
    let mut v = projections(spec, theta, samples, stream)?;
    v.sort_by(f64::total_cmp);
    Ok(MarginalKs { ks: ks_distance(&v, normal_cdf)?, samples, noise_floor: ks_critical_value(samples, 0.05) })
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionSurvey {
    pub n: usize,
    pub samples: usize,
    pub ks: Vec<f64>,
    /// `(q, quantile)` for `q ∈ {0.1, 0.25, 0.5, 0.75, 0.9}`.
    pub quantiles: Vec<(f64, f64)>,
    /// `(threshold, fraction of directions with ks ≤ threshold)`.
    pub below: Vec<(f64, f64)>,
    pub noise_floor: f64,
}

impl DirectionSurvey {
    pub fn median(&self) -> f64 {
        self.quantiles[2].1
    }

    pub fn fraction_below(&self, threshold: f64) -> f64 {
        self.ks.iter().filter(|&&k| k <= threshold).count() as f64 / self.ks.len() as f64
    }

    pub fn to_csv(&self, thresholds: &[f64]) -> String {
        let mut s = String::from("direction,ks");
        for t in thresholds {
            let _ = write!(s, ",below_{t}");
        }
        s.push('\n');
        for (i, k) in self.ks.iter().enumerate() {
            let _ = write!(s, "{i},{k}");
            for t in thresholds {
                let _ = write!(s, ",{}", u8::from(*k <= *t));
            }
            s.push('\n');
        }
        s
    }
}

/// KS distances over `directions` uniform random directions. Direction `j`
/// gets its own sample on substream `j`; no sample is shared.
pub fn direction_survey(
    spec: &DistributionSpec,
    directions: usize,
    samples: usize,
    thresholds: &[f64],
    stream: &RngStream,
) -> Result<DirectionSurvey> {
    spec.require_isotropic()?;
    if directions < 100 {
        return Err(Error::InvalidArgument(format!("a survey needs at least 100 directions, got {directions}")));
    }
    let n = spec.dim;
    let mut rng = stream.fork("directions").rng();
    let thetas: Vec<Vec<f64>> = (0..directions).map(|_| random_unit_vector(n, &mut rng)).collect();
    let data = stream.fork("samples");
    let ks: Vec<f64> = thetas
        .par_iter()
        .enumerate()
        .map(|(j, theta)| -> Result<f64> {
            let sub = data.replica(j as u64);
            let mut v = projections(spec, theta, samples, &sub)?;
            v.sort_by(f64::total_cmp);
            ks_distance(&v, normal_cdf)
        })
        .collect::<Result<_>>()?;
    let mut sorted = ks.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = [0.1, 0.25, 0.5, 0.75, 0.9].iter().map(|&q| (q, quantile_sorted(&sorted, q))).collect();
    let below = thresholds
        .iter()
        .map(|&t| (t, ks.iter().filter(|&&k| k <= t).count() as f64 / directions as f64))
        .collect();
    Ok(DirectionSurvey { n, samples, ks, quantiles, below, noise_floor: ks_critical_value(samples, 0.05) })
}

/// `τ (Σ θ_i⁴)^{1/2}`.
pub fn classical_be_bound(theta: &[f64], tau: f64) -> Result<f64> {
    if theta.is_empty() {
        return Err(Error::InvalidArgument("empty direction".into()));
    }
    check_unit(theta, theta.len())?;
    Ok(tau * theta.iter().map(|v| v.powi(4)).sum::<f64>().sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct AbpEpsilon {
    pub n: usize,
    pub samples: usize,
    pub epsilon: Estimate,
    pub grid_step: f64,
}

/// Smallest `ε` on the grid with `P̂(||X|/√n - 1| ≥ ε) ≤ ε`.
fn epsilon_star(dev: &mut [f64]) -> f64 {
    dev.sort_by(f64::total_cmp);
    let total = dev.len() as f64;
    let tail = |eps: f64| {
        // Count of deviations ≥ eps.
        let below = dev.partition_point(|&d| d < eps);
        (dev.len() - below) as f64 / total
    };
    let max_k = (1.0 / ABP_GRID_STEP).round() as usize;
    // `tail(ε) - ε` is decreasing, so bisect on the grid index.
    let (mut lo, mut hi) = (1usize, max_k);
    if tail(ABP_GRID_STEP) <= ABP_GRID_STEP {
        return ABP_GRID_STEP;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let e = mid as f64 * ABP_GRID_STEP;
        if tail(e) <= e {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi as f64 * ABP_GRID_STEP
}

/// `ε*` from deviations grouped by replica.
pub fn abp_epsilon_from_deviations(parts: &[Vec<f64>], n: usize) -> Result<AbpEpsilon> {
    if parts.is_empty() || parts.iter().any(Vec::is_empty) {
        return Err(Error::EmptySample);
    }
    let per: Vec<f64> = parts.iter().map(|p| epsilon_star(&mut p.clone())).collect();
    let mut all: Vec<f64> = parts.iter().flatten().copied().collect();
    let pooled = epsilon_star(&mut all);
    let mut e = Estimate::from_replicas(pooled, &per);
    if pooled <= ABP_GRID_STEP {
        e = e.flag(Flag::GridResolution);
    }
    Ok(AbpEpsilon { n, samples: all.len(), epsilon: e, grid_step: ABP_GRID_STEP })
}

/// `ε*` on an injected batch, one replica per row block (test hook).
pub fn abp_epsilon_batch(batches: &[SampleBatch]) -> Result<AbpEpsilon> {
    let n = batches.first().map(SampleBatch::dim).ok_or(Error::EmptySample)?;
    let sn = (n as f64).sqrt();
    let parts: Vec<Vec<f64>> = batches.iter().map(|b| b.rows().map(|x| (norm2(x) / sn - 1.0).abs()).collect()).collect();
    abp_epsilon_from_deviations(&parts, n)
}

/// Smallest `ε` on a `0.001` grid with `P(||X|/√n - 1| ≥ ε) ≤ ε`.
pub fn abp_epsilon(spec: &DistributionSpec, samples: usize, replicas: usize, stream: &RngStream) -> Result<AbpEpsilon> {
    spec.require_isotropic()?;
    let replicas = replicas.max(MIN_REPLICAS);
    if samples < replicas {
        return Err(Error::InvalidArgument(format!("need at least {replicas} samples, got {samples}")));
    }
    let sn = (spec.dim as f64).sqrt();
    let sizes = replica_sizes(samples, replicas);
    let parts = fold_replicas(spec, &sizes, stream, Vec::new, |acc: &mut Vec<f64>, x| {
        acc.push((norm2(x) / sn - 1.0).abs())
    })?;
    abp_epsilon_from_deviations(&parts, spec.dim)
}
