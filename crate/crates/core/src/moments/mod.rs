//! Thin-shell statistics, strong and weak moments, tail-form ledgers and
//! the H(p, λ) ratio.

mod hcond;
mod proof_chain;
mod shell;
mod strong_weak;
mod tails;

pub use hcond::{h_condition_ratio, h_condition_ratio_batch, HConditionReport, HGauge};
pub use proof_chain::{proof_chain_check, GeometricDraw, InequalityLedger, ProofChainReport};
pub use shell::{shell_stats, shell_stats_from_squared_norms, ShellStats, TailPoint};
pub use strong_weak::{
    borell_growth, default_p_grid, strong_moment, weak_moment, weak_strong_check, BorellRow, BorellTable, MomentProfile,
    NormKind, WeakMoment, WeakStrongRow,
};
pub use tails::{tail_form_check, TailConstants, TailForm, TailLedger, TailRow};

use crate::distributions::{fold_replicas, DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::numerics::stats::{pairwise_sum, replica_sizes, MIN_REPLICAS};
use crate::numerics::{Estimate, Flag, RngStream};

/// `E|X|^p` is finite only for `p < r` in the s-concave family.
pub(crate) fn check_moment_exists(spec: &DistributionSpec, p: f64) -> Result<()> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!("moment order must be positive and finite, got {p}")));
    }
    if let Family::SConcave { r, .. } = spec.family {
        if p >= r {
            return Err(Error::MomentDoesNotExist { p, r });
        }
    }
    Ok(())
}

/// `f(row)` for `total` rows split over replicas, grouped by replica.
pub(crate) fn row_values(
    spec: &DistributionSpec,
    total: usize,
    replicas: usize,
    stream: &RngStream,
    f: impl Fn(&[f64]) -> f64 + Sync + Send,
) -> Result<Vec<Vec<f64>>> {
    let replicas = replicas.max(MIN_REPLICAS);
    if total < replicas {
        return Err(Error::InvalidArgument(format!("need at least {replicas} samples, got {total}")));
    }
    let sizes = replica_sizes(total, replicas);
    fold_replicas(spec, &sizes, stream, Vec::new, |acc: &mut Vec<f64>, row| acc.push(f(row)))
}

/// Pooled and per-replica means of `g(v)` over grouped values.
pub(crate) fn grouped_means(parts: &[Vec<f64>], g: impl Fn(f64) -> f64) -> (f64, Vec<f64>) {
    let mut total = 0.0;
    let mut count = 0usize;
    let per = parts
        .iter()
        .map(|part| {
            let vals: Vec<f64> = part.iter().map(|&v| g(v)).collect();
            let s = pairwise_sum(&vals);
            total += s;
            count += part.len();
            s / part.len() as f64
        })
        .collect();
    (total / count as f64, per)
}

/// `(E V)^{1/p}` from pooled and per-replica means of `V = |·|^p`.
///
/// For `p > 8` the point estimate is the lower median of the replica means
/// (median of means); the lower median commutes with `x ↦ x^{1/p}`.
/// Replica spread above half the value flags `HeavyTail`.
pub(crate) fn root_moment(pooled: f64, per: &[f64], p: f64) -> Estimate {
    let inv = 1.0 / p;
    let roots: Vec<f64> = per.iter().map(|v| v.max(0.0).powf(inv)).collect();
    let point = if p > 8.0 {
        let mut s = per.to_vec();
        s.sort_by(f64::total_cmp);
        s[(s.len() - 1) / 2]
    } else {
        pooled
    };
    let e = Estimate::from_replicas(point.max(0.0).powf(inv), &roots);
    let spread = crate::numerics::stats::variance(&roots).sqrt();
    if e.value > 0.0 && spread > 0.5 * e.value {
        e.flag(Flag::HeavyTail)
    } else {
        e
    }
}

/// Jackknife standard error of `stat` over replica groups of counts.
pub(crate) fn jackknife_se(values: &[f64]) -> f64 {
    let r = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / r;
    ((r - 1.0) / r * values.iter().map(|v| (v - m) * (v - m)).sum::<f64>()).sqrt()
}
