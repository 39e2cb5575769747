//! Estimates with replica-based standard errors, plus small summary helpers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::rng::{RngStream, StreamRng};

/// Minimum number of replicas behind any randomized estimate.
pub const MIN_REPLICAS: usize = 16;

/// Qualifiers attached to an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    /// Value is a certified lower bound (e.g. a supremum searched over a finite set).
    LowerBound,
    /// Value is an upper bound on the named quantity.
    UpperBound,
    /// Replica spread exceeds 50% of the value.
    HeavyTail,
    /// Requested resolution is finer than the replica count can resolve.
    Unresolved,
    /// Parameter lies outside the regime where the reference statement is made.
    Extrapolated,
    /// Tail estimate rests on zero or too few events.
    DegenerateTail,
    /// Smallest grid point already satisfied the criterion.
    GridResolution,
    /// Finite-difference estimate disagreed with its half-step counterpart.
    RichardsonMismatch,
    /// Density estimate bandwidth unstable; probe skipped.
    BandwidthUnstable,
    /// Search or walk budget ran out before the stopping rule fired.
    BudgetExhausted,
    /// Only known up to a universal constant, which is set to 1.
    UpToConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Zero for exact values.
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicas: usize,
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<Flag>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0, ci_low: value, ci_high: value, replicas: 0, exact: true, flags: vec![] }
    }

    /// `value ± t_{0.975, R-1} · stderr`.
    pub fn with_stderr(value: f64, stderr: f64, replicas: usize) -> Self {
        let t = t_critical(replicas);
        Self {
            value,
            stderr,
            ci_low: value - t * stderr,
            ci_high: value + t * stderr,
            replicas,
            exact: false,
            flags: vec![],
        }
    }

    /// Pooled point estimate with the standard error of the replica values.
    pub fn from_replicas(pooled: f64, replica_values: &[f64]) -> Self {
        let r = replica_values.len();
        let se = if r > 1 { variance(replica_values).sqrt() / (r as f64).sqrt() } else { 0.0 };
        Self::with_stderr(pooled, se, r)
    }

    /// Mean of replica values as the point estimate.
    pub fn mean_of(replica_values: &[f64]) -> Self {
        Self::from_replicas(mean(replica_values), replica_values)
    }

    pub fn flag(mut self, f: Flag) -> Self {
        if !self.flags.contains(&f) {
            self.flags.push(f);
            self.flags.sort();
        }
        self
    }

    pub fn has_flag(&self, f: Flag) -> bool {
        self.flags.contains(&f)
    }

    /// `|value - target| ≤ k · stderr` (exact values compare with `abs_tol`).
    pub fn within_sigmas(&self, target: f64, k: f64, abs_tol: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr + abs_tol
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Estimate {
        let (a, b) = (f(self.ci_low), f(self.ci_high));
        let v = f(self.value);
        // First-order propagation of the stderr.
        let h = self.stderr.max(1e-12 * self.value.abs().max(1e-300));
        let d = ((f(self.value + h) - f(self.value - h)) / (2.0 * h)).abs();
        Estimate {
            value: v,
            stderr: d * self.stderr,
            ci_low: a.min(b),
            ci_high: a.max(b),
            replicas: self.replicas,
            exact: self.exact,
            flags: self.flags.clone(),
        }
    }
}

fn t_critical(replicas: usize) -> f64 {
    if replicas < 2 {
        return 1.959_963_984_540_054;
    }
    StudentsT::new(0.0, 1.0, (replicas - 1) as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(1.959_963_984_540_054)
}

/// Pairwise summation in fixed order.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 32 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(x) / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    let sq: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&sq) / (x.len() - 1) as f64
}

/// Linear-interpolated quantile of an already sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Wilson score interval for `successes / trials` at normal critical value `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Ordinary least-squares slope and intercept of `y` on `x`.
pub fn ols_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Splits `total` draws into `replicas` near-equal chunk sizes.
pub fn replica_sizes(total: usize, replicas: usize) -> Vec<usize> {
    let base = total / replicas;
    let extra = total % replicas;
    (0..replicas).map(|k| base + usize::from(k < extra)).collect()
}

/// Runs `f` once per replica on its own substream; results come back in
/// replica order whatever the thread count.
pub fn replicate<T, F>(stream: &RngStream, replicas: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut StreamRng) -> T + Sync + Send,
{
    (0..replicas)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.replica(k as u64).rng();
            f(k, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_proportion() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && hi > 0.3);
        let (lo, hi) = wilson_interval(0, 32, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.15);
    }

    #[test]
    fn slope_of_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (s, c) = ols_fit(&x, &y);
        assert!((s + 0.5).abs() < 1e-14 && (c - 2.0).abs() < 1e-14);
    }

    #[test]
    fn sizes_sum_to_total() {
        let s = replica_sizes(103, 16);
        assert_eq!(s.iter().sum::<usize>(), 103);
        assert_eq!(s.len(), 16);
    }

    #[test]
    fn estimate_interval_is_symmetric() {
        let e = Estimate::mean_of(&[1.0, 2.0, 3.0, 4.0]);
        assert!((e.value - 2.5).abs() < 1e-15);
        assert!((e.value - e.ci_low - (e.ci_high - e.value)).abs() < 1e-12);
        assert!(e.stderr > 0.0);
    }

    #[test]
    fn replicate_is_order_stable() {
        use rand::Rng;
        let s = RngStream::new(11);
        let a = replicate(&s, 8, |_, r| r.random::<u64>());
        let b = replicate(&s, 8, |_, r| r.random::<u64>());
        assert_eq!(a, b);
    }
}
