//! Operator-norm distance between the empirical second-moment matrix of an
//! isotropic sample and the identity, and the sample size needed to make it
//! small.

use std::fmt::Write as _;

use serde::Serialize;

use crate::distributions::{fold_replicas, DistributionSpec, SampleBatch};
use crate::error::{Error, Result};
use crate::numerics::linalg::symmetric_eigen;
use crate::numerics::special::z_critical;
use crate::numerics::stats::{median, ols_fit, wilson_interval, MIN_REPLICAS};
use crate::numerics::{Estimate, Flag, Matrix, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovApproxReport {
    pub n: usize,
    pub samples: usize,
    /// `‖(1/N) Σ X_i X_iᵀ - I‖`.
    pub epsilon: f64,
    /// Extreme singular values of `A / √N`, `A` the `N × n` sample matrix.
    pub s_min: f64,
    pub s_max: f64,
}

/// Running `Σ x xᵀ` (upper triangle) over streamed rows.
#[derive(Debug, Clone)]
struct Gram {
    n: usize,
    rows: usize,
    upper: Vec<f64>,
}

impl Gram {
    fn new(n: usize) -> Self {
        Self { n, rows: 0, upper: vec![0.0; n * (n + 1) / 2] }
    }

    fn push(&mut self, x: &[f64]) {
        let mut k = 0;
        for i in 0..self.n {
            let xi = x[i];
            for xj in &x[i..] {
                self.upper[k] += xi * xj;
                k += 1;
            }
        }
        self.rows += 1;
    }

    fn report(&self) -> Result<CovApproxReport> {
        if self.rows == 0 {
            return Err(Error::EmptySample);
        }
        let n = self.n;
        let inv = 1.0 / self.rows as f64;
        let mut d = Matrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                let v = self.upper[k] * inv - if i == j { 1.0 } else { 0.0 };
                d[(i, j)] = v;
                d[(j, i)] = v;
                k += 1;
            }
        }
        if !d.is_finite() {
            return Err(Error::NonFinite("second-moment matrix"));
        }
        let eig = symmetric_eigen(&d)?;
        let lo = eig.values[0];
        let hi = eig.values[n - 1];
        Ok(CovApproxReport {
            n,
            samples: self.rows,
            epsilon: hi.max(-lo).max(0.0),
            s_min: (1.0 + lo).max(0.0).sqrt(),
            s_max: (1.0 + hi).max(0.0).sqrt(),
        })
    }
}

/// Deviation of an arbitrary batch; the test hook for constructed samples.
pub fn cov_deviation_batch(batch: &SampleBatch) -> Result<CovApproxReport> {
    let mut g = Gram::new(batch.dim());
    batch.rows().for_each(|r| g.push(r));
    g.report()
}

/// `N` rows from an isotropic spec on a single stream.
pub fn cov_deviation(spec: &DistributionSpec, samples: usize, stream: &RngStream) -> Result<CovApproxReport> {
    spec.require_isotropic()?;
    if samples == 0 {
        return Err(Error::EmptySample);
    }
    let mut out = fold_replicas(spec, &[samples], stream, || Gram::new(spec.dim), |g, x| g.push(x))?;
    out.pop().expect("one replica").report()
}

/// Reports at each grid size, per replica. Replica `k` streams one
/// sequence of rows and is read off at every grid point, so the sizes
/// share prefixes.
pub fn deviation_trajectories(
    spec: &DistributionSpec,
    grid: &[usize],
    replicas: usize,
    stream: &RngStream,
) -> Result<Vec<Vec<CovApproxReport>>> {
    spec.require_isotropic()?;
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("sample-size grid must be non-empty, positive and increasing".into()));
    }
    let n = spec.dim;
    let last = *grid.last().expect("non-empty");
    let sizes = vec![last; replicas];
    type Acc = (Gram, Vec<Result<CovApproxReport>>);
    let per: Vec<Acc> = fold_replicas(
        spec,
        &sizes,
        stream,
        || (Gram::new(n), Vec::with_capacity(grid.len())),
        |(g, out): &mut Acc, x| {
            g.push(x);
            if grid.binary_search(&g.rows).is_ok() {
                out.push(g.report());
            }
        },
    )?;
    per.into_iter().map(|(_, out)| out.into_iter().collect()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationPoint {
    pub samples: usize,
    pub median: f64,
    pub mean: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationProfile {
    pub n: usize,
    pub points: Vec<DeviationPoint>,
    /// OLS slope of `log median ε̂` against `log N`.
    pub slope: f64,
}

/// Median and mean `ε̂` along a sample-size grid, with the log-log slope.
pub fn deviation_profile(
    spec: &DistributionSpec,
    grid: &[usize],
    replicas: usize,
    stream: &RngStream,
) -> Result<DeviationProfile> {
    let replicas = replicas.max(MIN_REPLICAS);
    let traj = deviation_trajectories(spec, grid, replicas, stream)?;
    let points: Vec<DeviationPoint> = grid
        .iter()
        .enumerate()
        .map(|(j, &samples)| {
            let eps: Vec<f64> = traj.iter().map(|t| t[j].epsilon).collect();
            DeviationPoint { samples, median: median(&eps), mean: Estimate::mean_of(&eps) }
        })
        .collect();
    let x: Vec<f64> = points.iter().map(|p| (p.samples as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.median.ln()).collect();
    let slope = if points.len() >= 2 { ols_fit(&x, &y).0 } else { f64::NAN };
    Ok(DeviationProfile { n: spec.dim, points, slope })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexityRow {
    pub epsilon: f64,
    /// Smallest grid size whose success frequency reached `1 - η`; when the
    /// budget ran out this is the largest size tried, flagged `LowerBound`.
    pub n_star: usize,
    pub success_freq: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `n / ε²`, `n² / ε²` and `n log³ n / ε²`, for comparison only.
    pub reference_linear: f64,
    pub reference_quadratic: f64,
    pub reference_polylog: f64,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexityCurve {
    pub n: usize,
    pub eta: f64,
    pub replicas: usize,
    pub grid: Vec<usize>,
    pub rows: Vec<ComplexityRow>,
}

impl ComplexityCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,n_star,success_freq,ci_low,ci_high\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{}", r.epsilon, r.n_star, r.success_freq, r.ci_low, r.ci_high);
        }
        s
    }
}

/// For each target `ε`, the smallest `N` on the doubling grid
/// `n_min, 2 n_min, …, ≤ n_max` at which at least a `1 - η` fraction of
/// replicas had `ε̂ ≤ ε`.
pub fn sample_complexity_curve(
    spec: &DistributionSpec,
    eps_grid: &[f64],
    eta: f64,
    n_min: usize,
    n_max: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<ComplexityCurve> {
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::InvalidArgument("epsilon grid must be non-empty and inside (0, 1)".into()));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!("eta must lie in (0, 1), got {eta}")));
    }
    if replicas < 32 {
        return Err(Error::InvalidArgument(format!("success frequencies need at least 32 replicas, got {replicas}")));
    }
    if n_min == 0 || n_max < n_min {
        return Err(Error::InvalidArgument("need 1 <= n_min <= n_max".into()));
    }
    let mut grid = vec![n_min];
    while let Some(next) = grid.last().and_then(|g| g.checked_mul(2)).filter(|&g| g <= n_max) {
        grid.push(next);
    }
    let traj = deviation_trajectories(spec, &grid, replicas, stream)?;
    let n = spec.dim as f64;
    let z = z_critical(0.05);
    let rows = eps_grid
        .iter()
        .map(|&eps| {
            let mut flags = vec![];
            if eta < 1.0 / replicas as f64 {
                flags.push(Flag::Unresolved);
            }
            let mut found = None;
            let mut last = (0, 0.0);
            for (j, &size) in grid.iter().enumerate() {
                let ok = traj.iter().filter(|t| t[j].epsilon <= eps).count();
                let freq = ok as f64 / replicas as f64;
                last = (ok, freq);
                if freq >= 1.0 - eta {
                    found = Some((size, ok, freq));
                    if j == 0 {
                        flags.push(Flag::GridResolution);
                    }
                    break;
                }
            }
            let (n_star, ok, freq) = found.unwrap_or_else(|| {
                flags.push(Flag::LowerBound);
                flags.push(Flag::BudgetExhausted);
                (*grid.last().expect("non-empty"), last.0, last.1)
            });
            let (ci_low, ci_high) = wilson_interval(ok, replicas, z);
            ComplexityRow {
                epsilon: eps,
                n_star,
                success_freq: freq,
                ci_low,
                ci_high,
                reference_linear: n / (eps * eps),
                reference_quadratic: n * n / (eps * eps),
                reference_polylog: n * n.ln().powi(3) / (eps * eps),
                flags,
            }
        })
        .collect();
    Ok(ComplexityCurve { n: spec.dim, eta, replicas, grid, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Family;

    #[test]
    fn scaled_basis_is_exact() {
        let n = 9;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 3.0;
                e
            })
            .collect();
        let b = SampleBatch::injected(Matrix::from_rows(&rows).unwrap()).unwrap();
        let r = cov_deviation_batch(&b).unwrap();
        assert_eq!(r.epsilon, 0.0);
        assert_eq!((r.s_min, r.s_max), (1.0, 1.0));
    }

    #[test]
    fn one_dimensional_gaussian_rate() {
        // ε̂ = |mean(g²) - 1|, so E ε̂ ≈ √(2/N) · √(2/π).
        let spec = DistributionSpec::gaussian(1);
        let traj = deviation_trajectories(&spec, &[4096], 64, &RngStream::new(3)).unwrap();
        let eps: Vec<f64> = traj.iter().map(|t| t[0].epsilon).collect();
        let e = Estimate::mean_of(&eps);
        let want = (2.0 / 4096.0f64).sqrt() * (2.0 / std::f64::consts::PI).sqrt();
        assert!(e.within_sigmas(want, 4.0, 0.0), "{e:?} vs {want}");
    }

    #[test]
    fn singular_values_match_epsilon() {
        let spec = DistributionSpec::isotropic(Family::UniformCube, 5);
        let r = cov_deviation(&spec, 200, &RngStream::new(4)).unwrap();
        let alt = (r.s_max * r.s_max - 1.0).max(1.0 - r.s_min * r.s_min);
        assert!((alt - r.epsilon).abs() < 1e-10);
    }

    #[test]
    fn loose_target_hits_first_grid_point() {
        let spec = DistributionSpec::isotropic(Family::UniformCube, 16);
        let c = sample_complexity_curve(&spec, &[0.9], 0.1, 256, 4096, 32, &RngStream::new(5)).unwrap();
        assert_eq!(c.rows[0].n_star, 256);
        assert!(c.rows[0].flags.contains(&Flag::GridResolution));
        assert!(c.to_csv().starts_with("epsilon,n_star"));
    }

    #[test]
    fn rejects_raw_spec() {
        let spec = DistributionSpec::raw(Family::UniformCube, 3);
        assert!(matches!(cov_deviation(&spec, 10, &RngStream::new(1)), Err(Error::NotIsotropic)));
    }
}
