//! Boundary measures, half-space conductance, Cheeger lower-bound
//! calculators and Poincaré quotients.

use std::fmt::Write as _;

use serde::Serialize;

use crate::distributions::{fold_replicas, DistributionSpec};
use crate::error::{Error, Result};
use crate::moments::ShellStats;
use crate::numerics::linalg::{dot, norm2};
use crate::numerics::special::{normal_cdf, normal_quantile};
use crate::numerics::stats::{mean, replica_sizes, variance, MIN_REPLICAS};
use crate::numerics::{random_unit_vector, Estimate, Flag, RngStream};

/// Density bandwidth; the Richardson partner uses half of it.
pub const DENSITY_BANDWIDTH: f64 = 0.1;

/// Fewer expected events on the thin side of a probe than this skip it.
const MIN_SIDE_EVENTS: f64 = 100.0;

/// `Φ(Φ^{-1}(α) + ε)`: the Gaussian measure of a half-space of measure `α`
/// enlarged by `ε`.
pub fn gaussian_halfspace_profile(alpha: f64, eps: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be non-negative, got {eps}")));
    }
    Ok(normal_cdf(normal_quantile(alpha) + eps))
}

/// Counts of `⟨θ_d, x⟩ ≤ c_j`, indexed `[replica][direction][threshold]`.
fn marginal_counts(
    spec: &DistributionSpec,
    dirs: &[Vec<f64>],
    thresholds: &[f64],
    sizes: &[usize],
    stream: &RngStream,
) -> Result<Vec<Vec<Vec<usize>>>> {
    let (d, k) = (dirs.len(), thresholds.len());
    let flat = fold_replicas(spec, sizes, stream, || vec![0usize; d * k], |acc: &mut Vec<usize>, x| {
        for (i, th) in dirs.iter().enumerate() {
            let v = dot(th, x);
            // First threshold ≥ v; every later one counts this row.
            let first = thresholds.partition_point(|&c| c < v);
            for c in &mut acc[i * k + first..(i + 1) * k] {
                *c += 1;
            }
        }
    })?;
    Ok(flat.into_iter().map(|f| f.chunks(k).map(<[usize]>::to_vec).collect()).collect())
}

/// Set whose boundary measure is estimated.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestSet {
    /// `{x : ⟨θ, x⟩ ≤ t}`.
    Halfspace { theta: Vec<f64>, t: f64 },
    /// `{x : |x|₂ ≤ radius}`.
    Ball { radius: f64 },
    Everything,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryMeasure {
    pub epsilon: f64,
    /// `(μ̂(S + εB) - μ̂(S)) / ε`.
    pub value: Estimate,
    /// Same at `ε/2`.
    pub half_step: Estimate,
}

/// Signed distance-like margin of a point from a test set.
type Margin = Box<dyn Fn(&[f64]) -> f64 + Sync + Send>;

/// Finite-difference `μ⁺(S)`, cross-checked at `ε/2`.
pub fn boundary_measure(
    spec: &DistributionSpec,
    set: &TestSet,
    eps: f64,
    samples: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<BoundaryMeasure> {
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 0.1], got {eps}")));
    }
    let margin: Margin = match set {
        TestSet::Everything => {
            return Ok(BoundaryMeasure { epsilon: eps, value: Estimate::exact(0.0), half_step: Estimate::exact(0.0) });
        }
        TestSet::Halfspace { theta, t } => {
            if theta.len() != spec.dim {
                return Err(Error::DimensionMismatch { expected: spec.dim, got: theta.len() });
            }
            if (norm2(theta) - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument("half-space normal must be a unit vector".into()));
            }
            let (theta, t) = (theta.clone(), *t);
            Box::new(move |x| dot(&theta, x) - t)
        }
        TestSet::Ball { radius } => {
            let r = *radius;
            Box::new(move |x| norm2(x) - r)
        }
    };
    let replicas = replicas.max(MIN_REPLICAS);
    let sizes = replica_sizes(samples.max(replicas), replicas);
    // (in the ε/2 shell, in the ε shell)
    let counts = fold_replicas(spec, &sizes, stream, || (0usize, 0usize), |acc: &mut (usize, usize), x| {
        let m = margin(x);
        if m > 0.0 && m <= eps {
            acc.1 += 1;
            if m <= 0.5 * eps {
                acc.0 += 1;
            }
        }
    })?;
    let total: usize = sizes.iter().sum();
    let est = |pick: fn(&(usize, usize)) -> usize, h: f64| {
        let per: Vec<f64> = counts.iter().zip(&sizes).map(|(c, &s)| pick(c) as f64 / (s as f64 * h)).collect();
        let pooled = counts.iter().map(pick).sum::<usize>() as f64 / (total as f64 * h);
        Estimate::from_replicas(pooled, &per)
    };
    let mut value = est(|c| c.1, eps);
    let half_step = est(|c| c.0, 0.5 * eps);
    let se = (value.stderr.powi(2) + half_step.stderr.powi(2)).sqrt();
    if (value.value - half_step.value).abs() > 3.0 * se + 0.05 * value.value.abs() {
        value = value.flag(Flag::RichardsonMismatch);
    }
    Ok(BoundaryMeasure { epsilon: eps, value, half_step })
}

/// `μ̂({⟨θ, x⟩ ≤ t + ε})`, the measure of an enlarged half-space.
pub fn halfspace_expansion(
    spec: &DistributionSpec,
    theta: &[f64],
    t: f64,
    eps: f64,
    samples: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<Estimate> {
    if theta.len() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: theta.len() });
    }
    let replicas = replicas.max(MIN_REPLICAS);
    let sizes = replica_sizes(samples.max(replicas), replicas);
    let c = marginal_counts(spec, &[theta.to_vec()], &[t + eps], &sizes, stream)?;
    let per: Vec<f64> = c.iter().zip(&sizes).map(|(r, &s)| r[0][0] as f64 / s as f64).collect();
    let pooled = c.iter().map(|r| r[0][0]).sum::<usize>() as f64 / sizes.iter().sum::<usize>() as f64;
    Ok(Estimate::from_replicas(pooled, &per))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheegerProbe {
    pub direction: usize,
    pub t: f64,
    pub cdf: f64,
    pub density: f64,
    /// `density / (F (1 - F))`.
    pub ratio: Estimate,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheegerEstimate {
    /// Half-space conductance: an upper bound for the Cheeger constant.
    pub value: Estimate,
    pub direction: Vec<f64>,
    pub t: f64,
    pub bandwidth: f64,
    pub probes: Vec<CheegerProbe>,
    pub skipped: usize,
    pub label: &'static str,
}

impl CheegerEstimate {
    /// `(direction, t, density, F, ratio)` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("direction,t,density,cdf,ratio\n");
        for p in &self.probes {
            let _ = writeln!(s, "{},{},{},{},{}", p.direction, p.t, p.density, p.cdf, p.ratio.value);
        }
        s
    }
}

/// `min density_θ(t) / (F_θ(t)(1 - F_θ(t)))` over probed directions and
/// thresholds. Coordinate axes are probed first, then random directions.
/// Densities are central differences of the empirical CDF at bandwidths
/// `h` and `h/2`; probes where the two disagree are skipped.
pub fn halfspace_cheeger(
    spec: &DistributionSpec,
    directions: usize,
    t_grid: &[f64],
    samples: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<CheegerEstimate> {
    if directions == 0 || t_grid.is_empty() {
        return Err(Error::InvalidArgument("need at least one direction and one threshold".into()));
    }
    let n = spec.dim;
    let mut dirs: Vec<Vec<f64>> = (0..n.min(directions))
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut rng = stream.fork("directions").rng();
    while dirs.len() < directions {
        dirs.push(random_unit_vector(n, &mut rng));
    }
    let h = DENSITY_BANDWIDTH;
    let offsets = [-h, -0.5 * h, 0.0, 0.5 * h, h];
    let mut thresholds: Vec<f64> = t_grid.iter().flat_map(|t| offsets.iter().map(move |o| t + o)).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let idx = |v: f64| thresholds.partition_point(|&c| c < v);

    let replicas = replicas.max(MIN_REPLICAS);
    let sizes = replica_sizes(samples.max(replicas), replicas);
    let total: usize = sizes.iter().sum();
    let counts = marginal_counts(spec, &dirs, &thresholds, &sizes, &stream.fork("samples"))?;

    let mut probes = Vec::new();
    let mut skipped = 0;
    for d in 0..dirs.len() {
        for &t in t_grid {
            let at = |k: usize, v: f64| -> f64 { counts[k][d][idx(v)] as f64 / sizes[k] as f64 };
            let pooled = |v: f64| -> f64 {
                counts.iter().map(|c| c[d][idx(v)]).sum::<usize>() as f64 / total as f64
            };
            let f = pooled(t);
            let d_h = (pooled(t + h) - pooled(t - h)) / (2.0 * h);
            let d_half = (pooled(t + 0.5 * h) - pooled(t - 0.5 * h)) / h;
            let mut flags = vec![];
            if (total as f64) * f.min(1.0 - f) < MIN_SIDE_EVENTS || d_h <= 0.0 {
                flags.push(Flag::DegenerateTail);
            }
            let diffs: Vec<f64> = (0..replicas)
                .map(|k| {
                    (at(k, t + h) - at(k, t - h)) / (2.0 * h) - (at(k, t + 0.5 * h) - at(k, t - 0.5 * h)) / h
                })
                .collect();
            let se = (variance(&diffs) / replicas as f64).sqrt();
            if (d_h - d_half).abs() > 4.0 * se + 0.05 * d_h {
                flags.push(Flag::BandwidthUnstable);
            }
            let per: Vec<f64> = (0..replicas)
                .map(|k| {
                    let fk = at(k, t);
                    (at(k, t + h) - at(k, t - h)) / (2.0 * h) / (fk * (1.0 - fk))
                })
                .filter(|v| v.is_finite())
                .collect();
            let ratio = Estimate::from_replicas(d_h / (f * (1.0 - f)), &per);
            if !flags.is_empty() {
                skipped += 1;
            }
            probes.push(CheegerProbe { direction: d, t, cdf: f, density: d_h, ratio, flags });
        }
    }
    let best = probes
        .iter()
        .filter(|p| p.flags.is_empty() && p.ratio.value.is_finite())
        .min_by(|a, b| a.ratio.value.total_cmp(&b.ratio.value))
        .ok_or_else(|| Error::InvalidArgument("every half-space probe was unstable or degenerate".into()))?;
    Ok(CheegerEstimate {
        value: best.ratio.clone().flag(Flag::UpperBound),
        direction: dirs[best.direction].clone(),
        t: best.t,
        bandwidth: h,
        probes: probes.clone(),
        skipped,
        label: "half-space conductance (upper bound for h)",
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CheegerBounds {
    pub n: usize,
    /// `1 / E|X|₂`.
    pub kls: f64,
    /// `(Var |X|₂²)^{-1/4}`.
    pub bobkov: f64,
    /// `n^{-1/3} (log n)^{-1/2}`.
    pub eldan: f64,
    /// `n^{-5/12}`, from `Var |X|₂² ≤ n^{5/3}`.
    pub variance_implied: f64,
    pub label: &'static str,
}

/// Lower bounds on the Cheeger constant with every universal constant set to 1.
pub fn cheeger_lower_bounds(shell: &ShellStats) -> Result<CheegerBounds> {
    let n = shell.n;
    if n < 2 {
        return Err(Error::InvalidArgument("lower bounds need n >= 2".into()));
    }
    let v = shell.var_sq.value;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::VanishingVariance);
    }
    let m = shell.mean_norm.value;
    if !(m > 0.0) {
        return Err(Error::InvalidArgument("mean norm must be positive".into()));
    }
    let nf = n as f64;
    Ok(CheegerBounds {
        n,
        kls: 1.0 / m,
        bobkov: v.powf(-0.25),
        eldan: nf.powf(-1.0 / 3.0) / nf.ln().sqrt(),
        variance_implied: nf.powf(-5.0 / 12.0),
        label: "up to a universal constant (set to 1)",
    })
}

/// Probe function for Rayleigh quotients.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PoincareProbe {
    Linear { theta: Vec<f64> },
    CoordinateSquare { index: usize },
    NormSquared,
    /// `√(|x|² + δ²)`, 1-Lipschitz.
    SmoothedNorm { delta: f64 },
}

impl PoincareProbe {
    pub fn name(&self) -> String {
        match self {
            PoincareProbe::Linear { .. } => "linear".into(),
            PoincareProbe::CoordinateSquare { index } => format!("coordinate-square-{index}"),
            PoincareProbe::NormSquared => "norm-squared".into(),
            PoincareProbe::SmoothedNorm { delta } => format!("smoothed-norm-{delta}"),
        }
    }

    fn value_and_grad_sq(&self, x: &[f64]) -> (f64, f64) {
        match self {
            PoincareProbe::Linear { theta } => (dot(theta, x), dot(theta, theta)),
            PoincareProbe::CoordinateSquare { index } => (x[*index] * x[*index], 4.0 * x[*index] * x[*index]),
            PoincareProbe::NormSquared => {
                let r2 = dot(x, x);
                (r2, 4.0 * r2)
            }
            PoincareProbe::SmoothedNorm { delta } => {
                let r2 = dot(x, x);
                let s = r2 + delta * delta;
                (s.sqrt(), r2 / s)
            }
        }
    }

    fn is_lipschitz(&self) -> bool {
        match self {
            PoincareProbe::Linear { theta } => norm2(theta) <= 1.0 + 1e-12,
            PoincareProbe::SmoothedNorm { .. } => true,
            _ => false,
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            PoincareProbe::Linear { theta } if theta.len() != n => {
                Err(Error::DimensionMismatch { expected: n, got: theta.len() })
            }
            PoincareProbe::CoordinateSquare { index } if *index >= n => {
                Err(Error::InvalidArgument(format!("coordinate {index} out of range for n = {n}")))
            }
            PoincareProbe::SmoothedNorm { delta } if !(*delta > 0.0) => {
                Err(Error::InvalidArgument("smoothing must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareQuotient {
    pub probe: String,
    /// `E|∇F|² / Var F`: an upper bound for the Poincaré constant.
    pub quotient: Estimate,
    pub variance: Estimate,
    pub grad_sq: Estimate,
    /// `1 / Var F` for 1-Lipschitz probes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz_certificate: Option<f64>,
}

/// Rayleigh quotient of an arbitrary probe given as `x ↦ (F(x), |∇F(x)|²)`.
pub fn poincare_quotient_fn(
    spec: &DistributionSpec,
    name: &str,
    f: impl Fn(&[f64]) -> (f64, f64) + Sync + Send,
    lipschitz: bool,
    samples: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<PoincareQuotient> {
    let replicas = replicas.max(MIN_REPLICAS);
    let sizes = replica_sizes(samples.max(2 * replicas), replicas);
    let parts = fold_replicas(spec, &sizes, stream, || (Vec::new(), Vec::new()), |acc: &mut (Vec<f64>, Vec<f64>), x| {
        let (v, g) = f(x);
        acc.0.push(v);
        acc.1.push(g);
    })?;
    let vars: Vec<f64> = parts.iter().map(|p| variance(&p.0)).collect();
    let grads: Vec<f64> = parts.iter().map(|p| mean(&p.1)).collect();
    let all_v: Vec<f64> = parts.iter().flat_map(|p| p.0.iter().copied()).collect();
    let all_g: Vec<f64> = parts.iter().flat_map(|p| p.1.iter().copied()).collect();
    let var = variance(&all_v);
    if !(var > 1e-300) {
        return Err(Error::VanishingVariance);
    }
    let g = mean(&all_g);
    let q_per: Vec<f64> = grads.iter().zip(&vars).map(|(a, b)| a / b).collect();
    Ok(PoincareQuotient {
        probe: name.to_string(),
        quotient: Estimate::from_replicas(g / var, &q_per).flag(Flag::UpperBound),
        variance: Estimate::from_replicas(var, &vars),
        grad_sq: Estimate::from_replicas(g, &grads),
        lipschitz_certificate: lipschitz.then(|| 1.0 / var),
    })
}

pub fn poincare_quotient(
    spec: &DistributionSpec,
    probe: &PoincareProbe,
    samples: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<PoincareQuotient> {
    probe.check(spec.dim)?;
    poincare_quotient_fn(spec, &probe.name(), |x| probe.value_and_grad_sq(x), probe.is_lipschitz(), samples, replicas, stream)
}

/// The default probe family: first axis, diagonal, first coordinate
/// squared, squared norm and the smoothed norm with `δ = 1`.
pub fn default_probes(n: usize) -> Vec<PoincareProbe> {
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    vec![
        PoincareProbe::Linear { theta: e },
        PoincareProbe::Linear { theta: vec![1.0 / (n as f64).sqrt(); n] },
        PoincareProbe::CoordinateSquare { index: 0 },
        PoincareProbe::NormSquared,
        PoincareProbe::SmoothedNorm { delta: 1.0 },
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct IsoperimetryReport {
    pub spec: String,
    pub n: usize,
    pub halfspace: CheegerEstimate,
    pub lower_bounds: CheegerBounds,
    pub poincare: Vec<PoincareQuotient>,
    /// `h̃² / min quotient`, for reference only.
    pub cheeger_poincare_ratio: f64,
}

/// Half-space estimate, lower bounds from `shell`, and the probe quotients.
pub fn isoperimetry_report(
    spec: &DistributionSpec,
    shell: &ShellStats,
    directions: usize,
    t_grid: &[f64],
    samples: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<IsoperimetryReport> {
    let halfspace = halfspace_cheeger(spec, directions, t_grid, samples, replicas, &stream.fork("cheeger"))?;
    let lower_bounds = cheeger_lower_bounds(shell)?;
    let poincare = default_probes(spec.dim)
        .iter()
        .enumerate()
        .map(|(i, p)| poincare_quotient(spec, p, samples, replicas, &stream.fork("poincare").replica(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let min_q = poincare.iter().map(|q| q.quotient.value).fold(f64::INFINITY, f64::min);
    Ok(IsoperimetryReport {
        spec: spec.id(),
        n: spec.dim,
        cheeger_poincare_ratio: halfspace.value.value.powi(2) / min_q,
        halfspace,
        lower_bounds,
        poincare,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Family;
    use crate::isotropy::AffineMap;
    use crate::numerics::special::normal_pdf;
    use crate::numerics::Matrix;

    #[test]
    fn profile_values() {
        assert_eq!(gaussian_halfspace_profile(0.5, 0.0).unwrap(), 0.5);
        assert!((gaussian_halfspace_profile(0.5, 0.1).unwrap() - 0.539_827_837_277_029).abs() < 1e-12);
        assert!(gaussian_halfspace_profile(0.5, 6.0).unwrap() >= 1.0 - 1e-9);
        assert!(gaussian_halfspace_profile(1.0, 0.1).is_err());
    }

    #[test]
    fn gaussian_halfspace_boundary() {
        let spec = DistributionSpec::gaussian(3);
        let set = TestSet::Halfspace { theta: vec![0.0, 0.0, 1.0], t: 0.0 };
        let b = boundary_measure(&spec, &set, 0.01, 400_000, 16, &RngStream::new(1)).unwrap();
        assert!(b.value.within_sigmas(normal_pdf(0.0), 4.0, 0.0), "{:?}", b.value);
        let all = boundary_measure(&spec, &TestSet::Everything, 0.01, 100, 16, &RngStream::new(1)).unwrap();
        assert_eq!(all.value.value, 0.0);
    }

    #[test]
    fn cheeger_scales_inversely() {
        let spec = DistributionSpec::gaussian(2);
        let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let a = halfspace_cheeger(&spec, 4, &grid, 200_000, 16, &RngStream::new(2)).unwrap();
        assert!((a.value.value - 1.596).abs() < 0.08, "{:?}", a.value);
        let doubled = spec.transformed(&AffineMap::linear(Matrix::identity(2).scale(2.0)).unwrap()).unwrap();
        let b = halfspace_cheeger(&doubled, 4, &grid, 200_000, 16, &RngStream::new(2)).unwrap();
        assert!((b.value.value / a.value.value - 0.5).abs() < 0.05);
    }

    #[test]
    fn quotients_of_known_probes() {
        let spec = DistributionSpec::isotropic(Family::UniformCube, 3);
        let q = poincare_quotient(&spec, &PoincareProbe::CoordinateSquare { index: 1 }, 100_000, 16, &RngStream::new(3))
            .unwrap();
        assert!(q.quotient.within_sigmas(5.0, 4.0, 0.0), "{:?}", q.quotient);
        let g = DistributionSpec::gaussian(4);
        let q = poincare_quotient(&g, &PoincareProbe::NormSquared, 100_000, 16, &RngStream::new(4)).unwrap();
        assert!(q.quotient.within_sigmas(2.0, 4.0, 0.0), "{:?}", q.quotient);
        assert!(q.lipschitz_certificate.is_none());
    }

    #[test]
    fn constant_probe_rejected() {
        let spec = DistributionSpec::gaussian(2);
        let r = poincare_quotient_fn(&spec, "const", |_| (1.0, 0.0), true, 100, 16, &RngStream::new(5));
        assert!(matches!(r, Err(Error::VanishingVariance)));
    }
}
