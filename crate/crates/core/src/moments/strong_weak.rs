use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_moment_exists, grouped_means, root_moment, row_values};
use crate::distributions::{fold_replicas, sample, DistributionSpec};
use crate::error::{Error, Result};
use crate::numerics::linalg::{dot, norm2};
use crate::numerics::stats::{pairwise_sum, replica_sizes, MIN_REPLICAS};
use crate::numerics::{random_unit_vector, Estimate, Flag, Matrix, RngStream};

const RANDOM_DIRECTIONS: usize = 64;
const REFINE_STEPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    L2,
    L1,
    LInf,
}

impl NormKind {
    pub fn norm(&self, x: &[f64]) -> f64 {
        match self {
            NormKind::L2 => norm2(x),
            NormKind::L1 => x.iter().map(|v| v.abs()).sum(),
            NormKind::LInf => x.iter().fold(0.0, |a, v| a.max(v.abs())),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::L2 => "l2",
            NormKind::L1 => "l1",
            NormKind::LInf => "linf",
        })
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(NormKind::L2),
            "l1" => Ok(NormKind::L1),
            "linf" | "inf" => Ok(NormKind::LInf),
            _ => Err(Error::InvalidArgument(format!("unknown norm '{s}' (expected l2, l1 or linf)"))),
        }
    }
}

/// `{1, 2, 4, …}` up to `2⌈√n⌉`.
pub fn default_p_grid(n: usize) -> Vec<f64> {
    let top = 2.0 * (n as f64).sqrt().ceil();
    let mut g = vec![1.0];
    while g.last().expect("non-empty") * 2.0 <= top {
        g.push(g.last().expect("non-empty") * 2.0);
    }
    g
}

/// Directional moment `sup_z (E|⟨z, X⟩|^p)^{1/p}` over the dual unit ball,
/// as the value at one searched direction: a lower bound.
#[derive(Debug, Clone, Serialize)]
pub struct WeakMoment {
    pub p: f64,
    pub value: Estimate,
    pub direction: Vec<f64>,
    /// Which candidate class produced the direction.
    pub source: String,
    pub candidates: usize,
    /// Rows used by the search; the value is evaluated on fresh rows.
    pub search_samples: usize,
}

fn moment_along(data: &Matrix, z: &[f64], p: f64, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend((0..data.rows()).map(|i| dot(z, data.row(i)).abs().powf(p)));
    pairwise_sum(buf) / data.rows() as f64
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Projected gradient ascent on the sphere.
fn refine_on_sphere(data: &Matrix, p: f64, start: &[f64], start_value: f64, buf: &mut Vec<f64>) -> (Vec<f64>, f64) {
    let n = data.cols();
    let rows = data.rows() as f64;
    let (mut z, mut f) = (start.to_vec(), start_value);
    let mut step = 0.5;
    for _ in 0..REFINE_STEPS {
        let mut g = vec![0.0; n];
        for i in 0..data.rows() {
            let x = data.row(i);
            let s = dot(&z, x);
            let w = p * s.abs().powf(p - 1.0) * s.signum() / rows;
            g.iter_mut().zip(x).for_each(|(gi, xi)| *gi += w * xi);
        }
        let gz = dot(&g, &z);
        g.iter_mut().zip(&z).for_each(|(gi, zi)| *gi -= gz * zi);
        let gn = norm2(&g);
        if !(gn > 1e-14 * f.max(1e-300)) {
            break;
        }
        loop {
            let mut cand: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a + step * b / gn).collect();
            let cn = norm2(&cand);
            cand.iter_mut().for_each(|v| *v /= cn);
            let fc = moment_along(data, &cand, p, buf);
            if fc > f {
                z = cand;
                f = fc;
                break;
            }
            step *= 0.5;
            if step < 1e-6 {
                return (z, f);
            }
        }
    }
    (z, f)
}

/// Best sign vector by single-coordinate flips from `start`.
fn refine_on_cube(data: &Matrix, p: f64, start: &[f64], start_value: f64) -> (Vec<f64>, f64) {
    let n = data.cols();
    let rows = data.rows();
    let mut z = start.to_vec();
    let mut proj: Vec<f64> = (0..rows).map(|i| dot(&z, data.row(i))).collect();
    let mut f = start_value;
    let mut buf = vec![0.0; rows];
    for _ in 0..REFINE_STEPS {
        let mut improved = false;
        for c in 0..n {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = (proj[i] - 2.0 * z[c] * data.row(i)[c]).abs().powf(p);
            }
            let fc = pairwise_sum(&buf) / rows as f64;
            if fc > f {
                for (i, pr) in proj.iter_mut().enumerate() {
                    *pr -= 2.0 * z[c] * data.row(i)[c];
                }
                z[c] = -z[c];
                f = fc;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    (z, f)
}

/// Direction search inside the unit ball of the dual of `norm`.
fn search_direction<R: Rng + ?Sized>(data: &Matrix, p: f64, norm: NormKind, rng: &mut R) -> (Vec<f64>, String, usize) {
    let n = data.cols();
    let mut buf = Vec::with_capacity(data.rows());
    let mut cands: Vec<(Vec<f64>, &'static str)> = Vec::new();
    match norm {
        // Dual of ℓ∞ is ℓ₁, whose extreme points are ±e_i.
        NormKind::LInf => cands.extend((0..n).map(|i| (unit(n, i), "vertex"))),
        NormKind::L2 => {
            cands.extend((0..n).map(|i| (unit(n, i), "coordinate")));
            cands.extend((0..RANDOM_DIRECTIONS).map(|_| (random_unit_vector(n, rng), "random")));
        }
        NormKind::L1 => {
            cands.push((vec![1.0; n], "vertex"));
            for _ in 0..RANDOM_DIRECTIONS {
                let s = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
                cands.push((s, "vertex"));
            }
        }
    }
    let count = cands.len();
    let (best, best_f) = cands
        .iter()
        .enumerate()
        .map(|(i, (z, _))| (i, moment_along(data, z, p, &mut buf)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let (z0, src) = cands.swap_remove(best);
    let (z, f) = match norm {
        NormKind::LInf => (z0, best_f),
        NormKind::L2 => refine_on_sphere(data, p, &z0, best_f, &mut buf),
        NormKind::L1 => refine_on_cube(data, p, &z0, best_f),
    };
    let source = if f > best_f * (1.0 + 1e-12) { "refined" } else { src };
    (z, source.to_string(), count)
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakStrongRow {
    pub p: f64,
    /// `(E‖X‖^p)^{1/p}`.
    pub strong: Estimate,
    pub weak: WeakMoment,
    /// `strong / (E‖X‖ + weak)`.
    pub ratio: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentProfile {
    pub n: usize,
    pub norm: NormKind,
    pub samples: usize,
    pub replicas: usize,
    pub mean_norm: Estimate,
    pub rows: Vec<WeakStrongRow>,
}

fn search_size(samples: usize) -> usize {
    (samples / 8).clamp(2_000, 20_000)
}

/// Strong moments, weak moments in the dual ball and their ratio along a
/// `p`-grid. Directions are searched on an independent batch and
/// evaluated on the replica batches.
pub fn weak_strong_check(
    spec: &DistributionSpec,
    p_grid: &[f64],
    norm: NormKind,
    samples: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<MomentProfile> {
    if p_grid.is_empty() || p_grid.iter().any(|p| !(*p >= 1.0)) {
        return Err(Error::InvalidArgument("p-grid must be non-empty with every p >= 1".into()));
    }
    for &p in p_grid {
        check_moment_exists(spec, p)?;
    }
    let replicas = replicas.max(MIN_REPLICAS);
    if samples < replicas {
        return Err(Error::InvalidArgument(format!("need at least {replicas} samples, got {samples}")));
    }
    let search = sample(spec, search_size(samples), &stream.fork("search"))?;
    let mut rng = stream.fork("directions").rng();
    let found: Vec<(Vec<f64>, String, usize)> =
        p_grid.iter().map(|&p| search_direction(&search.data, p, norm, &mut rng)).collect();

    let k = p_grid.len();
    let stride = k + 1;
    let sizes = replica_sizes(samples, replicas);
    let parts = fold_replicas(spec, &sizes, &stream.fork("evaluate"), Vec::new, |acc: &mut Vec<f64>, x| {
        acc.push(norm.norm(x));
        acc.extend(found.iter().map(|(z, _, _)| dot(z, x).abs()));
    })?;
    let column = |j: usize| -> Vec<Vec<f64>> {
        parts.iter().map(|p| p.chunks(stride).map(|c| c[j]).collect()).collect()
    };
    let norms = column(0);
    let (m1, m1_per) = grouped_means(&norms, |v| v);
    let mean_norm = Estimate::from_replicas(m1, &m1_per);

    let rows = p_grid
        .iter()
        .zip(found)
        .enumerate()
        .map(|(j, (&p, (z, source, candidates)))| {
            let (sp, sp_per) = grouped_means(&norms, |v| v.powf(p));
            let strong = root_moment(sp, &sp_per, p);
            let proj = column(j + 1);
            let (wp, wp_per) = grouped_means(&proj, |v| v.powf(p));
            let weak = root_moment(wp, &wp_per, p).flag(Flag::LowerBound);
            let ratio_per: Vec<f64> = (0..replicas)
                .map(|r| sp_per[r].powf(1.0 / p) / (m1_per[r] + wp_per[r].powf(1.0 / p)))
                .collect();
            let ratio = Estimate::from_replicas(strong.value / (mean_norm.value + weak.value), &ratio_per);
            WeakStrongRow {
                p,
                strong,
                weak: WeakMoment { p, value: weak, direction: z, source, candidates, search_samples: search.len() },
                ratio,
            }
        })
        .collect();
    Ok(MomentProfile { n: spec.dim, norm, samples, replicas, mean_norm, rows })
}

/// `(E|X|₂^p)^{1/p}`; median of replica means for `p > 8`.
pub fn strong_moment(spec: &DistributionSpec, p: f64, samples: usize, replicas: usize, stream: &RngStream) -> Result<Estimate> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("strong moments need p >= 1, got {p}")));
    }
    check_moment_exists(spec, p)?;
    let parts = row_values(spec, samples, replicas, stream, norm2)?;
    let (pooled, per) = grouped_means(&parts, |v| v.powf(p));
    Ok(root_moment(pooled, &per, p))
}

/// `σ_p(X)` lower bound over the Euclidean unit sphere.
pub fn weak_moment(spec: &DistributionSpec, p: f64, samples: usize, replicas: usize, stream: &RngStream) -> Result<WeakMoment> {
    let mut prof = weak_strong_check(spec, &[p], NormKind::L2, samples, replicas, stream)?;
    Ok(prof.rows.pop().expect("one row").weak)
}

#[derive(Debug, Clone, Serialize)]
pub struct BorellRow {
    pub p: f64,
    pub moment: Estimate,
    /// `moment / p`.
    pub growth: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct BorellTable {
    pub direction: Vec<f64>,
    pub rows: Vec<BorellRow>,
    /// Largest `growth` over the grid: the empirical constant.
    pub max_growth: f64,
}

/// `(E|⟨z, X⟩|^p)^{1/p} / p` along a `p`-grid for a log-concave spec.
pub fn borell_growth(
    spec: &DistributionSpec,
    z: &[f64],
    p_grid: &[f64],
    samples: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<BorellTable> {
    if !spec.family.is_log_concave() {
        return Err(Error::InvalidSpec("marginal growth bounds apply to log-concave specs only".into()));
    }
    if z.len() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: z.len() });
    }
    if (norm2(z) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("direction must be a unit vector".into()));
    }
    if p_grid.is_empty() || p_grid.iter().any(|p| !(*p >= 1.0)) {
        return Err(Error::InvalidArgument("p-grid must be non-empty with every p >= 1".into()));
    }
    let parts = row_values(spec, samples, replicas, stream, |x| dot(z, x).abs())?;
    let rows: Vec<BorellRow> = p_grid
        .iter()
        .map(|&p| {
            let (m, per) = grouped_means(&parts, |v| v.powf(p));
            let moment = root_moment(m, &per, p);
            let growth = moment.map(|v| v / p);
            BorellRow { p, moment, growth }
        })
        .collect();
    let max_growth = rows.iter().map(|r| r.growth.value).fold(f64::NEG_INFINITY, f64::max);
    Ok(BorellTable { direction: z.to_vec(), rows, max_growth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Family, Gauge};

    #[test]
    fn grid_shape() {
        assert_eq!(default_p_grid(64), vec![1.0, 2.0, 4.0, 8.0, 16.0]);
        assert_eq!(default_p_grid(10), vec![1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn gaussian_strong_moments() {
        let spec = DistributionSpec::gaussian(5);
        let s = strong_moment(&spec, 2.0, 80_000, 16, &RngStream::new(1)).unwrap();
        assert!(s.within_sigmas(5f64.sqrt(), 4.0, 0.0), "{s:?}");
        let s4 = strong_moment(&spec, 4.0, 80_000, 16, &RngStream::new(1)).unwrap();
        assert!(s4.within_sigmas(35f64.powf(0.25), 4.0, 0.0), "{s4:?}");
    }

    #[test]
    fn sconcave_moment_refused() {
        let spec = DistributionSpec::isotropic(Family::SConcave { r: 5.0, gauge: Gauge::L2 }, 3);
        assert!(matches!(
            strong_moment(&spec, 6.0, 1000, 16, &RngStream::new(1)),
            Err(Error::MomentDoesNotExist { .. })
        ));
    }

    #[test]
    fn isotropic_weak_second_moment_is_one() {
        let spec = DistributionSpec::isotropic(Family::UniformCube, 6);
        let w = weak_moment(&spec, 2.0, 40_000, 16, &RngStream::new(2)).unwrap();
        assert!(w.value.within_sigmas(1.0, 4.0, 0.0), "{:?}", w.value);
        assert!(w.value.has_flag(Flag::LowerBound));
        assert!((norm2(&w.direction) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn laplace_coordinate_direction_wins() {
        let spec = DistributionSpec::isotropic(Family::ProductExponential, 4);
        let w = weak_moment(&spec, 8.0, 40_000, 16, &RngStream::new(3)).unwrap();
        let top = w.direction.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(top > 0.95, "{:?}", w.direction);
    }

    #[test]
    fn weak_below_strong_every_norm() {
        let spec = DistributionSpec::isotropic(Family::UniformLpBall { p: 1.0 }, 8);
        for norm in [NormKind::L2, NormKind::L1, NormKind::LInf] {
            let prof = weak_strong_check(&spec, &[1.0, 2.0, 4.0], norm, 20_000, 16, &RngStream::new(4)).unwrap();
            for r in &prof.rows {
                assert!(r.weak.value.value <= r.strong.value + 3.0 * r.strong.stderr.max(r.weak.value.stderr));
            }
            assert!(prof.rows[0].ratio.value <= 1.0);
            assert!(prof.rows.windows(2).all(|w| w[0].strong.value <= w[1].strong.value));
        }
    }

    #[test]
    fn borell_growth_at_two_is_half() {
        let spec = DistributionSpec::gaussian(3);
        let t = borell_growth(&spec, &[0.0, 1.0, 0.0], &[2.0, 4.0, 8.0], 40_000, 16, &RngStream::new(5)).unwrap();
        assert!(t.rows[0].growth.within_sigmas(0.5, 4.0, 0.0));
        assert!(t.rows[1].growth.value < t.rows[0].growth.value);
    }

    #[test]
    fn norm_names_round_trip() {
        for n in [NormKind::L2, NormKind::L1, NormKind::LInf] {
            assert_eq!(n.to_string().parse::<NormKind>().unwrap(), n);
        }
    }
}
