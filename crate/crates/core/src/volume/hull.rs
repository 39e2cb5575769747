use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::linalg::{dot, norm2};
use crate::numerics::stats::{replica_sizes, replicate, MIN_REPLICAS};
use crate::numerics::{random_unit_vector, Estimate, RngStream};

const MAX_ITERATIONS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HullMembership {
    /// A point of the hull lies within the tolerance.
    Inside,
    /// A separating direction was found.
    Outside,
    Indeterminate,
}

/// Is `y` in `conv{±u_1, …, ±u_N}`?
///
/// Pairwise Frank-Wolfe on `½|z - y|²` over the hull. `Inside` once the
/// iterate is within `tol` of `y`; `Outside` once `w = y - z` satisfies
/// `⟨w, y⟩ > max_i |⟨w, u_i⟩|`, which certifies separation.
pub fn hull_membership(points: &[Vec<f64>], y: &[f64], tol: f64) -> HullMembership {
    let n = y.len();
    let m = points.len();
    if m == 0 {
        return if norm2(y) <= tol { HullMembership::Inside } else { HullMembership::Outside };
    }
    // Vertex 2i is u_i, vertex 2i+1 is -u_i.
    let vertex = |j: usize| -> (usize, f64) { (j / 2, if j.is_multiple_of(2) { 1.0 } else { -1.0 }) };
    let mut weights = vec![0.0; 2 * m];
    let start = (0..2 * m)
        .max_by(|&a, &b| {
            let (ia, sa) = vertex(a);
            let (ib, sb) = vertex(b);
            (sa * dot(&points[ia], y)).total_cmp(&(sb * dot(&points[ib], y)))
        })
        .expect("non-empty");
    weights[start] = 1.0;
    let (i0, s0) = vertex(start);
    let mut z: Vec<f64> = points[i0].iter().map(|v| s0 * v).collect();
    let mut w = vec![0.0; n];
    let mut proj = vec![0.0; m];
    for _ in 0..MAX_ITERATIONS {
        for ((wi, yi), zi) in w.iter_mut().zip(y).zip(&z) {
            *wi = yi - zi;
        }
        if norm2(&w) <= tol {
            return HullMembership::Inside;
        }
        for (p, u) in proj.iter_mut().zip(points) {
            *p = dot(&w, u);
        }
        let support = proj.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if dot(&w, y) > support * (1.0 + 1e-12) + 1e-300 {
            return HullMembership::Outside;
        }
        // Toward: vertex maximizing ⟨w, v⟩. Away: active vertex minimizing it.
        let toward = (0..2 * m)
            .max_by(|&a, &b| {
                let (ia, sa) = vertex(a);
                let (ib, sb) = vertex(b);
                (sa * proj[ia]).total_cmp(&(sb * proj[ib]))
            })
            .expect("non-empty");
        let away = (0..2 * m)
            .filter(|&j| weights[j] > 0.0)
            .min_by(|&a, &b| {
                let (ia, sa) = vertex(a);
                let (ib, sb) = vertex(b);
                (sa * proj[ia]).total_cmp(&(sb * proj[ib]))
            })
            .expect("some weight is positive");
        if toward == away {
            return HullMembership::Indeterminate;
        }
        let (it, st) = vertex(toward);
        let (ia, sa) = vertex(away);
        let d: Vec<f64> = points[it].iter().zip(&points[ia]).map(|(a, b)| st * a - sa * b).collect();
        let gain = dot(&w, &d);
        let dd = dot(&d, &d);
        if !(gain > 0.0) || dd == 0.0 {
            return HullMembership::Indeterminate;
        }
        let gamma = (gain / dd).min(weights[away]);
        for (zi, di) in z.iter_mut().zip(&d) {
            *zi += gamma * di;
        }
        weights[toward] += gamma;
        weights[away] -= gamma;
        if weights[away] < 1e-15 {
            weights[away] = 0.0;
        }
    }
    HullMembership::Indeterminate
}

#[derive(Debug, Clone, Serialize)]
pub struct HullRatio {
    pub n: usize,
    pub points: usize,
    /// `Vol(conv{±u_i}) / Vol(B_2^n)`.
    pub ratio: Estimate,
    /// `ratio^{1/n}`.
    pub root: Estimate,
    /// `√(log(1 + N/n) / n)`, constant excluded.
    pub bound: f64,
    /// Monte-Carlo points resampled after an indeterminate test.
    pub indeterminate: usize,
}

fn uniform_in_ball<R: Rng + ?Sized>(n: usize, rng: &mut R, out: &mut [f64]) {
    let mut norm = 0.0;
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
        norm += *v * *v;
    }
    let r = rng.random::<f64>().powf(1.0 / n as f64) / norm.sqrt();
    out.iter_mut().for_each(|v| *v *= r);
}

/// Volume ratio of the absolute convex hull of the given points to the
/// Euclidean unit ball. The Monte-Carlo points depend only on `stream`,
/// so nested point sets are compared on common random numbers.
pub fn hull_volume_ratio_for(
    points: &[Vec<f64>],
    trials: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<HullRatio> {
    let n = points.first().map(Vec::len).ok_or(Error::EmptySample)?;
    if points.iter().any(|p| p.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: points.iter().map(Vec::len).find(|&l| l != n).unwrap_or(n) });
    }
    if n > 6 {
        return Err(Error::ScaleLimit(format!("hull volume experiments are limited to n <= 6, got {n}")));
    }
    let replicas = replicas.max(MIN_REPLICAS);
    let sizes = replica_sizes(trials.max(replicas), replicas);
    let counts = replicate(stream, replicas, |k, rng| {
        let mut y = vec![0.0; n];
        let (mut inside, mut resampled) = (0usize, 0usize);
        let mut done = 0;
        while done < sizes[k] {
            uniform_in_ball(n, rng, &mut y);
            match hull_membership(points, &y, 1e-8) {
                HullMembership::Inside => inside += 1,
                HullMembership::Outside => {}
                HullMembership::Indeterminate => {
                    resampled += 1;
                    continue;
                }
            }
            done += 1;
        }
        (inside, resampled)
    });
    let per: Vec<f64> = counts.iter().zip(&sizes).map(|(c, &s)| c.0 as f64 / s as f64).collect();
    let pooled = counts.iter().map(|c| c.0).sum::<usize>() as f64 / sizes.iter().sum::<usize>() as f64;
    let ratio = Estimate::from_replicas(pooled, &per);
    let nf = n as f64;
    let root = ratio.map(|v| v.max(0.0).powf(1.0 / nf));
    Ok(HullRatio {
        n,
        points: points.len(),
        ratio,
        root,
        bound: ((1.0 + points.len() as f64 / nf).ln() / nf).sqrt(),
        indeterminate: counts.iter().map(|c| c.1).sum(),
    })
}

/// As [`hull_volume_ratio_for`] with `n_points` uniform points on `S^{n-1}`.
pub fn hull_volume_ratio(n: usize, n_points: usize, trials: usize, stream: &RngStream) -> Result<HullRatio> {
    if n == 0 || n_points == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and at least one point".into()));
    }
    let mut rng = stream.fork("points").rng();
    let points: Vec<Vec<f64>> = (0..n_points).map(|_| random_unit_vector(n, &mut rng)).collect();
    hull_volume_ratio_for(&points, trials, MIN_REPLICAS, &stream.fork("monte-carlo"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect()
    }

    #[test]
    fn cross_polytope_membership() {
        let b = basis(3);
        assert_eq!(hull_membership(&b, &[0.2, 0.3, 0.4], 1e-8), HullMembership::Inside);
        assert_eq!(hull_membership(&b, &[0.4, 0.3, 0.4], 1e-8), HullMembership::Outside);
        assert_eq!(hull_membership(&b, &[-0.1, 0.0, -0.85], 1e-8), HullMembership::Inside);
    }

    #[test]
    fn cross_polytope_ratio() {
        let r = hull_volume_ratio_for(&basis(3), 100_000, 16, &RngStream::new(3)).unwrap();
        let want = (1.0 / std::f64::consts::PI).powf(1.0 / 3.0);
        assert!((r.root.value - want).abs() < 0.01, "{:?}", r.root);
        assert!((r.bound - (2f64.ln() / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nested_sets_are_monotone() {
        let s = RngStream::new(5);
        let mut rng = s.fork("pts").rng();
        let pts: Vec<Vec<f64>> = (0..8).map(|_| random_unit_vector(3, &mut rng)).collect();
        let mut last = 0.0;
        for k in [3, 5, 8] {
            let r = hull_volume_ratio_for(&pts[..k], 20_000, 16, &s).unwrap();
            assert!(r.ratio.value >= last && r.ratio.value <= 1.0);
            last = r.ratio.value;
        }
    }
}
