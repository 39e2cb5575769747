use serde::Serialize;

use super::body::ConvexBody;
use super::walk::HitAndRun;
use crate::error::{Error, Result};
use crate::isotropy::{mean_and_covariance, AffineMap};
use crate::numerics::linalg::{dot, inv_sqrt_spd};
use crate::numerics::stats::{replica_sizes, replicate, MIN_REPLICAS};
use crate::numerics::{random_unit_vector, Matrix, RngStream};

/// Result of putting a body near isotropic position.
#[derive(Debug, Clone, Serialize)]
pub struct Rounding {
    /// Empirical whitening `x ↦ Σ̂^{-1/2}(x - μ̂)`.
    pub map: AffineMap,
    /// Probed inner and outer radii of `T(K)` around the origin.
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// `R̂ / r̂`.
    pub sandwich: f64,
    pub probes: usize,
    pub oracle_calls: u64,
    #[serde(skip)]
    pub body: ConvexBody,
}

/// Boundary distance from `x` along unit `u`, bisected to `tol`.
fn boundary_distance(body: &ConvexBody, x: &[f64], u: &[f64], hi: f64, tol: f64, calls: &mut u64) -> f64 {
    let at = |t: f64| x.iter().zip(u).map(|(a, b)| a + t * b).collect::<Vec<f64>>();
    let (mut lo, mut hi) = (0.0, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        *calls += 1;
        if body.contains(&at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Whitens `body` with `samples` hit-and-run points (`walk_budget` steps
/// apart, over independent chains), then probes `2n + 64` directions to
/// estimate the sandwich ratio of the image.
pub fn round_body(body: &ConvexBody, samples: usize, walk_budget: usize, stream: &RngStream) -> Result<Rounding> {
    let n = body.dim();
    if samples <= n {
        return Err(Error::InvalidArgument(format!("need more than n = {n} samples")));
    }
    let walk_budget = walk_budget.max(1);
    let sizes = replica_sizes(samples, MIN_REPLICAS);
    let burn_in = n * n;
    let chains = replicate(stream, MIN_REPLICAS, |k, rng| -> Result<(Vec<f64>, u64)> {
        let mut chain = HitAndRun::new(body.clone());
        chain.run(burn_in, rng)?;
        let mut pts = Vec::with_capacity(sizes[k] * n);
        for _ in 0..sizes[k] {
            pts.extend_from_slice(chain.run(walk_budget, rng)?);
        }
        Ok((pts, chain.oracle_calls()))
    });
    let mut data = Vec::with_capacity(samples * n);
    let mut calls = 0;
    for c in chains {
        let (pts, k) = c?;
        data.extend(pts);
        calls += k;
    }
    let data = Matrix::from_row_major(samples, n, data)?;
    let (mean, cov) = mean_and_covariance(&data);
    let w = inv_sqrt_spd(&cov)?;
    let shift = w.matvec(&mean).into_iter().map(|v| -v).collect();
    let map = AffineMap::new(w, shift)?;
    let rounded = body.transformed(&map)?;

    let origin = vec![0.0; n];
    if !rounded.contains(&origin) {
        return Err(Error::CertificateViolation("sample barycenter fell outside the body".into()));
    }
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(2 * n + 64);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            dirs.push(e);
        }
    }
    let mut rng = stream.fork("probe").rng();
    for _ in 0..64 {
        dirs.push(random_unit_vector(n, &mut rng));
    }
    let cert = rounded.certificate();
    let reach = cert.outer_radius + dot(&cert.center, &cert.center).sqrt();
    let tol = 1e-9 * reach;
    let mut r_in = f64::INFINITY;
    let mut r_out: f64 = 0.0;
    for u in &dirs {
        let d = boundary_distance(&rounded, &origin, u, reach, tol, &mut calls);
        r_in = r_in.min(d);
        r_out = r_out.max(d);
    }
    Ok(Rounding {
        map,
        inner_radius: r_in,
        outer_radius: r_out,
        sandwich: r_out / r_in,
        probes: dirs.len(),
        oracle_calls: calls,
        body: rounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::BodyDescriptor;

    #[test]
    fn ball_stays_round() {
        let b = BodyDescriptor::Ball { dim: 3, radius: 1.0 }.build().unwrap();
        let r = round_body(&b, 4000, 3, &RngStream::new(1)).unwrap();
        assert!(r.sandwich <= 1.1, "{}", r.sandwich);
        for i in 0..3 {
            // Var of a coordinate in the unit ball is 1/5.
            assert!((r.map.linear[(i, i)] - 5f64.sqrt()).abs() < 0.2);
        }
    }

    #[test]
    fn ellipsoid_becomes_round() {
        let b = BodyDescriptor::Ellipsoid { semiaxes: vec![1.0, 4.0] }.build().unwrap();
        let r = round_body(&b, 8000, 4, &RngStream::new(2)).unwrap();
        assert!(r.sandwich <= 1.3, "{}", r.sandwich);
    }
}
