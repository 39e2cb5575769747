//! Hit-and-run on a membership oracle.

use rand::Rng;

use super::body::ConvexBody;
use crate::error::{Error, Result};
use crate::numerics::linalg::dot;
use crate::numerics::random_unit_vector;

/// Relative bisection tolerance for chord endpoints, in units of `R_out`.
pub const CHORD_TOL: f64 = 1e-9;

/// Largest `t ≥ 0` with `x + t u` on the boundary, given that `x` is inside.
///
/// The outer certificate bounds the search: the chord cannot leave the
/// ball of radius `R_out` around the certified centre.
fn chord_end(body: &ConvexBody, x: &[f64], u: &[f64], calls: &mut u64) -> Result<f64> {
    let c = body.certificate();
    let r_out = c.outer_radius;
    let d: Vec<f64> = x.iter().zip(&c.center).map(|(a, b)| a - b).collect();
    // |d + t u|² = R² → t² + 2 (d·u) t + |d|² - R² = 0.
    let b = dot(&d, u);
    let disc = b * b - (dot(&d, &d) - r_out * r_out);
    if disc < 0.0 {
        return Err(Error::CertificateViolation("current point lies outside the outer ball".into()));
    }
    let mut hi = -b + disc.sqrt();
    let mut lo = 0.0;
    let mut probe = vec![0.0; x.len()];
    let mut inside = |t: f64, calls: &mut u64| {
        for ((p, xi), ui) in probe.iter_mut().zip(x).zip(u) {
            *p = xi + t * ui;
        }
        *calls += 1;
        body.contains(&probe)
    };
    if inside(hi, calls) {
        // The chord reaches the outer sphere; a point strictly beyond it
        // would violate the certificate.
        if inside(hi * (1.0 + 1e-6) + 1e-9 * r_out, calls) {
            return Err(Error::CertificateViolation("body extends past its outer radius".into()));
        }
        return Ok(hi);
    }
    let tol = CHORD_TOL * r_out;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if inside(mid, calls) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// One hit-and-run step from an interior point `x`: uniform point on the
/// chord through `x` in a uniform random direction.
pub fn hit_and_run_step<R: Rng + ?Sized>(
    body: &ConvexBody,
    x: &[f64],
    rng: &mut R,
    calls: &mut u64,
) -> Result<Vec<f64>> {
    *calls += 1;
    if !body.contains(x) {
        return Err(Error::CertificateViolation("hit-and-run started outside the body".into()));
    }
    let u = random_unit_vector(x.len(), rng);
    let fwd = chord_end(body, x, &u, calls)?;
    let neg: Vec<f64> = u.iter().map(|v| -v).collect();
    let back = chord_end(body, x, &neg, calls)?;
    let t = -back + (fwd + back) * rng.random::<f64>();
    Ok(x.iter().zip(&u).map(|(a, b)| a + t * b).collect())
}

/// A hit-and-run chain with its oracle-call counter.
#[derive(Debug, Clone)]
pub struct HitAndRun {
    body: ConvexBody,
    x: Vec<f64>,
    calls: u64,
    steps: u64,
}

impl HitAndRun {
    /// Chain started at the certified centre.
    pub fn new(body: ConvexBody) -> Self {
        let x = body.certificate().center.clone();
        Self { body, x, calls: 0, steps: 0 }
    }

    pub fn start_at(body: ConvexBody, x: Vec<f64>) -> Result<Self> {
        if x.len() != body.dim() {
            return Err(Error::DimensionMismatch { expected: body.dim(), got: x.len() });
        }
        if !body.contains(&x) {
            return Err(Error::CertificateViolation("start point outside the body".into()));
        }
        Ok(Self { body, x, calls: 1, steps: 0 })
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<&[f64]> {
        self.x = hit_and_run_step(&self.body, &self.x, rng, &mut self.calls)?;
        self.steps += 1;
        Ok(&self.x)
    }

    pub fn run<R: Rng + ?Sized>(&mut self, steps: usize, rng: &mut R) -> Result<&[f64]> {
        for _ in 0..steps {
            self.step(rng)?;
        }
        Ok(&self.x)
    }

    pub fn position(&self) -> &[f64] {
        &self.x
    }

    pub fn oracle_calls(&self) -> u64 {
        self.calls
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::volume::BodyDescriptor;

    #[test]
    fn step_from_centre_stays_inside() {
        let b = BodyDescriptor::Ball { dim: 5, radius: 1.0 }.build().unwrap();
        let mut rng = RngStream::new(3).rng();
        let mut calls = 0;
        for _ in 0..100 {
            let y = hit_and_run_step(&b, &[0.0; 5], &mut rng, &mut calls).unwrap();
            assert!(b.contains(&y));
        }
        assert!(calls > 100);
    }

    #[test]
    fn outside_start_is_an_error() {
        let b = BodyDescriptor::Cube { dim: 2, half_width: 1.0 }.build().unwrap();
        let mut rng = RngStream::new(3).rng();
        let mut calls = 0;
        assert!(matches!(
            hit_and_run_step(&b, &[2.0, 0.0], &mut rng, &mut calls),
            Err(Error::CertificateViolation(_))
        ));
    }

    #[test]
    fn chord_of_cube_is_exact() {
        let b = BodyDescriptor::Cube { dim: 2, half_width: 1.0 }.build().unwrap();
        let mut calls = 0;
        let t = chord_end(&b, &[0.0, 0.0], &[1.0, 0.0], &mut calls).unwrap();
        assert!((t - 1.0).abs() < 2e-9 * 2f64.sqrt());
    }

    #[test]
    fn lying_certificate_detected() {
        let b = BodyDescriptor::Cube { dim: 2, half_width: 1.0 }.build().unwrap();
        let c = crate::volume::Certificate { center: vec![0.0, 0.0], inner_radius: 0.5, outer_radius: 0.9 };
        let liar = b.with_certificate(c);
        let mut calls = 0;
        assert!(chord_end(&liar, &[0.0, 0.0], &[1.0, 0.0], &mut calls).is_err());
    }
}
