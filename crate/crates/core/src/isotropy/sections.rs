use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::linalg::{norm2, orthonormal_complement};
use crate::numerics::stats::{replica_sizes, replicate, MIN_REPLICAS};
use crate::numerics::{Estimate, RngStream};
use crate::volume::ConvexBody;

/// `(n-1)`-volume of the central section `K ∩ θ^⊥`, by rejection sampling
/// in a box around the origin inside `θ^⊥`.
///
/// The box half-width is `|c| + R_out`, which covers the section because
/// `K` lies in the outer ball around the certified centre `c`.
pub fn section_volume(
    body: &ConvexBody,
    theta: &[f64],
    samples: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<Estimate> {
    let n = body.dim();
    if theta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: theta.len() });
    }
    if n < 2 {
        return Err(Error::InvalidArgument("sections need n >= 2".into()));
    }
    let nt = norm2(theta);
    if (nt - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("direction must be a unit vector, |θ| = {nt}")));
    }
    let cert = body.certificate();
    if !(cert.outer_radius > 0.0) {
        return Err(Error::CertificateViolation("outer radius must be positive".into()));
    }
    let replicas = replicas.max(MIN_REPLICAS);
    let half = norm2(&cert.center) + cert.outer_radius;
    let box_volume = (2.0 * half).powi(n as i32 - 1);
    let basis = orthonormal_complement(theta);
    let sizes = replica_sizes(samples.max(replicas), replicas);
    let hits = replicate(stream, replicas, |k, rng| {
        let mut x = vec![0.0; n];
        let mut count = 0usize;
        for _ in 0..sizes[k] {
            x.iter_mut().for_each(|v| *v = 0.0);
            for b in &basis {
                let c = half * (2.0 * rng.random::<f64>() - 1.0);
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi += c * bi;
                }
            }
            if body.contains(&x) {
                count += 1;
            }
        }
        count
    });
    let per: Vec<f64> = hits.iter().zip(&sizes).map(|(&h, &s)| box_volume * h as f64 / s as f64).collect();
    let total: usize = hits.iter().sum();
    let pooled = box_volume * total as f64 / sizes.iter().sum::<usize>() as f64;
    Ok(Estimate::from_replicas(pooled, &per))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::BodyDescriptor;

    #[test]
    fn unit_cube_axis_section() {
        let b = BodyDescriptor::Cube { dim: 4, half_width: 0.5 }.build().unwrap();
        let e = section_volume(&b, &[1.0, 0.0, 0.0, 0.0], 40_000, 16, &RngStream::new(3)).unwrap();
        assert!(e.within_sigmas(1.0, 4.0, 1e-12), "{e:?}");
    }

    #[test]
    fn square_diagonal_chord() {
        let b = BodyDescriptor::Cube { dim: 2, half_width: 0.5 }.build().unwrap();
        let s = 0.5f64.sqrt();
        let e = section_volume(&b, &[s, s], 40_000, 16, &RngStream::new(4)).unwrap();
        assert!(e.within_sigmas(2f64.sqrt(), 4.0, 0.0), "{e:?}");
    }

    #[test]
    fn rejects_non_unit_direction() {
        let b = BodyDescriptor::Cube { dim: 2, half_width: 0.5 }.build().unwrap();
        assert!(section_volume(&b, &[1.0, 1.0], 100, 16, &RngStream::new(4)).is_err());
    }
}
