use serde::Serialize;

use super::{check_moment_exists, grouped_means};
use crate::distributions::{sample_replicas, DistributionSpec, SampleBatch};
use crate::error::{Error, Result};
use crate::numerics::linalg::{dot, norm2};
use crate::numerics::stats::MIN_REPLICAS;
use crate::numerics::{Estimate, Matrix, RngStream};

/// Gauge on `R^m` used for the ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HGauge {
    Euclidean,
    /// `max |⟨v, y⟩| / |v|₂` over `v ∈ {-1, 0, 1}^m \ {0}` (up to sign),
    /// a polyhedral gauge from `(3^m - 1)/2` linear forms.
    Forms,
}

#[derive(Debug, Clone, Serialize)]
pub struct HConditionReport {
    pub p: f64,
    pub m: usize,
    /// `(E‖Y‖^p)^{1/p} / E‖Y‖` for `Y = A X`.
    pub lambda: Estimate,
    pub gauge: HGauge,
    pub rank: usize,
    pub note: &'static str,
}

const NOTE: &str = "ratio for one named gauge; a large value does not rule out another gauge";

fn forms(m: usize) -> Vec<Vec<f64>> {
    let total = 3usize.pow(m as u32);
    let mut out = Vec::with_capacity(total / 2);
    for code in 1..total {
        let mut c = code;
        let v: Vec<f64> = (0..m)
            .map(|_| {
                let d = c % 3;
                c /= 3;
                d as f64 - 1.0
            })
            .collect();
        // Keep one of ±v: the first non-zero entry positive.
        if v.iter().find(|x| **x != 0.0).is_some_and(|x| *x > 0.0) {
            let nv = norm2(&v);
            out.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    out
}

fn numerical_rank(a: &Matrix) -> Result<usize> {
    let sv = a.singular_values()?;
    let top = sv.first().copied().unwrap_or(0.0);
    Ok(sv.iter().filter(|&&s| s > 1e-10 * top && s > 0.0).count())
}

/// The ratio on already drawn replica batches.
pub fn h_condition_ratio_batch(parts: &[SampleBatch], p: f64, projection: &Matrix, gauge: HGauge) -> Result<HConditionReport> {
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("p must be positive, got {p}")));
    }
    let m = p.ceil() as usize;
    if projection.rows() != m {
        return Err(Error::InvalidArgument(format!("projection needs m = ceil(p) = {m} rows, got {}", projection.rows())));
    }
    let n = parts.first().map(SampleBatch::dim).ok_or(Error::EmptySample)?;
    if projection.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: projection.cols() });
    }
    if gauge == HGauge::Forms && m > 8 {
        return Err(Error::ScaleLimit(format!("form gauge needs m <= 8, got {m}")));
    }
    let rank = numerical_rank(projection)?;
    if rank < m {
        return Err(Error::DegenerateProjection { rank, required: m });
    }
    let fs = if gauge == HGauge::Forms { forms(m) } else { vec![] };
    let mut y = vec![0.0; m];
    let values: Vec<Vec<f64>> = parts
        .iter()
        .map(|b| {
            b.rows()
                .map(|x| {
                    projection.matvec_into(x, &mut y);
                    match gauge {
                        HGauge::Euclidean => norm2(&y),
                        HGauge::Forms => fs.iter().fold(0.0f64, |a, v| a.max(dot(v, &y).abs())),
                    }
                })
                .collect()
        })
        .collect();
    let (m1, m1_per) = grouped_means(&values, |v| v);
    let (mp, mp_per) = grouped_means(&values, |v| v.powf(p));
    let per: Vec<f64> = mp_per.iter().zip(&m1_per).map(|(a, b)| a.powf(1.0 / p) / b).collect();
    let lambda = Estimate::from_replicas(mp.powf(1.0 / p) / m1, &per);
    Ok(HConditionReport { p, m, lambda, gauge, rank, note: NOTE })
}

/// `λ̂ = (E‖AX‖^p)^{1/p} / E‖AX‖` for an `m × n` projection, `m = ⌈p⌉`.
pub fn h_condition_ratio(
    spec: &DistributionSpec,
    p: f64,
    projection: &Matrix,
    gauge: HGauge,
    samples: usize,
    replicas: usize,
    stream: &RngStream,
) -> Result<HConditionReport> {
    check_moment_exists(spec, p)?;
    if projection.cols() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: projection.cols() });
    }
    let parts = sample_replicas(spec, samples, replicas.max(MIN_REPLICAS), stream)?;
    h_condition_ratio_batch(&parts, p, projection, gauge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::gamma_fn;

    #[test]
    fn first_moment_ratio_is_one() {
        let spec = DistributionSpec::gaussian(3);
        let a = Matrix::from_rows(&[vec![1.0, 2.0, -1.0]]).unwrap();
        for g in [HGauge::Euclidean, HGauge::Forms] {
            let r = h_condition_ratio(&spec, 1.0, &a, g, 2000, 16, &RngStream::new(1)).unwrap();
            assert_eq!(r.lambda.value, 1.0);
            assert_eq!(r.m, 1);
        }
    }

    #[test]
    fn gaussian_chi_four() {
        let spec = DistributionSpec::gaussian(4);
        let r = h_condition_ratio(&spec, 4.0, &Matrix::identity(4), HGauge::Euclidean, 80_000, 16, &RngStream::new(2))
            .unwrap();
        let want = 24f64.powf(0.25) / (2f64.sqrt() * gamma_fn(2.5));
        assert!((want - 1.177).abs() < 1e-3);
        assert!(r.lambda.within_sigmas(want, 4.0, 0.0), "{:?}", r.lambda);
        assert!(r.lambda.value >= 1.0);
    }

    #[test]
    fn degenerate_projection() {
        let spec = DistributionSpec::gaussian(3);
        let a = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            h_condition_ratio(&spec, 2.0, &a, HGauge::Euclidean, 100, 16, &RngStream::new(3)),
            Err(Error::DegenerateProjection { rank: 1, required: 2 })
        ));
    }

    #[test]
    fn form_count() {
        assert_eq!(forms(2).len(), 4);
        assert_eq!(forms(3).len(), 13);
    }
}
