use std::f64::consts::{LN_2, PI};

use super::sconcave::sconcave_log_normalizer;
use super::{DistributionSpec, Family, Gauge};
use crate::error::{Error, Result};
use crate::isotropy::AffineMap;
use crate::numerics::linalg::dot;
use crate::numerics::special::{ln_gamma, ln_lp_ball_volume};
use crate::volume::ConvexBody;

/// Cached log-density evaluator for one spec.
#[derive(Debug, Clone)]
pub struct Density {
    family: Family,
    dim: usize,
    /// Inverse of the output map and `ln |det|` of the forward map.
    inverse: Option<(AffineMap, f64)>,
    /// Normalizing constant of the raw family; `None` when unknown.
    ln_norm: Option<f64>,
    body: Option<ConvexBody>,
}

impl Density {
    pub fn new(spec: &DistributionSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.dim;
        let nf = n as f64;
        let mut body = None;
        let ln_norm = match &spec.family {
            Family::Gaussian => Some(-0.5 * nf * (2.0 * PI).ln()),
            Family::ProductExponential | Family::UniformCube => Some(-nf * LN_2),
            Family::UniformSimplex => Some(ln_gamma(nf + 1.0)),
            Family::UniformLpBall { p } => Some(-ln_lp_ball_volume(n, *p)),
            Family::SConcave { r, gauge } => Some(sconcave_log_normalizer(n, *r, *gauge)),
            Family::OracleUniform { body: d, .. } => {
                let b = d.build()?;
                let v = b.exact_volume().map(|v| -v.ln());
                body = Some(b);
                v
            }
        };
        let inverse = match spec.output_map()? {
            Some(t) => {
                let ln_det = t.ln_abs_determinant();
                Some((t.inverse()?, ln_det))
            }
            None => None,
        };
        Ok(Self { family: spec.family.clone(), dim: n, inverse, ln_norm, body })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.ln_norm.is_some()
    }

    /// Log-density of the raw family without its normalizing constant.
    fn raw_unnormalized(&self, x: &[f64]) -> f64 {
        let inside = |ok: bool| if ok { 0.0 } else { f64::NEG_INFINITY };
        match &self.family {
            Family::Gaussian => -0.5 * dot(x, x),
            Family::ProductExponential => -x.iter().map(|v| v.abs()).sum::<f64>(),
            Family::UniformCube => inside(x.iter().all(|v| v.abs() <= 1.0)),
            Family::UniformSimplex => inside(x.iter().all(|&v| v >= 0.0) && x.iter().sum::<f64>() <= 1.0),
            Family::UniformLpBall { p } => {
                if p.is_infinite() {
                    inside(x.iter().all(|v| v.abs() <= 1.0))
                } else {
                    inside(x.iter().map(|v| v.abs().powf(*p)).sum::<f64>() <= 1.0)
                }
            }
            Family::SConcave { r, gauge } => {
                let g = match gauge {
                    Gauge::L2 => dot(x, x).sqrt(),
                    Gauge::L1 => x.iter().map(|v| v.abs()).sum(),
                };
                -(self.dim as f64 + r) * g.ln_1p()
            }
            Family::OracleUniform { .. } => {
                inside(self.body.as_ref().expect("built with the spec").contains(x))
            }
        }
    }

    /// Log-density up to the (possibly unknown) normalizing constant.
    pub fn log_unnormalized(&self, x: &[f64]) -> f64 {
        match &self.inverse {
            None => self.raw_unnormalized(x),
            Some((inv, ln_det)) => self.raw_unnormalized(&inv.apply(x)) - ln_det,
        }
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("density argument"));
        }
        let u = self.log_unnormalized(x);
        match self.ln_norm {
            Some(c) => Ok(u + c),
            None => Err(Error::UnknownNormalization { unnormalized: u }),
        }
    }
}

/// Natural log of the density of `spec` at `x`, `-∞` outside the support.
///
/// For oracle bodies without a closed-form volume the constant is unknown;
/// the error carries the value up to that constant.
pub fn log_density(spec: &DistributionSpec, x: &[f64]) -> Result<f64> {
    Density::new(spec)?.log_density(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityVerdict {
    pub pass: bool,
    pub checked: usize,
    /// First pair with `f((x+y)/2)² < f(x) f(y) (1 - 1e-9)`.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

const SLACK: f64 = 1e-9;

/// Midpoint log-concavity test for an arbitrary log-density.
pub fn midpoint_logconcavity_fn(
    log_f: impl Fn(&[f64]) -> f64,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> ConcavityVerdict {
    let slack = (1.0 - SLACK).ln();
    for (k, (x, y)) in pairs.iter().enumerate() {
        let rhs = log_f(x) + log_f(y);
        if rhs == f64::NEG_INFINITY {
            continue;
        }
        let m: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
        if 2.0 * log_f(&m) < rhs + slack {
            return ConcavityVerdict { pass: false, checked: k + 1, witness: Some((x.clone(), y.clone())) };
        }
    }
    ConcavityVerdict { pass: true, checked: pairs.len(), witness: None }
}

/// Midpoint log-concavity of the density of `spec` on the given pairs.
/// The normalizing constant cancels, so unknown volumes are fine.
pub fn midpoint_logconcavity(spec: &DistributionSpec, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<ConcavityVerdict> {
    let d = Density::new(spec)?;
    for (x, y) in pairs {
        if x.len() != d.dim() || y.len() != d.dim() {
            return Err(Error::DimensionMismatch { expected: d.dim(), got: x.len().min(y.len()) });
        }
    }
    Ok(midpoint_logconcavity_fn(|x| d.log_unnormalized(x), pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::BodyDescriptor;

    #[test]
    fn gaussian_at_origin() {
        let v = log_density(&DistributionSpec::gaussian(2), &[0.0, 0.0]).unwrap();
        assert!((v + (2.0 * PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn product_exponential_raw() {
        let s = DistributionSpec::raw(Family::ProductExponential, 3);
        let x = [0.5, -1.0, 2.0];
        assert!((log_density(&s, &x).unwrap() - (-3.0 * LN_2 - 3.5)).abs() < 1e-14);
    }

    #[test]
    fn isotropic_laplace_at_zero() {
        let s = DistributionSpec::isotropic(Family::ProductExponential, 1);
        assert!((log_density(&s, &[0.0]).unwrap() - (-0.5 * LN_2)).abs() < 1e-14);
    }

    #[test]
    fn sconcave_one_dimensional() {
        let s = DistributionSpec::raw(Family::SConcave { r: 2.0, gauge: Gauge::L2 }, 1);
        for x in [0.0, 0.7, -3.0] {
            let want = -3.0 * (1.0f64 + f64::abs(x)).ln();
            assert!((log_density(&s, &[x]).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn oracle_without_volume_flags_constant() {
        let body = BodyDescriptor::Intersection {
            base: Box::new(BodyDescriptor::Ball { dim: 2, radius: 1.0 }),
            halfspaces: vec![crate::volume::Halfspace { normal: vec![1.0, 0.0], offset: 0.5 }],
        };
        let s = DistributionSpec::raw(Family::OracleUniform { body, walk_budget: 5 }, 2);
        assert_eq!(log_density(&s, &[0.0, 0.0]), Err(Error::UnknownNormalization { unnormalized: 0.0 }));
        assert!(matches!(
            log_density(&s, &[0.9, 0.0]),
            Err(Error::UnknownNormalization { unnormalized }) if unnormalized == f64::NEG_INFINITY
        ));
    }

    #[test]
    fn ball_indicator_with_outside_point_passes() {
        let s = DistributionSpec::raw(Family::UniformLpBall { p: 2.0 }, 2);
        let v = midpoint_logconcavity(&s, &[(vec![0.1, 0.0], vec![3.0, 0.0])]).unwrap();
        assert!(v.pass);
    }

    #[test]
    fn mixture_fails_near_saddle() {
        let log_f = |x: &[f64]| {
            let a = -0.5 * (x[0] - 3.0).powi(2);
            let b = -0.5 * (x[0] + 3.0).powi(2);
            let m = a.max(b);
            m + (0.5 * ((a - m).exp() + (b - m).exp())).ln()
        };
        let pairs: Vec<_> = (-40..=40).map(|i| (vec![-0.1 * i as f64], vec![0.1 * i as f64])).collect();
        let v = midpoint_logconcavity_fn(log_f, &pairs);
        assert!(!v.pass);
        let (x, y) = v.witness.unwrap();
        assert!((x[0] + y[0]).abs() < 1e-12, "midpoint is the saddle at 0");
    }
}
