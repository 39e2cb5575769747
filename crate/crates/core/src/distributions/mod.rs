//! Measure families, exact samplers, densities and a midpoint log-concavity tester.

mod density;
mod sampler;
mod sconcave;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use density::{log_density, Density, midpoint_logconcavity, midpoint_logconcavity_fn, ConcavityVerdict};
pub use sampler::{fold_replicas, sample, sample_replicas, SampleBatch, Sampler};
pub use sconcave::{sconcave_coordinate_variance, sconcave_log_normalizer, sconcave_params, SConcaveParams};

use crate::error::{Error, Result};
use crate::isotropy::AffineMap;
use crate::numerics::linalg::{inv_sqrt_spd, symmetrize};
use crate::numerics::Matrix;
use crate::volume::{lp_ball_coordinate_variance, simplex_moments, BodyDescriptor};

/// Gauge of the s-concave family `c (1 + ‖x‖)^{-n-r}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    L2,
    L1,
}

impl fmt::Display for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gauge::L2 => "l2",
            Gauge::L1 => "l1",
        })
    }
}

impl Gauge {
    pub fn norm(&self, x: &[f64]) -> f64 {
        match self {
            Gauge::L2 => crate::numerics::norm2(x),
            Gauge::L1 => x.iter().map(|v| v.abs()).sum(),
        }
    }
}

/// Measure family in its raw (non-normalized) form:
///
/// * `Gaussian`: `N(0, I)`;
/// * `ProductExponential`: density `2^{-n} e^{-|x|_1}`;
/// * `UniformCube`: uniform on `[-1, 1]^n`;
/// * `UniformSimplex`: uniform on `conv{0, e_1, …, e_n}`;
/// * `UniformLpBall`: uniform on `B_p^n`;
/// * `SConcave`: density `c (1 + ‖x‖)^{-n-r}`;
/// * `OracleUniform`: uniform on a body, sampled by hit-and-run with
///   `walk_budget` steps between returned points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
    ProductExponential,
    UniformCube,
    UniformSimplex,
    UniformLpBall { p: f64 },
    SConcave { r: f64, gauge: Gauge },
    OracleUniform { body: BodyDescriptor, walk_budget: usize },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::ProductExponential => "product-exponential",
            Family::UniformCube => "uniform-cube",
            Family::UniformSimplex => "uniform-simplex",
            Family::UniformLpBall { .. } => "uniform-lp-ball",
            Family::SConcave { .. } => "sconcave",
            Family::OracleUniform { .. } => "oracle-uniform",
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(
            self,
            Family::UniformCube | Family::UniformSimplex | Family::UniformLpBall { .. } | Family::OracleUniform { .. }
        )
    }

    pub fn is_log_concave(&self) -> bool {
        !matches!(self, Family::SConcave { .. })
    }
}

/// A sampleable measure: family, dimension, isotropic flag, and an optional
/// affine image applied last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub family: Family,
    pub dim: usize,
    pub isotropic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<AffineMap>,
}

impl DistributionSpec {
    pub fn new(family: Family, dim: usize, isotropic: bool) -> Result<Self> {
        let s = Self { family, dim, isotropic, map: None };
        s.validate()?;
        Ok(s)
    }

    pub fn gaussian(dim: usize) -> Self {
        Self { family: Family::Gaussian, dim, isotropic: true, map: None }
    }

    /// Isotropic variant of a family; panics on invalid parameters, so
    /// only for literals in tests and examples.
    pub fn isotropic(family: Family, dim: usize) -> Self {
        Self::new(family, dim, true).expect("valid isotropic spec")
    }

    pub fn raw(family: Family, dim: usize) -> Self {
        Self::new(family, dim, false).expect("valid raw spec")
    }

    /// Image of this measure under `t`.
    pub fn transformed(&self, t: &AffineMap) -> Result<Self> {
        if t.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: t.dim() });
        }
        let map = match &self.map {
            Some(m) => t.compose(m)?,
            None => t.clone(),
        };
        Ok(Self { map: Some(map), ..self.clone() })
    }

    /// Mean zero and identity covariance, exactly.
    pub fn is_isotropic(&self) -> bool {
        self.isotropic && self.map.is_none()
    }

    pub fn require_isotropic(&self) -> Result<()> {
        if self.is_isotropic() {
            Ok(())
        } else {
            Err(Error::NotIsotropic)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        match &self.family {
            Family::UniformLpBall { p } if !(*p >= 1.0) => {
                return Err(Error::InvalidSpec(format!("l_p ball needs p in [1, inf], got {p}")));
            }
            Family::SConcave { r, .. } => {
                if !(*r > 0.0) || !r.is_finite() {
                    return Err(Error::InvalidSpec(format!("s-concave family needs finite r > 0, got {r}")));
                }
                if self.isotropic && *r <= 2.0 {
                    return Err(Error::InvalidSpec(format!(
                        "isotropic s-concave spec needs r > 2: moments of order p exist only for p < r, \
                         so the covariance is undefined at r = {r}"
                    )));
                }
            }
            Family::OracleUniform { body, .. } => {
                if body.dim() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: body.dim() });
                }
                let b = body.build()?;
                if !(b.certificate().inner_radius > 0.0) {
                    return Err(Error::InvalidSpec("oracle body needs a positive inner-radius certificate".into()));
                }
                if self.isotropic && b.exact_moments().is_none() {
                    return Err(Error::InvalidSpec(
                        "isotropic oracle body needs closed-form moments; whiten empirically instead".into(),
                    ));
                }
            }
            _ => {}
        }
        if let Some(m) = &self.map {
            if m.dim() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: m.dim() });
            }
        }
        Ok(())
    }

    /// Population mean and covariance of the raw family.
    pub fn raw_moments(&self) -> Result<(Vec<f64>, Matrix)> {
        let n = self.dim;
        let iso = |v: f64| (vec![0.0; n], Matrix::identity(n).scale(v));
        Ok(match &self.family {
            Family::Gaussian => iso(1.0),
            Family::ProductExponential => iso(2.0),
            Family::UniformCube => iso(1.0 / 3.0),
            Family::UniformSimplex => simplex_moments(n),
            Family::UniformLpBall { p } => iso(lp_ball_coordinate_variance(n, *p)),
            Family::SConcave { r, gauge } => iso(sconcave_coordinate_variance(n, *r, *gauge)?),
            Family::OracleUniform { body, .. } => {
                body.build()?.exact_moments().cloned().ok_or_else(|| {
                    Error::InvalidArgument("no closed-form moments for this body".into())
                })?
            }
        })
    }

    /// Map from the raw family to the isotropic variant.
    pub fn normalization(&self) -> Result<AffineMap> {
        let n = self.dim;
        let (mean, cov) = self.raw_moments()?;
        let w = match &self.family {
            Family::UniformSimplex | Family::OracleUniform { .. } => inv_sqrt_spd(&cov)?,
            _ => Matrix::identity(n).scale(1.0 / cov[(0, 0)].sqrt()),
        };
        let shift = w.matvec(&mean).into_iter().map(|v| -v).collect();
        AffineMap::new(w, shift)
    }

    /// Map from the raw family to the measure this spec describes.
    pub fn output_map(&self) -> Result<Option<AffineMap>> {
        let base = if self.isotropic && self.family != Family::Gaussian {
            Some(self.normalization()?)
        } else {
            None
        };
        Ok(match (base, &self.map) {
            (None, None) => None,
            (Some(b), None) => Some(b),
            (None, Some(m)) => Some(m.clone()),
            (Some(b), Some(m)) => Some(m.compose(&b)?),
        })
    }

    /// Population mean and covariance of this measure.
    pub fn moments(&self) -> Result<(Vec<f64>, Matrix)> {
        let (mean, cov) = self.raw_moments()?;
        Ok(match self.output_map()? {
            None => (mean, cov),
            Some(t) => {
                let c = t.linear.matmul(&cov)?.matmul(&t.linear.transpose())?;
                (t.apply(&mean), symmetrize(&c))
            }
        })
    }

    /// Key-value block embedded in reports.
    pub fn to_key_values(&self) -> BTreeMap<String, String> {
        let mut kv = BTreeMap::new();
        kv.insert("family".into(), self.family.name().into());
        kv.insert("n".into(), self.dim.to_string());
        kv.insert("isotropic".into(), self.isotropic.to_string());
        match &self.family {
            Family::UniformLpBall { p } => {
                kv.insert("p".into(), fmt_num(*p));
            }
            Family::SConcave { r, gauge } => {
                kv.insert("r".into(), fmt_num(*r));
                kv.insert("gauge".into(), gauge.to_string());
            }
            Family::OracleUniform { body, walk_budget } => {
                kv.insert("body".into(), body.to_string());
                kv.insert("walk-budget".into(), walk_budget.to_string());
            }
            _ => {}
        }
        if let Some(m) = &self.map {
            kv.insert("map".into(), serde_json::to_string(m).expect("finite map serializes"));
        }
        kv
    }

    /// Inverse of [`to_key_values`](Self::to_key_values); unknown keys are rejected.
    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self> {
        const KNOWN: [&str; 8] = ["family", "n", "isotropic", "p", "r", "gauge", "body", "walk-budget"];
        for k in kv.keys() {
            if !KNOWN.contains(&k.as_str()) && k != "map" {
                return Err(Error::InvalidSpec(format!("unknown spec key {k:?}")));
            }
        }
        let get = |k: &str| kv.get(k).ok_or_else(|| Error::InvalidSpec(format!("missing spec key {k:?}")));
        let num = |k: &str| -> Result<f64> {
            let v = get(k)?;
            match v.as_str() {
                "inf" => Ok(f64::INFINITY),
                s => s.parse().map_err(|_| Error::InvalidSpec(format!("{k} = {s:?} is not a number"))),
            }
        };
        let dim: usize = get("n")?.parse().map_err(|_| Error::InvalidSpec("n must be a positive integer".into()))?;
        let isotropic = match kv.get("isotropic").map(String::as_str) {
            None | Some("false") => false,
            Some("true") => true,
            Some(o) => return Err(Error::InvalidSpec(format!("isotropic = {o:?} is not a boolean"))),
        };
        let family = match get("family")?.as_str() {
            "gaussian" => Family::Gaussian,
            "product-exponential" => Family::ProductExponential,
            "uniform-cube" => Family::UniformCube,
            "uniform-simplex" => Family::UniformSimplex,
            "uniform-lp-ball" => Family::UniformLpBall { p: num("p")? },
            "sconcave" => Family::SConcave {
                r: num("r")?,
                gauge: match kv.get("gauge").map(String::as_str).unwrap_or("l2") {
                    "l2" => Gauge::L2,
                    "l1" => Gauge::L1,
                    g => return Err(Error::InvalidSpec(format!("unknown gauge {g:?}"))),
                },
            },
            "oracle-uniform" => Family::OracleUniform {
                body: get("body")?.parse()?,
                walk_budget: get("walk-budget")?
                    .parse()
                    .map_err(|_| Error::InvalidSpec("walk-budget must be an integer".into()))?,
            },
            f => return Err(Error::InvalidSpec(format!("unknown family {f:?}"))),
        };
        let map = match kv.get("map") {
            Some(s) => Some(serde_json::from_str(s).map_err(|e| Error::InvalidSpec(format!("map: {e}")))?),
            None => None,
        };
        let spec = Self { family, dim, isotropic, map };
        spec.validate()?;
        Ok(spec)
    }

    /// Stable one-line identifier.
    pub fn id(&self) -> String {
        self.to_key_values().iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.to_key_values() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_round_trip() {
        let specs = [
            DistributionSpec::gaussian(3),
            DistributionSpec::raw(Family::UniformLpBall { p: f64::INFINITY }, 4),
            DistributionSpec::isotropic(Family::SConcave { r: 4.0, gauge: Gauge::L1 }, 5),
            DistributionSpec::raw(
                Family::OracleUniform { body: BodyDescriptor::Simplex { dim: 3 }, walk_budget: 30 },
                3,
            ),
        ];
        for s in specs {
            let back = DistributionSpec::from_key_values(&s.to_key_values()).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn rejects_isotropic_heavy_sconcave() {
        let e = DistributionSpec::new(Family::SConcave { r: 2.0, gauge: Gauge::L2 }, 3, true).unwrap_err();
        assert!(e.to_string().contains("p < r"));
        assert!(DistributionSpec::new(Family::SConcave { r: 2.0, gauge: Gauge::L2 }, 3, false).is_ok());
    }

    #[test]
    fn unknown_key_rejected() {
        let mut kv = DistributionSpec::gaussian(2).to_key_values();
        kv.insert("colour".into(), "red".into());
        assert!(DistributionSpec::from_key_values(&kv).is_err());
    }

    #[test]
    fn isotropic_moments_are_standard() {
        let fams = [
            Family::ProductExponential,
            Family::UniformCube,
            Family::UniformSimplex,
            Family::UniformLpBall { p: 1.0 },
            Family::UniformLpBall { p: 3.0 },
            Family::SConcave { r: 5.0, gauge: Gauge::L2 },
        ];
        for f in fams {
            let s = DistributionSpec::isotropic(f, 4);
            let (m, c) = s.moments().unwrap();
            for i in 0..4 {
                assert!(m[i].abs() < 1e-12);
                for j in 0..4 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((c[(i, j)] - want).abs() < 1e-10, "{:?}", s.family);
                }
            }
        }
    }
}
