//! Convex bodies given by membership (and optionally separation) oracles.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isotropy::AffineMap;
use crate::numerics::linalg::{dot, norm2};
use crate::numerics::special::{ln_gamma, ln_lp_ball_volume, ln_unit_ball_volume};
use crate::numerics::Matrix;

/// Sandwich certificate: the ball of radius `inner_radius` around `center`
/// lies inside the body, the ball of radius `outer_radius` contains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub center: Vec<f64>,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl Certificate {
    pub fn sandwich_ratio(&self) -> f64 {
        self.outer_radius / self.inner_radius
    }
}

/// `{ y : ⟨normal, y⟩ ≤ offset }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn contains(&self, x: &[f64]) -> bool {
        dot(&self.normal, x) <= self.offset
    }
}

/// Answer of a separation oracle. When outside, the witness halfspace
/// contains the body but not the query point.
#[derive(Debug, Clone, PartialEq)]
pub enum Separation {
    Inside,
    Outside(Option<Halfspace>),
}

/// Serializable description of a built-in body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BodyDescriptor {
    /// Euclidean ball centred at the origin.
    Ball { dim: usize, radius: f64 },
    /// `[-half_width, half_width]^dim`.
    Cube { dim: usize, half_width: f64 },
    /// `conv{0, e_1, …, e_n}`.
    Simplex { dim: usize },
    /// `radius · B_p^n`, `p ∈ [1, ∞]`.
    LpBall { dim: usize, p: f64, radius: f64 },
    /// Axis-aligned ellipsoid centred at the origin.
    Ellipsoid { semiaxes: Vec<f64> },
    Intersection { base: Box<BodyDescriptor>, halfspaces: Vec<Halfspace> },
    Affine { base: Box<BodyDescriptor>, map: AffineMap },
}

impl BodyDescriptor {
    pub fn dim(&self) -> usize {
        match self {
            BodyDescriptor::Ball { dim, .. }
            | BodyDescriptor::Cube { dim, .. }
            | BodyDescriptor::Simplex { dim }
            | BodyDescriptor::LpBall { dim, .. } => *dim,
            BodyDescriptor::Ellipsoid { semiaxes } => semiaxes.len(),
            BodyDescriptor::Intersection { base, .. } => base.dim(),
            BodyDescriptor::Affine { map, .. } => map.dim(),
        }
    }

    pub fn build(&self) -> Result<ConvexBody> {
        ConvexBody::from_descriptor(self.clone())
    }
}

fn fmt_f(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

impl fmt::Display for BodyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyDescriptor::Ball { dim, radius } => write!(f, "ball:{dim}:{}", fmt_f(*radius)),
            BodyDescriptor::Cube { dim, half_width } => write!(f, "cube:{dim}:{}", fmt_f(*half_width)),
            BodyDescriptor::Simplex { dim } => write!(f, "simplex:{dim}"),
            BodyDescriptor::LpBall { dim, p, radius } => write!(f, "lpball:{dim}:{}:{}", fmt_f(*p), fmt_f(*radius)),
            BodyDescriptor::Ellipsoid { semiaxes } => {
                let s: Vec<String> = semiaxes.iter().map(|v| fmt_f(*v)).collect();
                write!(f, "ellipsoid:{}", s.join(","))
            }
            other => {
                // Composite bodies have no short form.
                let json = serde_json::to_string(other).map_err(|_| fmt::Error)?;
                write!(f, "json:{json}")
            }
        }
    }
}

fn parse_f(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "infinity" | "Inf" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|_| Error::InvalidSpec(format!("not a number: {t:?}"))),
    }
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|_| Error::InvalidSpec(format!("not a dimension: {s:?}")))
}

impl FromStr for BodyDescriptor {
    type Err = Error;

    /// Accepts `ball:n:r`, `cube:n:a`, `simplex:n`, `lpball:n:p:r`,
    /// `ellipsoid:a1,a2,…`, or `json:{…}` for composite bodies.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(json) = s.trim().strip_prefix("json:") {
            return serde_json::from_str(json).map_err(|e| Error::InvalidSpec(format!("body json: {e}")));
        }
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::InvalidSpec(format!("unrecognized body descriptor {s:?}"));
        match parts.as_slice() {
            ["ball", n, r] => Ok(BodyDescriptor::Ball { dim: parse_usize(n)?, radius: parse_f(r)? }),
            ["cube", n, a] => Ok(BodyDescriptor::Cube { dim: parse_usize(n)?, half_width: parse_f(a)? }),
            ["simplex", n] => Ok(BodyDescriptor::Simplex { dim: parse_usize(n)? }),
            ["lpball", n, p, r] => {
                Ok(BodyDescriptor::LpBall { dim: parse_usize(n)?, p: parse_f(p)?, radius: parse_f(r)? })
            }
            ["ellipsoid", axes] => Ok(BodyDescriptor::Ellipsoid {
                semiaxes: axes.split(',').map(parse_f).collect::<Result<Vec<_>>>()?,
            }),
            _ => Err(bad()),
        }
    }
}

type MembershipFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Ball { radius: f64 },
    Cube { half_width: f64 },
    Simplex,
    LpBall { p: f64, radius: f64 },
    Ellipsoid { semiaxes: Vec<f64> },
    Intersection { base: Box<Shape>, halfspaces: Vec<Halfspace> },
    Affine { base: Box<Shape>, inverse: AffineMap },
    Custom(MembershipFn),
}

impl Shape {
    fn contains(&self, x: &[f64]) -> bool {
        match self {
            Shape::Ball { radius } => dot(x, x) <= radius * radius,
            Shape::Cube { half_width } => x.iter().all(|v| v.abs() <= *half_width),
            Shape::Simplex => x.iter().all(|&v| v >= 0.0) && x.iter().sum::<f64>() <= 1.0,
            Shape::LpBall { p, radius } => {
                if p.is_infinite() {
                    x.iter().all(|v| v.abs() <= *radius)
                } else {
                    x.iter().map(|v| (v.abs() / radius).powf(*p)).sum::<f64>() <= 1.0
                }
            }
            Shape::Ellipsoid { semiaxes } => x.iter().zip(semiaxes).map(|(v, a)| (v / a) * (v / a)).sum::<f64>() <= 1.0,
            Shape::Intersection { base, halfspaces } => {
                halfspaces.iter().all(|h| h.contains(x)) && base.contains(x)
            }
            Shape::Affine { base, inverse } => base.contains(&inverse.apply(x)),
            Shape::Custom(f) => f(x),
        }
    }

    fn separate(&self, x: &[f64]) -> Separation {
        if self.contains(x) {
            return Separation::Inside;
        }
        let witness = match self {
            Shape::Ball { radius } => {
                let nx = norm2(x);
                Some(Halfspace { normal: x.iter().map(|v| v / nx).collect(), offset: *radius })
            }
            Shape::Cube { half_width } => {
                let (i, v) = x
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .expect("dim >= 1");
                let mut normal = vec![0.0; x.len()];
                normal[i] = v.signum();
                Some(Halfspace { normal, offset: *half_width })
            }
            Shape::Simplex => {
                if let Some(i) = x.iter().position(|&v| v < 0.0) {
                    let mut normal = vec![0.0; x.len()];
                    normal[i] = -1.0;
                    Some(Halfspace { normal, offset: 0.0 })
                } else {
                    Some(Halfspace { normal: vec![1.0; x.len()], offset: 1.0 })
                }
            }
            Shape::Ellipsoid { semiaxes } => {
                // Gradient of the gauge at the radial boundary point.
                let g: f64 = x.iter().zip(semiaxes).map(|(v, a)| (v / a) * (v / a)).sum::<f64>().sqrt();
                let y: Vec<f64> = x.iter().map(|v| v / g).collect();
                let normal: Vec<f64> = y.iter().zip(semiaxes).map(|(v, a)| v / (a * a)).collect();
                let offset = dot(&normal, &y);
                Some(Halfspace { normal, offset })
            }
            Shape::Intersection { base, halfspaces } => match halfspaces.iter().find(|h| !h.contains(x)) {
                Some(h) => Some(h.clone()),
                None => match base.separate(x) {
                    Separation::Outside(w) => w,
                    Separation::Inside => None,
                },
            },
            Shape::Affine { base, inverse } => match base.separate(&inverse.apply(x)) {
                // {⟨a, A⁻¹(y - b)⟩ ≤ c} = {⟨A⁻ᵀa, y⟩ ≤ c + ⟨A⁻ᵀa, b⟩}
                Separation::Outside(Some(h)) => {
                    let lt = inverse.linear.transpose();
                    let normal = lt.matvec(&h.normal);
                    // inverse.shift = -A⁻¹b, so ⟨a, A⁻¹b⟩ = -⟨a, inverse.shift⟩.
                    let offset = h.offset - dot(&h.normal, &inverse.shift);
                    Some(Halfspace { normal, offset })
                }
                _ => None,
            },
            Shape::LpBall { .. } | Shape::Custom(_) => None,
        };
        Separation::Outside(witness)
    }
}

/// A convex body: dimension, membership oracle, optional separation oracle,
/// sandwich certificate, and closed-form volume/moments when known.
#[derive(Clone)]
pub struct ConvexBody {
    dim: usize,
    shape: Shape,
    certificate: Certificate,
    volume: Option<f64>,
    moments: Option<(Vec<f64>, Matrix)>,
    descriptor: Option<BodyDescriptor>,
}

impl fmt::Debug for ConvexBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexBody")
            .field("dim", &self.dim)
            .field("descriptor", &self.descriptor)
            .field("certificate", &self.certificate)
            .finish()
    }
}

struct Built {
    shape: Shape,
    certificate: Certificate,
    volume: Option<f64>,
    moments: Option<(Vec<f64>, Matrix)>,
}

fn positive(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidSpec(format!("{what} must be positive and finite, got {v}")))
    }
}

fn nonzero_dim(n: usize) -> Result<usize> {
    if n == 0 {
        Err(Error::InvalidSpec("dimension must be at least 1".into()))
    } else {
        Ok(n)
    }
}

/// Coordinate second moment `E x_1²` of the uniform measure on `B_p^n`.
pub fn lp_ball_coordinate_variance(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    if p.is_infinite() {
        return 1.0 / 3.0;
    }
    let log = ln_gamma(3.0 / p) - ln_gamma(1.0 / p) + ln_gamma(nf / p) - ln_gamma((nf + 2.0) / p);
    log.exp() * nf / (nf + 2.0)
}

/// Mean and covariance of the uniform measure on `conv{0, e_1, …, e_n}`.
pub fn simplex_moments(n: usize) -> (Vec<f64>, Matrix) {
    let nf = n as f64;
    let denom = (nf + 1.0) * (nf + 1.0) * (nf + 2.0);
    let mut cov = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] = if i == j { nf / denom } else { -1.0 / denom };
        }
    }
    (vec![1.0 / (nf + 1.0); n], cov)
}

fn build(desc: &BodyDescriptor) -> Result<Built> {
    Ok(match desc {
        BodyDescriptor::Ball { dim, radius } => {
            let n = nonzero_dim(*dim)?;
            let r = positive(*radius, "radius")?;
            Built {
                shape: Shape::Ball { radius: r },
                certificate: Certificate { center: vec![0.0; n], inner_radius: r, outer_radius: r },
                volume: Some((ln_unit_ball_volume(n) + n as f64 * r.ln()).exp()),
                moments: Some((vec![0.0; n], Matrix::identity(n).scale(r * r / (n as f64 + 2.0)))),
            }
        }
        BodyDescriptor::Cube { dim, half_width } => {
            let n = nonzero_dim(*dim)?;
            let a = positive(*half_width, "half width")?;
            Built {
                shape: Shape::Cube { half_width: a },
                certificate: Certificate {
                    center: vec![0.0; n],
                    inner_radius: a,
                    outer_radius: a * (n as f64).sqrt(),
                },
                volume: Some((2.0 * a).powi(n as i32)),
                moments: Some((vec![0.0; n], Matrix::identity(n).scale(a * a / 3.0))),
            }
        }
        BodyDescriptor::Simplex { dim } => {
            let n = nonzero_dim(*dim)?;
            let nf = n as f64;
            let r = 1.0 / (nf + nf.sqrt());
            let to_origin = r * nf.sqrt();
            let to_vertex = ((1.0 - r) * (1.0 - r) + (nf - 1.0) * r * r).sqrt();
            Built {
                shape: Shape::Simplex,
                certificate: Certificate {
                    center: vec![r; n],
                    inner_radius: r,
                    outer_radius: to_origin.max(to_vertex),
                },
                volume: Some((-ln_gamma(nf + 1.0)).exp()),
                moments: Some(simplex_moments(n)),
            }
        }
        BodyDescriptor::LpBall { dim, p, radius } => {
            let n = nonzero_dim(*dim)?;
            let r = positive(*radius, "radius")?;
            if !(*p >= 1.0) {
                return Err(Error::InvalidSpec(format!("l_p ball needs p >= 1, got {p}")));
            }
            let nf = n as f64;
            let e = if p.is_infinite() { 0.5 } else { 0.5 - 1.0 / p };
            let scale = nf.powf(e);
            Built {
                shape: Shape::LpBall { p: *p, radius: r },
                certificate: Certificate {
                    center: vec![0.0; n],
                    inner_radius: r * scale.min(1.0),
                    outer_radius: r * scale.max(1.0),
                },
                volume: Some((ln_lp_ball_volume(n, *p) + nf * r.ln()).exp()),
                moments: Some((vec![0.0; n], Matrix::identity(n).scale(r * r * lp_ball_coordinate_variance(n, *p)))),
            }
        }
        BodyDescriptor::Ellipsoid { semiaxes } => {
            let n = nonzero_dim(semiaxes.len())?;
            for &a in semiaxes {
                positive(a, "semiaxis")?;
            }
            let min = semiaxes.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = semiaxes.iter().cloned().fold(0.0, f64::max);
            let ln_prod: f64 = semiaxes.iter().map(|a| a.ln()).sum();
            let var: Vec<f64> = semiaxes.iter().map(|a| a * a / (n as f64 + 2.0)).collect();
            Built {
                shape: Shape::Ellipsoid { semiaxes: semiaxes.clone() },
                certificate: Certificate { center: vec![0.0; n], inner_radius: min, outer_radius: max },
                volume: Some((ln_unit_ball_volume(n) + ln_prod).exp()),
                moments: Some((vec![0.0; n], Matrix::diag(&var))),
            }
        }
        BodyDescriptor::Intersection { base, halfspaces } => {
            let b = build(base)?;
            let c = &b.certificate.center;
            let mut r_in = b.certificate.inner_radius;
            for h in halfspaces {
                if h.normal.len() != c.len() {
                    return Err(Error::DimensionMismatch { expected: c.len(), got: h.normal.len() });
                }
                let nn = norm2(&h.normal);
                if nn == 0.0 {
                    return Err(Error::InvalidSpec("halfspace with zero normal".into()));
                }
                r_in = r_in.min((h.offset - dot(&h.normal, c)) / nn);
            }
            if !(r_in > 0.0) {
                return Err(Error::CertificateViolation(
                    "halfspaces cut off the certified centre; no positive inner radius".into(),
                ));
            }
            Built {
                shape: Shape::Intersection { base: Box::new(b.shape), halfspaces: halfspaces.clone() },
                certificate: Certificate {
                    center: c.clone(),
                    inner_radius: r_in,
                    outer_radius: b.certificate.outer_radius,
                },
                volume: None,
                moments: None,
            }
        }
        BodyDescriptor::Affine { base, map } => {
            let b = build(base)?;
            if map.dim() != base.dim() {
                return Err(Error::DimensionMismatch { expected: base.dim(), got: map.dim() });
            }
            let s = map.linear.singular_values()?;
            let (smax, smin) = (s[0], *s.last().expect("dim >= 1"));
            let det = map.determinant().abs();
            let moments = match &b.moments {
                Some((mean, cov)) => {
                    let c = map.linear.matmul(cov)?.matmul(&map.linear.transpose())?;
                    Some((map.apply(mean), crate::numerics::linalg::symmetrize(&c)))
                }
                None => None,
            };
            Built {
                shape: Shape::Affine { base: Box::new(b.shape), inverse: map.inverse()? },
                certificate: Certificate {
                    center: map.apply(&b.certificate.center),
                    inner_radius: b.certificate.inner_radius * smin,
                    outer_radius: b.certificate.outer_radius * smax,
                },
                volume: b.volume.map(|v| v * det),
                moments,
            }
        }
    })
}

impl ConvexBody {
    pub fn from_descriptor(descriptor: BodyDescriptor) -> Result<Self> {
        let b = build(&descriptor)?;
        Ok(Self {
            dim: descriptor.dim(),
            shape: b.shape,
            certificate: b.certificate,
            volume: b.volume,
            moments: b.moments,
            descriptor: Some(descriptor),
        })
    }

    /// Plug-in body from a membership function and a sandwich certificate.
    /// The certificate is spot-checked along the coordinate axes.
    pub fn from_membership(
        dim: usize,
        membership: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
        certificate: Certificate,
    ) -> Result<Self> {
        nonzero_dim(dim)?;
        if certificate.center.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: certificate.center.len() });
        }
        if !(certificate.inner_radius > 0.0) {
            return Err(Error::CertificateViolation("inner radius must be positive".into()));
        }
        if certificate.inner_radius > certificate.outer_radius {
            return Err(Error::CertificateViolation("inner radius exceeds outer radius".into()));
        }
        let body = Self {
            dim,
            shape: Shape::Custom(Arc::new(membership)),
            certificate,
            volume: None,
            moments: None,
            descriptor: None,
        };
        body.spot_check_certificate()?;
        Ok(body)
    }

    fn spot_check_certificate(&self) -> Result<()> {
        let c = &self.certificate;
        for i in 0..self.dim {
            for s in [-1.0, 1.0] {
                let mut x = c.center.clone();
                x[i] += s * c.inner_radius * (1.0 - 1e-9);
                if !self.contains(&x) {
                    return Err(Error::CertificateViolation(format!("inner ball point {x:?} is outside")));
                }
                let mut y = c.center.clone();
                y[i] += s * c.outer_radius * (1.0 + 1e-9);
                if self.contains(&y) {
                    return Err(Error::CertificateViolation(format!("point {y:?} beyond outer radius is inside")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.shape.contains(x)
    }

    pub fn separate(&self, x: &[f64]) -> Separation {
        self.shape.separate(x)
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn exact_volume(&self) -> Option<f64> {
        self.volume
    }

    /// Barycenter and covariance of the uniform measure, when known in closed form.
    pub fn exact_moments(&self) -> Option<&(Vec<f64>, Matrix)> {
        self.moments.as_ref()
    }

    pub fn descriptor(&self) -> Option<&BodyDescriptor> {
        self.descriptor.as_ref()
    }

    /// Image of the body under `map`, with transported certificates.
    pub fn transformed(&self, map: &AffineMap) -> Result<ConvexBody> {
        if let Some(d) = &self.descriptor {
            return ConvexBody::from_descriptor(BodyDescriptor::Affine { base: Box::new(d.clone()), map: map.clone() });
        }
        let s = map.linear.singular_values()?;
        let inverse = map.inverse()?;
        let c = &self.certificate;
        Ok(ConvexBody {
            dim: self.dim,
            shape: Shape::Affine { base: Box::new(self.shape.clone()), inverse },
            certificate: Certificate {
                center: map.apply(&c.center),
                inner_radius: c.inner_radius * s[s.len() - 1],
                outer_radius: c.outer_radius * s[0],
            },
            volume: self.volume.map(|v| v * map.determinant().abs()),
            moments: None,
            descriptor: None,
        })
    }

    /// Same body with certificates replaced (e.g. by probed estimates).
    pub fn with_certificate(&self, certificate: Certificate) -> ConvexBody {
        ConvexBody { certificate, ..self.clone() }
    }

    /// Uniform scaling about the origin so that the volume becomes `target`.
    /// Requires a closed-form volume.
    pub fn scaled_to_volume(&self, target: f64) -> Result<ConvexBody> {
        let v = self.volume.ok_or_else(|| Error::InvalidArgument("body volume unknown".into()))?;
        let s = (target / v).powf(1.0 / self.dim as f64);
        self.transformed(&AffineMap::linear(Matrix::identity(self.dim).scale(s))?)
    }
}
