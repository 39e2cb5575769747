use std::cell::RefCell;
use std::fmt::Write as _;

use crate::distributions::{Density, DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::numerics::linalg::norm2;
use crate::numerics::quadrature::{integrate, integrate_halfline_scaled, TailDecay};

/// The star body `K_p(f) = { x : p ∫_0^∞ t^{p-1} f(tx) dt ≥ f(0) }`.
///
/// Its radial function is `r(θ) = (p ∫_0^∞ u^{p-1} f(uθ) du / f(0))^{1/p}`.
#[derive(Debug, Clone)]
pub struct BallBody {
    density: Density,
    compact: bool,
    decay: TailDecay,
    p: f64,
    tol: f64,
    log_f0: f64,
}

/// `(θ, r(θ))` rows for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    pub p: f64,
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl RadialTable {
    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.0.len());
        let mut s = String::new();
        let head: Vec<String> = (1..=n).map(|i| format!("theta_{i}")).collect();
        let _ = writeln!(s, "{},r", head.join(","));
        for (theta, r) in &self.rows {
            let cells: Vec<String> = theta.iter().map(|v| format!("{v:.12}")).collect();
            let _ = writeln!(s, "{},{r:.12}", cells.join(","));
        }
        s
    }
}

impl BallBody {
    pub fn new(spec: &DistributionSpec, p: f64, tol: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("order p must be positive, got {p}")));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        let density = Density::new(spec)?;
        let log_f0 = density.log_unnormalized(&vec![0.0; spec.dim]);
        if !log_f0.is_finite() {
            return Err(Error::InvalidArgument("K_p(f) needs f(0) > 0".into()));
        }
        let n = spec.dim as f64;
        let decay = match &spec.family {
            // u^{p-1} (1+u)^{-n-r} ~ u^{-(n+r-p+1)}.
            Family::SConcave { r, .. } => {
                let exponent = n + r - p + 1.0;
                if exponent <= 1.0 {
                    return Err(Error::DivergentIntegral(format!(
                        "∫ t^(p-1) f(tθ) dt diverges for p = {p} >= n + r = {}",
                        n + r
                    )));
                }
                TailDecay::Power { exponent }
            }
            _ => TailDecay::Exponential,
        };
        Ok(Self { density, compact: spec.family.is_uniform(), decay, p, tol, log_f0 })
    }

    pub fn order(&self) -> f64 {
        self.p
    }

    fn inside(&self, x: &[f64]) -> bool {
        self.density.log_unnormalized(x).is_finite()
    }

    /// Last `t` with `t v` in the (compact) support.
    fn support_end(&self, v: &[f64]) -> Result<f64> {
        let at = |t: f64| v.iter().map(|x| t * x).collect::<Vec<f64>>();
        let mut hi = 1.0;
        let mut doublings = 0;
        while self.inside(&at(hi)) {
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 {
                return Err(Error::InvalidArgument("support is unbounded along this ray".into()));
            }
        }
        let mut lo = 0.0;
        while hi - lo > 1e-15 * hi {
            let mid = 0.5 * (lo + hi);
            if self.inside(&at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    /// `∫_0^∞ t^{p-1} f(tv)/f(0) dt`.
    fn ray_integral(&self, v: &[f64]) -> Result<f64> {
        let p = self.p;
        let buf = RefCell::new(vec![0.0; v.len()]);
        let call = |t: f64| {
            if t == 0.0 {
                return if p == 1.0 { 1.0 } else if p > 1.0 { 0.0 } else { f64::INFINITY };
            }
            let mut b = buf.borrow_mut();
            for (bi, x) in b.iter_mut().zip(v) {
                *bi = t * x;
            }
            let lf = self.density.log_unnormalized(&b) - self.log_f0;
            if lf == f64::NEG_INFINITY {
                0.0
            } else {
                ((p - 1.0) * t.ln() + lf).exp()
            }
        };
        if self.compact {
            let end = self.support_end(v)?;
            integrate(call, 0.0, end, self.tol)
        } else {
            let scale = 1.0 / norm2(v);
            integrate_halfline_scaled(call, scale, self.tol, self.decay)
        }
    }

    /// Radial function in the direction of `theta` (normalized internally).
    pub fn radial(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.density.dim() {
            return Err(Error::DimensionMismatch { expected: self.density.dim(), got: theta.len() });
        }
        let nt = norm2(theta);
        if !(nt > 0.0) || !nt.is_finite() {
            return Err(Error::InvalidArgument("direction must be non-zero and finite".into()));
        }
        let u: Vec<f64> = theta.iter().map(|v| v / nt).collect();
        Ok((self.p * self.ray_integral(&u)?).powf(1.0 / self.p))
    }

    /// `p ∫_0^∞ t^{p-1} f(tx) dt / f(0)`; at least 1 exactly on `K_p(f)`.
    pub fn membership_ratio(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.density.dim() {
            return Err(Error::DimensionMismatch { expected: self.density.dim(), got: x.len() });
        }
        if x.iter().all(|v| *v == 0.0) {
            return Ok(f64::INFINITY);
        }
        Ok(self.p * self.ray_integral(x)?)
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.membership_ratio(x)? >= 1.0 - 1e-9)
    }

    pub fn radial_table(&self, thetas: &[Vec<f64>]) -> Result<RadialTable> {
        let rows = thetas
            .iter()
            .map(|t| {
                let nt = norm2(t);
                let u: Vec<f64> = t.iter().map(|v| v / nt).collect();
                self.radial(&u).map(|r| (u, r))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RadialTable { p: self.p, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotropy::AffineMap;
    use crate::numerics::{random_unit_vector, Matrix, RngStream};
    use std::f64::consts::PI;

    #[test]
    fn gaussian_line_radius() {
        let k = BallBody::new(&DistributionSpec::gaussian(1), 1.0, 1e-12).unwrap();
        let r = k.radial(&[1.0]).unwrap();
        assert!((r - (PI / 2.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn indicator_recovers_body() {
        let cube = DistributionSpec::raw(Family::UniformCube, 3);
        let mut rng = RngStream::new(8).rng();
        for p in [1.0, 2.5, 4.0] {
            let k = BallBody::new(&cube, p, 1e-12).unwrap();
            for _ in 0..10 {
                let th = random_unit_vector(3, &mut rng);
                let want = 1.0 / th.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                assert!((k.radial(&th).unwrap() - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn product_exponential_closed_form() {
        // r(θ)^p = p ∫ u^{p-1} e^{-u|θ|_1} du = Γ(p+1)/|θ|_1^p.
        let s = DistributionSpec::raw(Family::ProductExponential, 2);
        let p = 3.0;
        let k = BallBody::new(&s, p, 1e-12).unwrap();
        let th = [0.6, -0.8];
        let want = 6f64.powf(1.0 / p) / 1.4;
        assert!((k.radial(&th).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn shifted_simplex_contains_origin() {
        let shift = AffineMap::new(Matrix::identity(2), vec![-0.25, -0.25]).unwrap();
        let s = DistributionSpec::raw(Family::UniformSimplex, 2).transformed(&shift).unwrap();
        let k = BallBody::new(&s, 2.0, 1e-12).unwrap();
        // t e_1 maps back to (t + 1/4, 1/4): the face Σx = 1 is hit at t = 1/2.
        assert!((k.radial(&[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-9);
        assert!((k.radial(&[-1.0, 0.0]).unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn divergence_detected() {
        let s = DistributionSpec::raw(Family::SConcave { r: 1.0, gauge: crate::distributions::Gauge::L2 }, 2);
        assert!(matches!(BallBody::new(&s, 3.0, 1e-10), Err(Error::DivergentIntegral(_))));
        assert!(BallBody::new(&s, 2.0, 1e-10).is_ok());
    }

    #[test]
    fn membership_matches_radial() {
        let k = BallBody::new(&DistributionSpec::gaussian(2), 2.0, 1e-12).unwrap();
        let r = k.radial(&[1.0, 0.0]).unwrap();
        assert!(k.contains(&[0.999 * r, 0.0]).unwrap());
        assert!(!k.contains(&[1.001 * r, 0.0]).unwrap());
        let ratio = k.membership_ratio(&[0.5 * r, 0.0]).unwrap();
        assert!((ratio - 4.0).abs() < 1e-8);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let k = BallBody::new(&DistributionSpec::gaussian(2), 1.0, 1e-10).unwrap();
        let t = k.radial_table(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("theta_1,theta_2,r\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
