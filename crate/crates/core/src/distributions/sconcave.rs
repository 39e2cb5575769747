use serde::{Deserialize, Serialize};

use super::Gauge;
use crate::error::{Error, Result};
use crate::numerics::special::{ln_gamma, ln_lp_ball_volume};

/// Concavity parameters of the family `c (1 + ‖x‖)^{-n-r}`.
///
/// The measure is `s`-concave with `s = -1/r`; the density is `f^{-β}` for
/// convex `f` with `β = n + r`, and is itself `γ`-concave with
/// `1/γ = 1/s - n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SConcaveParams {
    pub n: usize,
    pub r: f64,
    pub s: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `r = ∞`: `s = 0`, the log-concave case.
    pub log_concave_limit: bool,
}

pub fn sconcave_params(n: usize, r: f64) -> Result<SConcaveParams> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("r must be positive, got {r}")));
    }
    let nf = n as f64;
    if r.is_infinite() {
        return Ok(SConcaveParams { n, r, s: 0.0, beta: f64::INFINITY, gamma: 0.0, log_concave_limit: true });
    }
    let s = -1.0 / r;
    Ok(SConcaveParams { n, r, s, beta: nf + r, gamma: s / (1.0 - nf * s), log_concave_limit: false })
}

fn ln_gauge_ball_volume(n: usize, gauge: Gauge) -> f64 {
    match gauge {
        Gauge::L2 => ln_lp_ball_volume(n, 2.0),
        Gauge::L1 => ln_lp_ball_volume(n, 1.0),
    }
}

/// `ln c` for the density `c (1 + ‖x‖)^{-n-r}`.
///
/// In gauge-polar coordinates the mass is `n Vol(B) ∫ ρ^{n-1} (1+ρ)^{-n-r} dρ
/// = n Vol(B) B(n, r)`.
pub fn sconcave_log_normalizer(n: usize, r: f64, gauge: Gauge) -> f64 {
    let nf = n as f64;
    let ln_beta = ln_gamma(nf) + ln_gamma(r) - ln_gamma(nf + r);
    -(nf.ln() + ln_gauge_ball_volume(n, gauge) + ln_beta)
}

/// `E x_1²` of the raw family; needs `r > 2`.
///
/// The gauge radius has `E ρ² = n(n+1)/((r-1)(r-2))`; the cone-measure
/// direction contributes `1/n` (ℓ₂) or `2/(n(n+1))` (ℓ₁).
pub fn sconcave_coordinate_variance(n: usize, r: f64, gauge: Gauge) -> Result<f64> {
    if r <= 2.0 {
        return Err(Error::MomentDoesNotExist { p: 2.0, r });
    }
    let nf = n as f64;
    let denom = (r - 1.0) * (r - 2.0);
    Ok(match gauge {
        Gauge::L2 => (nf + 1.0) / denom,
        Gauge::L1 => 2.0 / denom,
    })
}
