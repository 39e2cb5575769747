//! Special functions, thin wrappers over `statrs`.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf;
use statrs::function::gamma;

/// Standard normal CDF through the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ^{-1}(p)` for `p ∈ (0,1)`, refined by two Newton steps on `normal_cdf`.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erf::erfc_inv(2.0 * p);
    for _ in 0..2 {
        let d = normal_pdf(x);
        if d <= 0.0 {
            break;
        }
        x -= (normal_cdf(x) - p) / d;
    }
    x
}

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

pub fn gamma_fn(x: f64) -> f64 {
    gamma::gamma(x)
}

/// `ln Vol(B_p^n)` for the unit `ℓ_p` ball; `p = ∞` gives the cube `[-1,1]^n`.
pub fn ln_lp_ball_volume(n: usize, p: f64) -> f64 {
    let n = n as f64;
    if p.is_infinite() {
        return n * 2f64.ln();
    }
    n * (2.0 * gamma::gamma(1.0 + 1.0 / p)).ln() - gamma::ln_gamma(1.0 + n / p)
}

/// `ln Vol(B_2^n)`.
pub fn ln_unit_ball_volume(n: usize) -> f64 {
    let n = n as f64;
    0.5 * n * PI.ln() - gamma::ln_gamma(0.5 * n + 1.0)
}

/// Two-sided standard-normal critical value for confidence `1 - alpha`.
pub fn z_critical(alpha: f64) -> f64 {
    normal_quantile(1.0 - 0.5 * alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(0.1) - 0.539_827_837_277_029).abs() < 1e-12);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-12);
        assert!((normal_cdf(-8.0) - 6.220_960_574_271_785e-16).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 0.01, 0.3, 0.5, 0.9, 0.999_999] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() < 1e-14 * p.max(1e-3), "p={p}");
        }
    }

    #[test]
    fn ball_volumes() {
        assert!((ln_unit_ball_volume(3).exp() - 4.0 * PI / 3.0).abs() < 1e-13);
        assert!((ln_lp_ball_volume(3, 1.0).exp() - 8.0 / 6.0).abs() < 1e-13);
        assert!((ln_lp_ball_volume(4, f64::INFINITY).exp() - 16.0).abs() < 1e-12);
        assert!((ln_lp_ball_volume(2, 2.0).exp() - PI).abs() < 1e-13);
    }
}
