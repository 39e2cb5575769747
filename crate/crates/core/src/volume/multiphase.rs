use rayon::prelude::*;
use serde::Serialize;

use super::body::{Certificate, ConvexBody};
use super::walk::hit_and_run_step;
use crate::error::{Error, Result};
use crate::numerics::linalg::dot;
use crate::numerics::special::{ln_unit_ball_volume, z_critical};
use crate::numerics::stats::{variance, MIN_REPLICAS};
use crate::numerics::{Estimate, Flag, RngStream, StreamRng};

/// Walk and stopping parameters.
#[derive(Debug, Clone, Serialize)]
pub struct VolumeConfig {
    /// Target relative half-width of the confidence interval.
    pub epsilon: f64,
    /// The interval has confidence `1 - eta`.
    pub eta: f64,
    pub chains: usize,
    /// Steps before the first recorded point of each phase; default `n²`.
    pub burn_in: Option<usize>,
    /// Steps between recorded points; default `n`.
    pub thinning: Option<usize>,
    /// Points recorded per chain per round.
    pub round_size: usize,
    pub max_oracle_calls: u64,
}

impl Default for VolumeConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            eta: 0.05,
            chains: MIN_REPLICAS,
            burn_in: None,
            thinning: None,
            round_size: 64,
            max_oracle_calls: 2_000_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseReport {
    /// Radius of the ball cutting out `K_i`.
    pub radius: f64,
    /// `Vol(K_{i-1}) / Vol(K_i)`, in `(0, 1]`.
    pub ratio: Estimate,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeEstimate {
    pub volume: Estimate,
    /// Relative half-width of the reported interval.
    pub relative_ci: f64,
    pub base_volume: f64,
    pub phases: Vec<PhaseReport>,
    pub oracle_calls: u64,
    pub chains: usize,
    pub burn_in: usize,
    pub thinning: usize,
}

impl VolumeEstimate {
    /// Number of phases `m`.
    pub fn phase_count(&self) -> usize {
        self.phases.len()
    }
}

struct Chain {
    rng: StreamRng,
    x: Vec<f64>,
    calls: u64,
}

/// `K ∩ B(c, radius)` as a plug-in body.
fn cut_body(body: &ConvexBody, radius: f64) -> Result<ConvexBody> {
    let c = body.certificate().clone();
    let inner = body.clone();
    let centre = c.center.clone();
    let r2 = radius * radius;
    let member = move |x: &[f64]| {
        let d2: f64 = x.iter().zip(&centre).map(|(a, b)| (a - b) * (a - b)).sum();
        d2 <= r2 && inner.contains(x)
    };
    ConvexBody::from_membership(
        body.dim(),
        member,
        Certificate {
            center: c.center,
            inner_radius: c.inner_radius.min(radius),
            outer_radius: c.outer_radius.min(radius),
        },
    )
}

/// Multiphase Monte-Carlo volume.
///
/// With `r = r_in`, `d = R_out / r_in` from the certificate and
/// `m = ⌈n log₂ d⌉`, the chain `K_i = K ∩ B(c, 2^{i/n} r)` runs from
/// `K_0 = B(c, r)` to `K_m = K`. Each ratio `Vol(K_{i-1}) / Vol(K_i)` is the
/// fraction of hit-and-run points in `K_i` that fall in the smaller ball,
/// so `Vol K = Vol(B(c, r)) / Π ratios`.
pub fn volume_multiphase(body: &ConvexBody, config: &VolumeConfig, stream: &RngStream) -> Result<VolumeEstimate> {
    let n = body.dim();
    if n > 12 {
        return Err(Error::ScaleLimit(format!("multiphase volume is limited to n <= 12, got {n}")));
    }
    if !(config.epsilon > 0.0) || !(config.eta > 0.0 && config.eta < 1.0) {
        return Err(Error::InvalidArgument("need epsilon > 0 and eta in (0, 1)".into()));
    }
    let cert = body.certificate().clone();
    let d = cert.sandwich_ratio();
    if !(d >= 1.0) || !d.is_finite() {
        return Err(Error::CertificateViolation(format!("sandwich ratio {d} is not in [1, inf)")));
    }
    if d > 10.0 {
        return Err(Error::ScaleLimit(format!("sandwich ratio {d:.3} exceeds 10; round the body first")));
    }
    let nf = n as f64;
    let m = (nf * d.log2() - 1e-12).ceil().max(0.0) as usize;
    let r0 = cert.inner_radius;
    let base_volume = (ln_unit_ball_volume(n) + nf * r0.ln()).exp();
    let chains_n = config.chains.max(MIN_REPLICAS);
    let burn_in = config.burn_in.unwrap_or(n * n);
    let thinning = config.thinning.unwrap_or(n).max(1);
    let z = z_critical(config.eta);
    // Per-phase share of the log-scale error budget.
    let phase_target = if m > 0 { config.epsilon / (z * (m as f64).sqrt()) } else { 0.0 };

    let mut chains: Vec<Chain> = (0..chains_n)
        .map(|k| Chain { rng: stream.replica(k as u64).rng(), x: cert.center.clone(), calls: 0 })
        .collect();
    let mut phases = Vec::with_capacity(m);
    let mut log_var = 0.0;
    let mut exhausted = false;
    let total_calls = |chains: &[Chain]| chains.iter().map(|c| c.calls).sum::<u64>();

    for i in 1..=m {
        let radius_prev = r0 * 2f64.powf((i as f64 - 1.0) / nf);
        let radius = r0 * 2f64.powf(i as f64 / nf);
        let phase_body = cut_body(body, radius)?;
        let r2_prev = radius_prev * radius_prev;
        let mut hits = vec![0usize; chains_n];
        let mut seen = vec![0usize; chains_n];
        let mut first = true;
        let ratio = loop {
            let steps_first = if first { burn_in } else { 0 };
            first = false;
            let results: Vec<Result<(usize, usize)>> = chains
                .par_iter_mut()
                .map(|ch| {
                    for _ in 0..steps_first {
                        ch.x = hit_and_run_step(&phase_body, &ch.x, &mut ch.rng, &mut ch.calls)?;
                    }
                    let mut h = 0;
                    for _ in 0..config.round_size {
                        for _ in 0..thinning {
                            ch.x = hit_and_run_step(&phase_body, &ch.x, &mut ch.rng, &mut ch.calls)?;
                        }
                        let dx: Vec<f64> = ch.x.iter().zip(&cert.center).map(|(a, b)| a - b).collect();
                        if dot(&dx, &dx) <= r2_prev {
                            h += 1;
                        }
                    }
                    Ok((h, config.round_size))
                })
                .collect();
            for (k, r) in results.into_iter().enumerate() {
                let (h, s) = r?;
                hits[k] += h;
                seen[k] += s;
            }
            let per: Vec<f64> = hits.iter().zip(&seen).map(|(&h, &s)| h as f64 / s as f64).collect();
            let pooled = hits.iter().sum::<usize>() as f64 / seen.iter().sum::<usize>() as f64;
            let se = (variance(&per) / chains_n as f64).sqrt();
            let rel = if pooled > 0.0 { se / pooled } else { f64::INFINITY };
            if pooled > 0.0 && rel <= phase_target {
                break Estimate::from_replicas(pooled, &per);
            }
            if total_calls(&chains) >= config.max_oracle_calls {
                exhausted = true;
                break Estimate::from_replicas(pooled, &per).flag(Flag::BudgetExhausted);
            }
        };
        if !(ratio.value > 0.0) {
            return Err(Error::BudgetExhausted { oracle_calls: total_calls(&chains) });
        }
        log_var += (ratio.stderr / ratio.value).powi(2);
        phases.push(PhaseReport { radius, ratio, samples: seen.iter().sum() });
        if exhausted {
            break;
        }
    }

    let product: f64 = phases.iter().map(|p| p.ratio.value).product();
    let value = base_volume / product;
    let se_log = log_var.sqrt();
    let mut volume = Estimate {
        value,
        stderr: value * se_log,
        ci_low: value * (-z * se_log).exp(),
        ci_high: value * (z * se_log).exp(),
        replicas: chains_n,
        exact: m == 0,
        flags: vec![],
    };
    if exhausted {
        volume = volume.flag(Flag::BudgetExhausted);
    }
    Ok(VolumeEstimate {
        volume,
        relative_ci: (z * se_log).exp() - 1.0,
        base_volume,
        phases,
        oracle_calls: total_calls(&chains),
        chains: chains_n,
        burn_in,
        thinning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::BodyDescriptor;

    #[test]
    fn ball_needs_no_phases() {
        let b = BodyDescriptor::Ball { dim: 3, radius: 1.0 }.build().unwrap();
        let v = volume_multiphase(&b, &VolumeConfig::default(), &RngStream::new(1)).unwrap();
        assert_eq!(v.phase_count(), 0);
        assert!((v.volume.value - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn square_area() {
        let b = BodyDescriptor::Cube { dim: 2, half_width: 1.0 }.build().unwrap();
        let v = volume_multiphase(&b, &VolumeConfig::default(), &RngStream::new(2)).unwrap();
        assert_eq!(v.phase_count(), 1);
        assert!((v.volume.value - 4.0).abs() < 0.4, "{:?}", v.volume);
        let product: f64 = v.phases.iter().map(|p| p.ratio.value).product();
        assert!((v.base_volume / product - v.volume.value).abs() < 1e-12 * v.volume.value);
        for p in &v.phases {
            assert!(p.ratio.value > 0.0 && p.ratio.value <= 1.0);
        }
    }

    #[test]
    fn too_elongated_rejected() {
        let b = BodyDescriptor::Ellipsoid { semiaxes: vec![1.0, 20.0] }.build().unwrap();
        assert!(matches!(
            volume_multiphase(&b, &VolumeConfig::default(), &RngStream::new(2)),
            Err(Error::ScaleLimit(_))
        ));
    }

    #[test]
    fn budget_exhaustion_flagged() {
        let b = BodyDescriptor::Cube { dim: 3, half_width: 1.0 }.build().unwrap();
        let cfg = VolumeConfig { max_oracle_calls: 1000, epsilon: 1e-4, ..VolumeConfig::default() };
        let v = volume_multiphase(&b, &cfg, &RngStream::new(2)).unwrap();
        assert!(v.volume.has_flag(Flag::BudgetExhausted));
    }
}
