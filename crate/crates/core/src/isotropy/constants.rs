use super::AffineMap;
use crate::distributions::{sample, Density, DistributionSpec, Family, SampleBatch};
use crate::error::{Error, Result};
use crate::numerics::linalg::{inv_sqrt_spd, log_det_spd, symmetric_eigen, symmetrize};
use crate::numerics::special::ln_lp_ball_volume;
use crate::numerics::stats::{replicate, MIN_REPLICAS};
use crate::numerics::{Estimate, Flag, Matrix, RngStream};

/// Empirical mean and covariance (divisor `N`) of the rows of `data`.
pub fn mean_and_covariance(data: &Matrix) -> (Vec<f64>, Matrix) {
    let (rows, n) = (data.rows(), data.cols());
    let mut mean = vec![0.0; n];
    for i in 0..rows {
        for (m, v) in mean.iter_mut().zip(data.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows as f64);
    let mut cov = Matrix::zeros(n, n);
    let mut c = vec![0.0; n];
    for i in 0..rows {
        for ((ci, v), m) in c.iter_mut().zip(data.row(i)).zip(&mean) {
            *ci = v - m;
        }
        for a in 0..n {
            for b in a..n {
                cov[(a, b)] += c[a] * c[b];
            }
        }
    }
    for a in 0..n {
        for b in a..n {
            let v = cov[(a, b)] / rows as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    (mean, cov)
}

/// Affine map putting `batch` in isotropic position: linear part
/// `Σ̂^{-1/2}`, shift `-Σ̂^{-1/2} μ̂`.
pub fn empirical_isotropy(batch: &SampleBatch) -> Result<AffineMap> {
    let (rows, n) = (batch.len(), batch.dim());
    if rows <= n {
        return Err(Error::InvalidArgument(format!("need more than n = {n} rows, got {rows}")));
    }
    let (mean, cov) = mean_and_covariance(&batch.data);
    let w = inv_sqrt_spd(&cov)?;
    let shift = w.matvec(&mean).into_iter().map(|v| -v).collect();
    AffineMap::new(w, shift)
}

/// `ln Vol` of the support of a uniform spec, when known in closed form.
fn ln_support_volume(spec: &DistributionSpec) -> Result<Option<f64>> {
    let n = spec.dim;
    let raw = match &spec.family {
        Family::UniformCube => Some(n as f64 * 2f64.ln()),
        Family::UniformSimplex => Some(-crate::numerics::special::ln_gamma(n as f64 + 1.0)),
        Family::UniformLpBall { p } => Some(ln_lp_ball_volume(n, *p)),
        Family::OracleUniform { body, .. } => body.build()?.exact_volume().map(f64::ln),
        _ => return Err(Error::NotUniform),
    };
    let ln_det = match spec.output_map()? {
        Some(t) => t.ln_abs_determinant(),
        None => 0.0,
    };
    Ok(raw.map(|v| v + ln_det))
}

/// Covariance of a spec: closed form when available, otherwise pooled over
/// walk replicas.
fn covariance_of(spec: &DistributionSpec, stream: &RngStream) -> Result<(Matrix, bool)> {
    if let Ok((_, cov)) = spec.moments() {
        return Ok((cov, true));
    }
    let n = spec.dim;
    let rows = 2000 * n;
    let parts = replicate(stream, MIN_REPLICAS, |k, _| {
        sample(spec, rows, &stream.replica(k as u64)).map(|b| mean_and_covariance(&b.data))
    });
    let mut mean = vec![0.0; n];
    let mut second = Matrix::zeros(n, n);
    for part in parts {
        let (m, c) = part?;
        for a in 0..n {
            mean[a] += m[a] / MIN_REPLICAS as f64;
            for b in 0..n {
                second[(a, b)] += (c[(a, b)] + m[a] * m[b]) / MIN_REPLICAS as f64;
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            second[(a, b)] -= mean[a] * mean[b];
        }
    }
    Ok((symmetrize(&second), false))
}

/// `L_K = (det Cov)^{1/(2n)} / Vol(K)^{1/n}` for a uniform measure on `K`.
///
/// In isotropic position this is `Vol(K)^{-1/n}`, and the expression is
/// affine invariant. `volume` overrides the closed form and must be given
/// when no closed form exists; its CI propagates to the result.
pub fn isotropic_constant_body(
    spec: &DistributionSpec,
    volume: Option<&Estimate>,
    stream: &RngStream,
) -> Result<Estimate> {
    if !spec.family.is_uniform() {
        return Err(Error::NotUniform);
    }
    let n = spec.dim as f64;
    let vol = match (volume, ln_support_volume(spec)?) {
        (Some(v), _) => v.clone(),
        (None, Some(lv)) => Estimate::exact(lv.exp()),
        (None, None) => {
            return Err(Error::InvalidArgument("body volume unknown; pass an estimate".into()));
        }
    };
    let (cov, exact_cov) = covariance_of(spec, stream)?;
    let scale = (log_det_spd(&cov)? / (2.0 * n)).exp();
    let mut out = vol.map(|v| scale * v.powf(-1.0 / n));
    if !exact_cov {
        out.exact = false;
        out = out.flag(Flag::Extrapolated);
    }
    Ok(out)
}

/// `L_f = (det Cov X)^{1/(2n)} f(EX)^{1/n}`; equals `f(0)^{1/n}` for
/// isotropic specs and is invariant under invertible affine maps.
pub fn isotropic_constant_density(spec: &DistributionSpec) -> Result<f64> {
    let n = spec.dim as f64;
    let (mean, cov) = spec.moments()?;
    let eig = symmetric_eigen(&cov)?;
    if !(eig.values[0] > 0.0) || eig.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularCovariance(eig.values[0]));
    }
    let ln_det: f64 = eig.values.iter().map(|v| v.ln()).sum();
    let lf = Density::new(spec)?.log_density(&mean)?;
    Ok((ln_det / (2.0 * n) + lf / n).exp())
}
