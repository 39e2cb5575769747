use crate::error::{Error, Result};

/// Kolmogorov distance between the empirical CDF of `sorted` and `ref_cdf`.
///
/// Both sides of every jump are checked: at the i-th order statistic the
/// empirical CDF moves from `i/N` to `(i+1)/N`. Ties are handled because
/// the intermediate values lie between the extreme ones.
pub fn ks_distance(sorted: &[f64], ref_cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    if sorted.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("sample"));
    }
    if sorted.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Unsorted);
    }
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = ref_cdf(x);
        let below = i as f64 / n;
        let above = (i + 1) as f64 / n;
        sup = sup.max((f - below).abs()).max((above - f).abs());
    }
    Ok(sup.min(1.0))
}

/// Sorts a copy of `sample` and returns its Kolmogorov distance to `ref_cdf`.
pub fn ks_distance_unsorted(sample: &[f64], ref_cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let mut v = sample.to_vec();
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::NonFinite("sample"));
    }
    v.sort_by(f64::total_cmp);
    ks_distance(&v, ref_cdf)
}

/// Asymptotic critical value of the one-sample KS statistic at level `alpha`
/// (`sqrt(-ln(alpha/2)/2) / sqrt(N)`).
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::normal_cdf;

    #[test]
    fn constant_sample_against_normal() {
        let d = ks_distance(&[0.0; 10], normal_cdf).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        let d = ks_distance(&[0.0], normal_cdf).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert_eq!(ks_distance(&[], normal_cdf), Err(Error::EmptySample));
        assert_eq!(ks_distance(&[1.0, 0.0], normal_cdf), Err(Error::Unsorted));
    }

    #[test]
    fn exact_uniform_sample() {
        // Midpoints of N equal cells against the uniform CDF: distance 1/(2N).
        let n = 100;
        let s: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&s, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-15);
    }
}
