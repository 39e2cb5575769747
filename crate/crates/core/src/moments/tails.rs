use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{jackknife_se, row_values};
use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::numerics::special::z_critical;
use crate::numerics::stats::{ols_fit, wilson_interval};
use crate::numerics::{norm2, Estimate, Flag, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailForm {
    /// `P(|X| ≥ t√n) ≤ C e^{-c t √n}`, stated for `t ≥ 10`.
    Paouris,
    /// `P(|X| ≤ t√n) ≤ C (c t)^{√n}`, stated for `t < 1/10`.
    SmallBall,
    /// `P(||X| - √n| ≥ t√n) ≤ C e^{-c √n min(t³, t)}`.
    Gm,
    /// `P(|X| > t√n) ≤ (c max(1, r/√n) / t)^{r/2}` for the s-concave family.
    Sconcave,
}

impl fmt::Display for TailForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailForm::Paouris => "paouris",
            TailForm::SmallBall => "small-ball",
            TailForm::Gm => "gm",
            TailForm::Sconcave => "sconcave",
        })
    }
}

impl FromStr for TailForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paouris" => Ok(TailForm::Paouris),
            "small-ball" => Ok(TailForm::SmallBall),
            "gm" => Ok(TailForm::Gm),
            "sconcave" => Ok(TailForm::Sconcave),
            _ => Err(Error::InvalidArgument(format!(
                "unknown tail form '{s}' (expected paouris, small-ball, gm or sconcave)"
            ))),
        }
    }
}

/// The unspecified universal constants, as configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailConstants {
    pub big_c: f64,
    pub small_c: f64,
}

impl Default for TailConstants {
    fn default() -> Self {
        Self { big_c: 3.0, small_c: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub count: usize,
    pub bound: f64,
    pub pass: bool,
    /// `E|X|^q / (t√n)^q` at `q = t√n`, when that moment exists.
    pub markov: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailLedger {
    pub form: TailForm,
    pub n: usize,
    pub samples: usize,
    pub constants: TailConstants,
    pub rows: Vec<TailRow>,
    /// OLS slope of `log P̂` against `log t` over rows with events, with a
    /// delete-one-replica jackknife standard error.
    pub slope: Option<Estimate>,
    pub all_pass: bool,
}

impl TailForm {
    fn event(&self, r: f64, t: f64, sqrt_n: f64) -> bool {
        match self {
            TailForm::Paouris => r >= t * sqrt_n,
            TailForm::SmallBall => r <= t * sqrt_n,
            TailForm::Gm => (r - sqrt_n).abs() >= t * sqrt_n,
            TailForm::Sconcave => r > t * sqrt_n,
        }
    }

    fn bound(&self, t: f64, n: f64, k: TailConstants, r: Option<f64>) -> f64 {
        let sn = n.sqrt();
        let b = match self {
            TailForm::Paouris => k.big_c * (-k.small_c * t * sn).exp(),
            TailForm::SmallBall => k.big_c * (k.small_c * t).powf(sn),
            TailForm::Gm => k.big_c * (-k.small_c * sn * (t * t * t).min(t)).exp(),
            TailForm::Sconcave => {
                let r = r.expect("s-concave form carries r");
                (k.small_c * (r / sn).max(1.0) / t).powf(r / 2.0)
            }
        };
        if b.is_nan() {
            f64::INFINITY
        } else {
            b
        }
    }

    /// Whether `t` lies in the range where the statement is made.
    fn in_regime(&self, t: f64) -> bool {
        match self {
            TailForm::Paouris => t >= 10.0,
            TailForm::SmallBall => t < 0.1,
            TailForm::Gm | TailForm::Sconcave => true,
        }
    }

    fn upper_tail(&self) -> bool {
        matches!(self, TailForm::Paouris | TailForm::Sconcave)
    }
}

/// Empirical tails of `|X|₂` against one functional form with configured
/// constants. Points outside the stated regime carry `Extrapolated`.
pub fn tail_form_check(
    spec: &DistributionSpec,
    samples: usize,
    form: TailForm,
    t_grid: &[f64],
    constants: TailConstants,
    replicas: usize,
    stream: &RngStream,
) -> Result<TailLedger> {
    spec.require_isotropic()?;
    let r = match (&spec.family, form) {
        (Family::SConcave { r, .. }, _) => Some(*r),
        (_, TailForm::Sconcave) => {
            return Err(Error::InvalidSpec("the s-concave tail form needs an s-concave spec".into()));
        }
        _ => None,
    };
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t >= 0.0)) || t_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("t-grid must be non-empty, non-negative and sorted".into()));
    }
    let parts = row_values(spec, samples, replicas, stream, norm2)?;
    let n = spec.dim as f64;
    let sqrt_n = n.sqrt();
    let total: usize = parts.iter().map(Vec::len).sum();
    let z = z_critical(0.05);

    // counts[k][j]: events of replica k at grid point j.
    let counts: Vec<Vec<usize>> = parts
        .iter()
        .map(|part| t_grid.iter().map(|&t| part.iter().filter(|&&v| form.event(v, t, sqrt_n)).count()).collect())
        .collect();

    let rows: Vec<TailRow> = t_grid
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let count: usize = counts.iter().map(|c| c[j]).sum();
            let empirical = count as f64 / total as f64;
            let (ci_low, ci_high) = wilson_interval(count, total, z);
            let bound = form.bound(t, n, constants, r);
            let mut flags = vec![Flag::UpToConstant];
            if !form.in_regime(t) {
                flags.push(Flag::Extrapolated);
            }
            if count == 0 {
                flags.push(Flag::DegenerateTail);
            }
            let q = t * sqrt_n;
            let markov = (form.upper_tail() && q >= 1.0 && r.is_none_or(|r| q < r)).then(|| {
                // log-sum-exp of q log|X| keeps large q finite.
                let logs: Vec<f64> = parts.iter().flatten().map(|v| q * v.ln()).collect();
                let mx = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = logs.iter().map(|l| (l - mx).exp()).sum();
                (mx + (s / total as f64).ln() - q * q.ln()).exp().min(1.0)
            });
            flags.sort();
            TailRow { t, empirical, ci_low, ci_high, count, bound, pass: empirical <= bound, markov, flags }
        })
        .collect();

    let slope_of = |cs: &dyn Fn(usize) -> usize, size: usize| -> Option<f64> {
        let (mut x, mut y) = (vec![], vec![]);
        for (j, &t) in t_grid.iter().enumerate() {
            let c = cs(j);
            if t > 0.0 && c > 0 {
                x.push(t.ln());
                y.push((c as f64 / size as f64).ln());
            }
        }
        (x.len() >= 3).then(|| ols_fit(&x, &y).0)
    };
    let slope = slope_of(&|j| rows[j].count, total).map(|s| {
        let jk: Vec<f64> = (0..parts.len())
            .filter_map(|k| slope_of(&|j| rows[j].count - counts[k][j], total - parts[k].len()))
            .collect();
        let e = Estimate::with_stderr(s, jackknife_se(&jk), parts.len());
        if jk.len() < parts.len() {
            e.flag(Flag::DegenerateTail)
        } else {
            e
        }
    });
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(TailLedger { form, n: spec.dim, samples: total, constants, rows, slope, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Gauge;

    #[test]
    fn zero_threshold_is_trivial() {
        let spec = DistributionSpec::gaussian(4);
        let l = tail_form_check(&spec, 1600, TailForm::Gm, &[0.0, 0.5], TailConstants::default(), 16, &RngStream::new(1))
            .unwrap();
        assert_eq!(l.rows[0].empirical, 1.0);
        assert!(l.rows[0].pass);
    }

    #[test]
    fn large_deviation_outside_regime_flagged() {
        let spec = DistributionSpec::gaussian(4);
        let l = tail_form_check(&spec, 1600, TailForm::Paouris, &[1.0], TailConstants::default(), 16, &RngStream::new(2))
            .unwrap();
        assert!(l.rows[0].flags.contains(&Flag::Extrapolated));
        assert!(l.rows[0].markov.is_some());
    }

    #[test]
    fn sconcave_needs_sconcave_spec() {
        let spec = DistributionSpec::gaussian(4);
        assert!(tail_form_check(&spec, 100, TailForm::Sconcave, &[1.0], TailConstants::default(), 16, &RngStream::new(3))
            .is_err());
    }

    #[test]
    fn sconcave_tail_is_heavy() {
        let spec = DistributionSpec::isotropic(Family::SConcave { r: 4.0, gauge: Gauge::L2 }, 10);
        let grid: Vec<f64> = (0..6).map(|k| 2.0 * 10f64.powf(k as f64 / 5.0)).collect();
        let k = TailConstants { big_c: 1.0, small_c: 3.0 };
        let l = tail_form_check(&spec, 200_000, TailForm::Sconcave, &grid, k, 16, &RngStream::new(4)).unwrap();
        let s = l.slope.unwrap();
        assert!(s.value < -2.5 && s.value > -5.0, "{s:?}");
        assert!(l.all_pass);
        assert!(l.rows.iter().all(|r| r.markov.is_none()));
    }

    #[test]
    fn form_names_round_trip() {
        for f in [TailForm::Paouris, TailForm::SmallBall, TailForm::Gm, TailForm::Sconcave] {
            assert_eq!(f.to_string().parse::<TailForm>().unwrap(), f);
        }
    }
}
