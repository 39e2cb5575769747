//! One function per subcommand, and the catalog printed by `list`.

use std::fmt::Write as _;

use rand::Rng;
use serde_json::json;

use logconc_core::clt::{abp_epsilon, classical_be_bound, direction_survey, marginal_ks};
use logconc_core::covariance::{cov_deviation_batch, deviation_profile, sample_complexity_curve};
use logconc_core::distributions::{log_density, midpoint_logconcavity, sample, sconcave_params};
use logconc_core::isoperimetry::{
    boundary_measure, gaussian_halfspace_profile, halfspace_expansion, isoperimetry_report, TestSet,
};
use logconc_core::isotropy::{
    empirical_isotropy, isotropic_constant_body, isotropic_constant_density, mean_and_covariance, section_volume,
    BallBody,
};
use logconc_core::moments::{
    borell_growth, default_p_grid, h_condition_ratio, proof_chain_check, shell_stats, strong_moment, tail_form_check,
    weak_moment, weak_strong_check, HGauge, NormKind, TailForm,
};
use logconc_core::numerics::special::{ln_unit_ball_volume, normal_cdf};
use logconc_core::numerics::stats::MIN_REPLICAS;
use logconc_core::numerics::{norm2, operator_norm_sym, random_unit_vector};
use logconc_core::volume::{hull_volume_ratio, hull_volume_ratio_for, round_body, volume_multiphase, VolumeConfig};
use logconc_core::{BodyDescriptor, DistributionSpec, Family, Matrix, RngStream};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::Report;

pub type Outcome = Result<(), CliError>;
type Run = fn(&ExperimentConfig, &RngStream, &mut Report) -> Outcome;

pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    pub required: &'static [&'static str],
    /// Library operations exercised; each appears under exactly one entry.
    pub operations: &'static [&'static str],
    run: Option<Run>,
}

pub const CATALOG: &[Experiment] = &[
    Experiment {
        name: "sample",
        about: "draw samples, whiten them, check midpoint log-concavity and isotropic constants",
        required: &["seed", "spec.family", "dims"],
        operations: &[
            "sample",
            "log_density",
            "midpoint_logconcavity",
            "sconcave_params",
            "empirical_isotropy",
            "isotropic_constant_body",
            "isotropic_constant_density",
        ],
        run: Some(run_sample),
    },
    Experiment {
        name: "shell",
        about: "thin-shell statistics of |X|",
        required: &["seed", "spec.family", "dims"],
        operations: &["shell_stats"],
        run: Some(run_shell),
    },
    Experiment {
        name: "moments",
        about: "strong and weak moments, marginal growth, tail forms and projection ratios",
        required: &["seed", "spec.family", "dims"],
        operations: &["strong_moment", "weak_moment", "borell_growth", "tail_form_check", "h_condition_ratio"],
        run: Some(run_moments),
    },
    Experiment {
        name: "weak-strong",
        about: "ratio of strong moments to first moment plus weak moment along a p-grid",
        required: &["seed", "spec.family", "dims"],
        operations: &["weak_strong_check"],
        run: Some(run_weak_strong),
    },
    Experiment {
        name: "cov-approx",
        about: "operator-norm error of the empirical covariance and sample-complexity curves",
        required: &["seed", "spec.family", "dims", "samples"],
        operations: &["cov_deviation", "sample_complexity_curve", "operator_norm_sym"],
        run: Some(run_cov_approx),
    },
    Experiment {
        name: "clt",
        about: "Kolmogorov distance of marginals to N(0,1) and random-direction surveys",
        required: &["seed", "spec.family", "dims"],
        operations: &["marginal_ks", "direction_survey", "classical_be_bound", "ks_distance"],
        run: Some(run_clt),
    },
    Experiment {
        name: "abp",
        about: "thin-shell width: smallest eps with P(| |X|/sqrt(n) - 1 | >= eps) <= eps",
        required: &["seed", "spec.family", "dims"],
        operations: &["abp_epsilon"],
        run: Some(run_abp),
    },
    Experiment {
        name: "isoperimetry",
        about: "boundary measures, half-space Cheeger estimate, lower bounds and Poincare quotients",
        required: &["seed", "spec.family", "dims"],
        operations: &[
            "boundary_measure",
            "halfspace_cheeger",
            "cheeger_lower_bounds",
            "poincare_quotient",
            "gaussian_halfspace_profile",
        ],
        run: Some(run_isoperimetry),
    },
    Experiment {
        name: "kp-body",
        about: "radial function and midpoint convexity of the ball body K_p(f)",
        required: &["seed", "spec.family", "dims"],
        operations: &["ball_body_radial", "integrate_halfline"],
        run: Some(run_kp_body),
    },
    Experiment {
        name: "sections",
        about: "central section volumes of a built-in body",
        required: &["seed", "body"],
        operations: &["section_volume"],
        run: Some(run_sections),
    },
    Experiment {
        name: "volume",
        about: "rounding and multiphase Monte-Carlo volume of a built-in body",
        required: &["seed", "body"],
        operations: &["hit_and_run_step", "round_body", "volume_multiphase"],
        run: Some(run_volume),
    },
    Experiment {
        name: "hull",
        about: "volume of the absolute convex hull of points relative to the unit ball",
        required: &["seed", "dims"],
        operations: &["hull_volume_ratio"],
        run: Some(run_hull),
    },
    Experiment {
        name: "proof-check",
        about: "ledgers for the concentration, comparison and geometric steps of the moment argument",
        required: &["seed", "spec.family", "dims"],
        operations: &["proof_chain_check"],
        run: Some(run_proof_check),
    },
    Experiment {
        name: "accept",
        about: "the acceptance suite, criteria 1 to 13",
        required: &["seed"],
        operations: &["run"],
        run: None,
    },
    Experiment {
        name: "list",
        about: "this catalog",
        required: &[],
        operations: &["list_experiments"],
        run: None,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    CATALOG.iter().find(|e| e.name == name)
}

impl Experiment {
    pub fn run(&self, cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
        match self.run {
            Some(f) => f(cfg, stream, rep),
            None => Err(CliError::Config(format!("{} is not a data experiment", self.name))),
        }
    }
}

/// Catalog text: one block per subcommand, in a fixed order.
pub fn list_experiments() -> String {
    let mut s = String::new();
    for e in CATALOG {
        let _ = writeln!(s, "{:<13} {}", e.name, e.about);
        if !e.required.is_empty() {
            let _ = writeln!(s, "{:<13}   required: {}", "", e.required.join(", "));
        }
        let _ = writeln!(s, "{:<13}   operations: {}", "", e.operations.join(", "));
    }
    s
}

// Shared helpers.

fn dims(cfg: &ExperimentConfig) -> Result<Vec<usize>, CliError> {
    let d: Vec<usize> = cfg.require_list("dims")?;
    if d.contains(&0) {
        return Err(CliError::Config("dimensions must be positive".into()));
    }
    Ok(d)
}

fn samples(cfg: &ExperimentConfig, default: usize) -> Result<usize, CliError> {
    Ok(cfg.list::<usize>("samples")?.map_or(default, |v| v[0]))
}

pub fn replicas(cfg: &ExperimentConfig) -> Result<usize, CliError> {
    let r: usize = cfg.value_or("replicas", MIN_REPLICAS)?;
    if r < MIN_REPLICAS {
        return Err(CliError::Config(format!("replicas must be at least {MIN_REPLICAS}, got {r}")));
    }
    Ok(r)
}

fn dim_stream(stream: &RngStream, n: usize) -> RngStream {
    stream.fork(&format!("n={n}"))
}

fn axis(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

fn diagonal(n: usize) -> Vec<f64> {
    vec![1.0 / (n as f64).sqrt(); n]
}

fn p_grid(cfg: &ExperimentConfig, n: usize) -> Result<Vec<f64>, CliError> {
    Ok(cfg.list("p-grid")?.unwrap_or_else(|| default_p_grid(n)))
}

fn theta_or(cfg: &ExperimentConfig, n: usize, default: Vec<f64>) -> Result<Vec<f64>, CliError> {
    match cfg.list::<f64>("theta")? {
        None => Ok(default),
        Some(t) if t.len() != n => Err(CliError::Config(format!("theta has {} entries, expected {n}", t.len()))),
        Some(t) => {
            let nt = norm2(&t);
            if !(nt > 0.0) {
                return Err(CliError::Config("theta must be non-zero".into()));
            }
            Ok(t.iter().map(|v| v / nt).collect())
        }
    }
}

fn run_sample(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let n_samples = samples(cfg, 1000)?;
    let pairs: usize = cfg.value_or("pairs", 1000)?;
    for n in dims(cfg)? {
        let spec = cfg.spec(n)?;
        let s = dim_stream(stream, n);
        let batch = sample(&spec, n_samples, &s)?;
        let (mean, cov) = mean_and_covariance(&batch.data);
        let cov_dev = operator_norm_sym(&cov.sub(&Matrix::identity(n))?, 1e-12)?;
        let whitening = empirical_isotropy(&batch)?;
        let pair_list: Vec<(Vec<f64>, Vec<f64>)> = (0..(batch.len() / 2).min(pairs))
            .map(|i| (batch.row(2 * i).to_vec(), batch.row(2 * i + 1).to_vec()))
            .collect();
        let verdict = midpoint_logconcavity(&spec, &pair_list)?;
        let lf = isotropic_constant_density(&spec).ok();
        let lk = if spec.family.is_uniform() {
            isotropic_constant_body(&spec, None, &s.fork("isotropic-constant")).ok()
        } else {
            None
        };
        let params = match spec.family {
            Family::SConcave { r, .. } => Some(sconcave_params(n, r)?),
            _ => None,
        };
        rep.record(
            "sample",
            json!({
                "spec": spec.id(),
                "n": n,
                "samples": batch.len(),
                "mean_norm": norm2(&mean),
                "covariance_deviation": cov_dev,
                "whitening_condition": whitening.condition_number(),
                "log_density_at_origin": log_density(&spec, &vec![0.0; n]).ok(),
                "isotropic_constant_density": lf,
                "isotropic_constant_body": lk,
                "sconcave": params,
                "midpoint_pass": verdict.pass,
                "midpoint_checked": verdict.checked,
            }),
        );
        if spec.family.is_log_concave() {
            rep.check(format!("midpoint log-concavity n={n}"), verdict.pass, format!("{} pairs", verdict.checked));
        }
        let mut csv = (1..=n).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",") + "\n";
        for row in batch.rows().take(10_000) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        rep.table(&format!("samples_n{n}"), csv);
    }
    Ok(())
}

fn run_shell(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let t_grid = cfg.list_or("t-grid", vec![0.05, 0.1, 0.2, 0.5])?;
    let n_samples = samples(cfg, 100_000)?;
    let r = replicas(cfg)?;
    let mut csv = String::from("n,samples,mean_norm,var_norm,mean_sq,var_sq,var_sq_over_mean_sq,fourth_to_second\n");
    for n in dims(cfg)? {
        let spec = cfg.spec(n)?;
        let st = shell_stats(&spec, n_samples, &t_grid, r, &dim_stream(stream, n))?;
        let _ = writeln!(
            csv,
            "{n},{},{},{},{},{},{},{}",
            st.samples,
            st.mean_norm.value,
            st.var_norm.value,
            st.mean_sq.value,
            st.var_sq.value,
            st.var_sq_over_mean_sq.value,
            st.fourth_to_second.value
        );
        rep.record("shell", &st);
    }
    rep.table("shell", csv);
    Ok(())
}

fn run_moments(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let n_samples = samples(cfg, 100_000)?;
    let r = replicas(cfg)?;
    let mut csv = String::from("n,p,strong,strong_ci_low,strong_ci_high,weak,weak_ci_low,weak_ci_high\n");
    for n in dims(cfg)? {
        let spec = cfg.spec(n)?;
        let s = dim_stream(stream, n);
        for (i, &p) in p_grid(cfg, n)?.iter().enumerate() {
            let strong = strong_moment(&spec, p, n_samples, r, &s.fork("strong").replica(i as u64))?;
            let weak = weak_moment(&spec, p, n_samples, r, &s.fork("weak").replica(i as u64))?;
            let _ = writeln!(
                csv,
                "{n},{p},{},{},{},{},{},{}",
                strong.value, strong.ci_low, strong.ci_high, weak.value.value, weak.value.ci_low, weak.value.ci_high
            );
            rep.record("moment", json!({ "n": n, "p": p, "strong": strong, "weak": weak }));
        }
        if spec.family.is_log_concave() {
            let z = theta_or(cfg, n, axis(n, 0))?;
            let table = borell_growth(&spec, &z, &p_grid(cfg, n)?, n_samples, r, &s.fork("borell"))?;
            rep.record("borell", &table);
        }
        if let Some(form) = cfg.value::<String>("form")? {
            let form: TailForm = form.parse()?;
            let t_grid: Vec<f64> = cfg.require_list("t-grid")?;
            let ledger = tail_form_check(&spec, n_samples, form, &t_grid, cfg.constants()?, r, &s.fork("tail"))?;
            rep.check(format!("{form} tail bound n={n}"), ledger.all_pass, format!("{} grid points", ledger.rows.len()));
            rep.record("tail", &ledger);
        }
        if let Some(hp) = cfg.value::<f64>("h-p")? {
            let m = hp.ceil() as usize;
            if m == 0 || m > n {
                return Err(CliError::Config(format!("h-p = {hp} needs 1 <= ceil(h-p) <= n")));
            }
            let gauge = match cfg.value_or::<String>("h-gauge", "euclidean".into())?.as_str() {
                "euclidean" => HGauge::Euclidean,
                "forms" => HGauge::Forms,
                g => return Err(CliError::Config(format!("unknown h-gauge {g:?}"))),
            };
            let a = Matrix::from_rows(&(0..m).map(|i| axis(n, i)).collect::<Vec<_>>())?;
            let h = h_condition_ratio(&spec, hp, &a, gauge, n_samples, r, &s.fork("h-condition"))?;
            rep.record("h-condition", &h);
        }
    }
    rep.table("moments", csv);
    Ok(())
}

fn run_weak_strong(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let n_samples = samples(cfg, 100_000)?;
    let r = replicas(cfg)?;
    let norm: NormKind = cfg.value_or::<String>("norm", "l2".into())?.parse()?;
    let budget: f64 = cfg.value_or("budget", 2.0)?;
    let mut csv = String::from("n,p,strong,weak,ratio,ratio_ci_low,ratio_ci_high\n");
    for n in dims(cfg)? {
        let spec = cfg.spec(n)?;
        let profile = weak_strong_check(&spec, &p_grid(cfg, n)?, norm, n_samples, r, &dim_stream(stream, n))?;
        let worst = profile.rows.iter().map(|row| row.ratio.value).fold(0.0f64, f64::max);
        for row in &profile.rows {
            let _ = writeln!(
                csv,
                "{n},{},{},{},{},{},{}",
                row.p, row.strong.value, row.weak.value.value, row.ratio.value, row.ratio.ci_low, row.ratio.ci_high
            );
        }
        rep.check(format!("weak/strong ratio n={n}"), worst <= budget, format!("max ratio {worst:.4} vs budget {budget}"));
        rep.record("weak-strong", &profile);
    }
    rep.table("weak_strong", csv);
    Ok(())
}

fn run_cov_approx(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let grid: Vec<usize> = cfg.require_list("samples")?;
    let r = replicas(cfg)?;
    let eta: f64 = cfg.value_or("eta", 0.1)?;
    let mut csv = String::from("n,samples,median,mean,mean_ci_low,mean_ci_high\n");
    for n in dims(cfg)? {
        let spec = cfg.spec(n)?;
        let s = dim_stream(stream, n);
        let profile = deviation_profile(&spec, &grid, r, &s.fork("profile"))?;
        for p in &profile.points {
            let _ = writeln!(csv, "{n},{},{},{},{},{}", p.samples, p.median, p.mean.value, p.mean.ci_low, p.mean.ci_high);
        }
        rep.record("deviation-profile", &profile);

        // The Gram-based deviation against a direct operator norm of Σ̂ - I.
        let last = *grid.last().expect("non-empty grid");
        let batch = sample(&spec, last, &s.fork("cross-check"))?;
        let gram = cov_deviation_batch(&batch)?;
        let second = batch.data.transpose().matmul(&batch.data)?.scale(1.0 / last as f64);
        let direct = operator_norm_sym(&second.sub(&Matrix::identity(n))?, 1e-12)?;
        rep.record("operator-norm", json!({ "n": n, "samples": last, "gram": gram, "direct": direct }));

        if let Some(eps) = cfg.list::<f64>("eps-grid")? {
            let curve = sample_complexity_curve(&spec, &eps, eta, grid[0], last, r.max(32), &s.fork("curve"))?;
            rep.table(&format!("sample_complexity_n{n}"), curve.to_csv());
            rep.record("sample-complexity", &curve);
        }
    }
    rep.table("cov_deviation", csv);
    Ok(())
}

fn run_clt(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let n_samples = samples(cfg, 100_000)?;
    let directions: usize = cfg.value_or("directions", 200)?;
    let thresholds = cfg.list_or("thresholds", vec![0.03])?;
    let tau: f64 = cfg.value_or("tau", 1.0)?;
    for n in dims(cfg)? {
        let spec = cfg.spec(n)?;
        let s = dim_stream(stream, n);
        let mut named = vec![("e1", axis(n, 0)), ("diagonal", diagonal(n))];
        if cfg.get("theta").is_some() {
            named.push(("theta", theta_or(cfg, n, vec![])?));
        }
        for (name, theta) in &named {
            let ks = marginal_ks(&spec, theta, n_samples, &s.fork(name))?;
            let be = classical_be_bound(theta, tau)?;
            rep.record("marginal-ks", json!({ "n": n, "direction": name, "ks": ks, "be_bound": be, "tau": tau }));
        }
        let survey = direction_survey(&spec, directions, n_samples, &thresholds, &s.fork("survey"))?;
        rep.table(&format!("clt_survey_n{n}"), survey.to_csv(&thresholds));
        rep.record("direction-survey", &survey);
    }
    Ok(())
}

fn run_abp(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let n_samples = samples(cfg, 100_000)?;
    let r = replicas(cfg)?;
    let mut csv = String::from("n,epsilon,ci_low,ci_high\n");
    for n in dims(cfg)? {
        let spec = cfg.spec(n)?;
        let e = abp_epsilon(&spec, n_samples, r, &dim_stream(stream, n))?;
        let _ = writeln!(csv, "{n},{},{},{}", e.epsilon.value, e.epsilon.ci_low, e.epsilon.ci_high);
        rep.record("abp", &e);
    }
    rep.table("abp", csv);
    Ok(())
}

fn run_isoperimetry(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let n_samples = samples(cfg, 200_000)?;
    let r = replicas(cfg)?;
    let t_grid = cfg.list_or("t-grid", (-8..=8).map(|k| k as f64 * 0.25).collect())?;
    let eps: f64 = cfg.value_or("epsilon", 0.01)?;
    for n in dims(cfg)? {
        let spec = cfg.spec(n)?;
        let s = dim_stream(stream, n);
        let directions: usize = cfg.value_or("directions", n + 8)?;
        let shell = shell_stats(&spec, n_samples, &[], r, &s.fork("shell"))?;
        let iso = isoperimetry_report(&spec, &shell, directions, &t_grid, n_samples, r, &s.fork("report"))?;
        rep.table(&format!("cheeger_n{n}"), iso.halfspace.to_csv());
        rep.record("isoperimetry", &iso);

        let e1 = axis(n, 0);
        let half = TestSet::Halfspace { theta: e1.clone(), t: 0.0 };
        let ball = TestSet::Ball { radius: (n as f64).sqrt() };
        for (name, set) in [("halfspace", half), ("ball", ball)] {
            let b = boundary_measure(&spec, &set, eps, n_samples, r, &s.fork(name))?;
            rep.record("boundary-measure", json!({ "n": n, "set": set, "measure": b }));
        }

        let gaussian = spec.family == Family::Gaussian;
        for (i, &t) in [-1.0, 0.0, 1.0].iter().enumerate() {
            for (j, &e) in [0.1, 0.5].iter().enumerate() {
                let profile = gaussian_halfspace_profile(normal_cdf(t), e)?;
                let stream_ij = s.fork("expansion").replica((2 * i + j) as u64);
                let emp = halfspace_expansion(&spec, &e1, t, e, n_samples, r, &stream_ij)?;
                let z = (emp.value - profile).abs() / emp.stderr;
                if gaussian {
                    rep.check(format!("gaussian profile n={n} t={t} eps={e}"), z <= 3.0, format!("{z:.2} stderr"));
                }
                rep.record("expansion", json!({ "n": n, "t": t, "epsilon": e, "profile": profile, "empirical": emp }));
            }
        }
    }
    Ok(())
}

/// Radial function of the support of a uniform spec, by bisection on
/// `log_density > -inf`. Used as an oracle for `K_p(1_K) = K`.
fn support_radial(spec: &DistributionSpec, theta: &[f64]) -> Result<f64, CliError> {
    let inside = |t: f64| -> Result<bool, CliError> {
        let x: Vec<f64> = theta.iter().map(|v| t * v).collect();
        Ok(log_density(spec, &x)? > f64::NEG_INFINITY)
    };
    let mut hi = 1.0;
    while inside(hi)? {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub struct KpSummary {
    pub max_support_error: Option<f64>,
    pub midpoint_pass: usize,
    pub midpoint_pairs: usize,
}

/// Radial table, the support comparison for uniform specs, and midpoint
/// convexity on pairs of points drawn inside the body.
pub fn kp_body_study(
    spec: &DistributionSpec,
    p: f64,
    tol: f64,
    directions: usize,
    pairs: usize,
    stream: &RngStream,
    rep: &mut Report,
) -> Result<KpSummary, CliError> {
    let n = spec.dim;
    let body = BallBody::new(spec, p, tol)?;
    let mut rng = stream.fork("directions").rng();
    let thetas: Vec<Vec<f64>> = if n == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        (0..directions).map(|_| random_unit_vector(n, &mut rng)).collect()
    };
    let table = body.radial_table(&thetas)?;
    let max_support_error = if spec.family.is_uniform() {
        let mut worst = 0.0f64;
        for (theta, r) in &table.rows {
            worst = worst.max((r - support_radial(spec, theta)?).abs());
        }
        Some(worst)
    } else {
        None
    };
    rep.table(&format!("kp_radial_n{n}_p{p}"), table.to_csv());
    let mut rng = stream.fork("pairs").rng();
    let point = |rng: &mut _| -> Result<Vec<f64>, CliError> {
        let u = random_unit_vector(n, rng);
        let radius = body.radial(&u)?;
        let scale: f64 = rand_scale(rng, n) * radius;
        Ok(u.iter().map(|v| v * scale).collect())
    };
    let mut midpoint_pass = 0;
    for _ in 0..pairs {
        let x = point(&mut rng)?;
        let y = point(&mut rng)?;
        let m: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        if body.contains(&m)? {
            midpoint_pass += 1;
        }
    }
    rep.record(
        "kp-body",
        json!({
            "spec": spec.id(),
            "p": p,
            "radial": table.rows.iter().map(|(t, r)| json!({ "theta": t, "r": r })).collect::<Vec<_>>(),
            "max_support_error": max_support_error,
            "midpoint_pass": midpoint_pass,
            "midpoint_pairs": pairs,
        }),
    );
    Ok(KpSummary { max_support_error, midpoint_pass, midpoint_pairs: pairs })
}

/// `U^{1/n}` shrunk slightly so points stay off the boundary.
fn rand_scale<R: Rng + ?Sized>(rng: &mut R, n: usize) -> f64 {
    rng.random::<f64>().powf(1.0 / n as f64) * (1.0 - 1e-6)
}

fn run_kp_body(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let p: f64 = cfg.value_or("order", 1.0)?;
    let tol: f64 = cfg.value_or("tol", 1e-10)?;
    let directions: usize = cfg.value_or("directions", 100)?;
    let pairs: usize = cfg.value_or("pairs", 1000)?;
    for n in dims(cfg)? {
        let spec = cfg.spec(n)?;
        let k = kp_body_study(&spec, p, tol, directions, pairs, &dim_stream(stream, n), rep)?;
        if let Some(err) = k.max_support_error {
            rep.check(format!("K_p equals the support n={n}"), err <= 1e-6, format!("max error {err:.2e}"));
        }
        if spec.family.is_log_concave() {
            rep.check(
                format!("K_p midpoint convexity n={n}"),
                k.midpoint_pass == k.midpoint_pairs,
                format!("{}/{}", k.midpoint_pass, k.midpoint_pairs),
            );
        }
    }
    Ok(())
}

fn run_sections(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let desc = cfg.body()?;
    let body = desc.build()?;
    let n = body.dim();
    let directions: usize = cfg.value_or("directions", 4)?;
    let n_samples = samples(cfg, 200_000)?;
    let r = replicas(cfg)?;
    let mut rng = stream.fork("directions").rng();
    let mut thetas = vec![axis(n, 0)];
    while thetas.len() < directions {
        thetas.push(random_unit_vector(n, &mut rng));
    }
    let exact = match desc {
        BodyDescriptor::Ball { radius, .. } => Some((ln_unit_ball_volume(n - 1) + (n - 1) as f64 * radius.ln()).exp()),
        _ => None,
    };
    let mut csv = String::from("direction,volume,ci_low,ci_high\n");
    for (j, theta) in thetas.iter().enumerate() {
        let v = section_volume(&body, theta, n_samples, r, &stream.fork("sections").replica(j as u64))?;
        let _ = writeln!(csv, "{j},{},{},{}", v.value, v.ci_low, v.ci_high);
        if let Some(e) = exact {
            rep.check(format!("ball section {j}"), v.within_sigmas(e, 4.0, 0.0), format!("{} vs {e}", v.value));
        }
        rep.record("section", json!({ "body": desc.to_string(), "theta": theta, "volume": v, "exact": exact }));
    }
    rep.table("sections", csv);
    Ok(())
}

pub fn volume_config(cfg: &ExperimentConfig) -> Result<VolumeConfig, CliError> {
    let d = VolumeConfig::default();
    Ok(VolumeConfig {
        epsilon: cfg.value_or("epsilon", d.epsilon)?,
        eta: cfg.value_or("eta", d.eta)?,
        chains: cfg.value_or("chains", d.chains)?,
        max_oracle_calls: cfg.value_or("max-oracle-calls", d.max_oracle_calls)?,
        ..d
    })
}

fn run_volume(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let desc = cfg.body()?;
    let body = desc.build()?;
    let n = body.dim();
    let tolerance: f64 = cfg.value_or("budget", 0.1)?;
    let rounding = round_body(&body, 40 * n * n + 200, n, &stream.fork("round"))?;
    rep.oracle_calls += rounding.oracle_calls;
    rep.record("rounding", &rounding);
    let est = volume_multiphase(&body, &volume_config(cfg)?, &stream.fork("volume"))?;
    rep.oracle_calls += est.oracle_calls;
    if let Some(exact) = body.exact_volume() {
        let rel = (est.volume.value - exact).abs() / exact;
        rep.check(format!("volume of {desc}"), rel <= tolerance, format!("{} vs {exact}, relative error {rel:.4}", est.volume.value));
    }
    rep.record("volume", json!({ "body": desc.to_string(), "estimate": est, "exact": body.exact_volume() }));
    Ok(())
}

fn run_hull(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let trials: usize = cfg.value_or("trials", 100_000)?;
    let r = replicas(cfg)?;
    for n in dims(cfg)? {
        let s = dim_stream(stream, n);
        let h = match cfg.get("points") {
            Some("cross-polytope") => {
                let pts: Vec<Vec<f64>> = (0..n).map(|i| axis(n, i)).collect();
                hull_volume_ratio_for(&pts, trials, r, &s)?
            }
            _ => hull_volume_ratio(n, cfg.value_or("points", 2 * n)?, trials, &s)?,
        };
        rep.check(format!("hull inside ball n={n}"), h.ratio.value <= 1.0, format!("ratio {}", h.ratio.value));
        rep.record("hull", json!({ "ratio": h, "estimate_over_bound": h.root.value / h.bound }));
    }
    Ok(())
}

fn run_proof_check(cfg: &ExperimentConfig, stream: &RngStream, rep: &mut Report) -> Outcome {
    let p = cfg.list::<f64>("p-grid")?.map_or(2.0, |v| v[0]);
    let n_samples = samples(cfg, 20_000)?;
    let projections: usize = cfg.value_or("projections", 100)?;
    let gvec: usize = cfg.value_or("gaussian-vectors", 2000)?;
    let budget: f64 = cfg.value_or("budget", 3.0)?;
    for n in dims(cfg)? {
        let spec = cfg.spec(n)?;
        let pc = proof_chain_check(&spec, p, n_samples, projections, gvec, &dim_stream(stream, n))?;
        let need = (0.99 * projections as f64).ceil() as usize;
        rep.check(format!("geometric step n={n}"), pc.geometric_holds >= need, format!("{}/{projections}", pc.geometric_holds));
        for (name, l) in [("concentration", &pc.concentration), ("comparison", &pc.gordon)] {
            rep.check(
                format!("{name} step n={n}"),
                l.implied_constant <= budget,
                format!("implied constant {:.4}", l.implied_constant),
            );
        }
        rep.record("proof-chain", &pc);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_are_stable_and_unique() {
        let text = list_experiments();
        for key in ["shell", "cov-approx", "clt", "volume"] {
            assert!(text.contains(key));
        }
        let mut ops: Vec<&str> = CATALOG.iter().flat_map(|e| e.operations.iter().copied()).collect();
        let total = ops.len();
        ops.sort_unstable();
        ops.dedup();
        assert_eq!(ops.len(), total, "an operation is listed twice");
        assert_eq!(text, list_experiments());
    }

    #[test]
    fn support_oracle_on_cube() {
        let spec = DistributionSpec::raw(Family::UniformCube, 2);
        let r = support_radial(&spec, &[0.6, 0.8]).unwrap();
        assert!((r - 1.25).abs() < 1e-12);
    }
}
