//! Acceptance criteria 1 to 13.
//!
//! Criteria 1 to 12 run on substreams `criterion-k` of the master seed.
//! Criterion 13 reruns the whole suite on a different worker count and
//! compares the JSON-lines records byte for byte.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::ThreadPoolBuilder;
use serde_json::json;

use logconc_core::clt::{abp_epsilon, direction_survey, marginal_ks};
use logconc_core::covariance::{cov_deviation_batch, deviation_profile};
use logconc_core::distributions::sconcave_params;
use logconc_core::isoperimetry::{
    gaussian_halfspace_profile, halfspace_cheeger, halfspace_expansion, poincare_quotient, PoincareProbe,
};
use logconc_core::moments::{
    proof_chain_check, shell_stats, strong_moment, tail_form_check, weak_strong_check, NormKind, TailConstants,
    TailForm,
};
use logconc_core::numerics::random_unit_vector;
use logconc_core::numerics::special::{ln_gamma, ln_unit_ball_volume, normal_cdf};
use logconc_core::volume::{hull_volume_ratio_for, volume_multiphase, VolumeConfig};
use logconc_core::{BodyDescriptor, DistributionSpec, Error as CoreError, Family, Gauge, Matrix, RngStream, SampleBatch};

use crate::error::CliError;
use crate::experiments::kp_body_study;
use crate::report::Report;

/// Seed used by the acceptance test.
pub const ACCEPTANCE_SEED: u64 = 7;

type Verdict = Result<(bool, String), CliError>;
type CriterionFn = fn(&RngStream, &mut Report) -> Verdict;

pub const CRITERIA: &[(u32, &str, CriterionFn)] = &[
    (1, "chi-square facts", chi_square),
    (2, "cube shell variance", cube_shell),
    (3, "thin-shell trend", thin_shell_trend),
    (4, "variance on unconditional families", unconditional_variance),
    (5, "covariance approximation", covariance_rate),
    (6, "weak and strong moments", weak_strong),
    (7, "proof chain", proof_chain),
    (8, "CLT marginals", clt_marginals),
    (9, "isoperimetry", isoperimetry),
    (10, "ball bodies", ball_bodies),
    (11, "volume", volumes),
    (12, "s-concave", sconcave),
];

pub const DETERMINISM: (u32, &str) = (13, "determinism");

pub fn check_name(id: u32, name: &str) -> String {
    format!("criterion {id:>2}: {name}")
}

fn iso(f: Family, n: usize) -> DistributionSpec {
    DistributionSpec::isotropic(f, n)
}

fn lp(p: f64) -> Family {
    Family::UniformLpBall { p }
}

fn chi_square(s: &RngStream, rep: &mut Report) -> Verdict {
    let st = shell_stats(&DistributionSpec::gaussian(64), 200_000, &[], 16, s)?;
    let v = (st.var_sq.value - 128.0).abs() / 128.0;
    let m = (st.mean_sq.value - 64.0).abs() / 64.0;
    rep.record("criterion-1", json!({ "var_sq": st.var_sq, "mean_sq": st.mean_sq }));
    Ok((
        v <= 0.05 && m <= 0.01,
        format!("Var|X|^2 = {:.3} (rel. error {v:.4}), E|X|^2 = {:.4} (rel. error {m:.5})", st.var_sq.value, st.mean_sq.value),
    ))
}

fn cube_shell(s: &RngStream, rep: &mut Report) -> Verdict {
    let mut pass = true;
    let mut detail = vec![];
    for n in [16, 64] {
        let st = shell_stats(&iso(Family::UniformCube, n), 200_000, &[], 16, &s.fork(&n.to_string()))?;
        let ratio = st.var_sq.value / n as f64;
        pass &= (ratio - 0.8).abs() <= 0.04;
        detail.push(format!("n={n}: {ratio:.4}"));
        rep.record("criterion-2", json!({ "n": n, "var_sq_over_n": ratio, "var_sq": st.var_sq }));
    }
    Ok((pass, format!("Var|X|^2/n {}", detail.join(", "))))
}

fn thin_shell_trend(s: &RngStream, rep: &mut Report) -> Verdict {
    let mut pass = true;
    let mut detail = vec![];
    for (name, fam) in [("cube", Family::UniformCube), ("l1-ball", lp(1.0)), ("product-exp", Family::ProductExponential)] {
        let mut eps = vec![];
        for n in [16, 64, 256] {
            let e = abp_epsilon(&iso(fam.clone(), n), 100_000, 16, &s.fork(name).fork(&n.to_string()))?;
            rep.record("criterion-3", json!({ "family": name, "n": n, "epsilon": e.epsilon }));
            eps.push(e.epsilon.value);
        }
        let decreasing = eps.windows(2).all(|w| w[1] < w[0]);
        pass &= decreasing;
        detail.push(format!("{name} {:.3}>{:.3}>{:.3}", eps[0], eps[1], eps[2]));
    }
    let g = abp_epsilon(&DistributionSpec::gaussian(100), 100_000, 16, &s.fork("gaussian"))?;
    rep.record("criterion-3", json!({ "family": "gaussian", "n": 100, "epsilon": g.epsilon }));
    pass &= (g.epsilon.value - 0.12).abs() <= 0.03;
    detail.push(format!("gaussian n=100 {:.3}", g.epsilon.value));
    Ok((pass, detail.join("; ")))
}

fn unconditional_variance(s: &RngStream, rep: &mut Report) -> Verdict {
    let families = [
        ("cube", Family::UniformCube),
        ("l1-ball", lp(1.0)),
        ("l2-ball", lp(2.0)),
        ("linf-ball", lp(f64::INFINITY)),
        ("product-exp", Family::ProductExponential),
    ];
    let mut worst = (0.0f64, String::new());
    for (name, fam) in families {
        for n in [16, 64, 256] {
            let st = shell_stats(&iso(fam.clone(), n), 50_000, &[], 16, &s.fork(name).fork(&n.to_string()))?;
            rep.record("criterion-4", json!({ "family": name, "n": n, "var_norm": st.var_norm }));
            if st.var_norm.value > worst.0 {
                worst = (st.var_norm.value, format!("{name} n={n}"));
            }
        }
    }
    Ok((worst.0 <= 4.0, format!("max Var|X| = {:.4} ({})", worst.0, worst.1)))
}

/// Sylvester Hadamard matrix: `H_ij = (-1)^{popcount(i & j)}`.
pub fn hadamard(n: usize) -> Matrix {
    assert!(n.is_power_of_two());
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect())
        .collect();
    Matrix::from_rows(&rows).expect("square")
}

fn covariance_rate(s: &RngStream, rep: &mut Report) -> Verdict {
    let grid: Vec<usize> = (9..=14).map(|k| 1usize << k).collect();
    let mut pass = true;
    let mut detail = vec![];
    for (name, fam) in [("gaussian", Family::Gaussian), ("cube", Family::UniformCube), ("l1-ball", lp(1.0))] {
        let prof = deviation_profile(&iso(fam, 32), &grid, 32, &s.fork(name))?;
        pass &= (prof.slope + 0.5).abs() <= 0.1;
        detail.push(format!("{name} slope {:.3}", prof.slope));
        rep.record("criterion-5", json!({ "family": name, "profile": prof }));
    }
    let h = cov_deviation_batch(&SampleBatch::injected(hadamard(32))?)?;
    pass &= h.epsilon == 0.0;
    detail.push(format!("orthogonal batch eps = {:e}", h.epsilon));
    rep.record("criterion-5", json!({ "orthogonal_batch": h }));
    Ok((pass, detail.join("; ")))
}

fn weak_strong(s: &RngStream, rep: &mut Report) -> Verdict {
    let families = [
        ("gaussian", Family::Gaussian),
        ("product-exp", Family::ProductExponential),
        ("cube", Family::UniformCube),
        ("simplex", Family::UniformSimplex),
        ("l1-ball", lp(1.0)),
        ("l2-ball", lp(2.0)),
    ];
    let p_grid = [1.0, 2.0, 4.0, 8.0, 16.0];
    let mut pass = true;
    let mut detail = vec![];
    for (name, fam) in families {
        let prof = weak_strong_check(&iso(fam, 64), &p_grid, NormKind::L2, 100_000, 16, &s.fork(name))?;
        let worst = prof.rows.iter().map(|r| r.ratio.value).fold(0.0f64, f64::max);
        let budget = if name == "gaussian" { 1.1 } else { 2.0 };
        pass &= worst <= budget;
        detail.push(format!("{name} {worst:.3}"));
        rep.record("criterion-6", json!({ "family": name, "profile": prof }));
    }
    Ok((pass, format!("max ratio: {}", detail.join(", "))))
}

fn proof_chain(s: &RngStream, rep: &mut Report) -> Verdict {
    let pc = proof_chain_check(&DistributionSpec::gaussian(4), 2.0, 20_000, 100, 2000, s)?;
    let pass = pc.geometric_holds >= 99 && pc.concentration.implied_constant <= 3.0 && pc.gordon.implied_constant <= 3.0;
    let detail = format!(
        "geometric step {}/100, implied constants {:.3} and {:.3}",
        pc.geometric_holds, pc.concentration.implied_constant, pc.gordon.implied_constant
    );
    rep.record("criterion-7", &pc);
    Ok((pass, detail))
}

fn clt_marginals(s: &RngStream, rep: &mut Report) -> Verdict {
    let n = 100;
    let spec = iso(Family::UniformCube, n);
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let diag = vec![0.1; n];
    let k1 = marginal_ks(&spec, &e1, 100_000, &s.fork("e1"))?;
    let kd = marginal_ks(&spec, &diag, 100_000, &s.fork("diagonal"))?;
    let survey = direction_survey(&spec, 200, 100_000, &[0.03], &s.fork("survey"))?;
    let frac = survey.fraction_below(0.03);
    rep.record("criterion-8", json!({ "e1": k1, "diagonal": kd, "survey": survey }));
    Ok((
        (k1.ks - 0.057).abs() <= 0.01 && kd.ks <= 0.02 && frac >= 0.9,
        format!("KS(e1) = {:.4}, KS(diagonal) = {:.4}, {:.1}% of directions <= 0.03", k1.ks, kd.ks, 100.0 * frac),
    ))
}

fn isoperimetry(s: &RngStream, rep: &mut Report) -> Verdict {
    let n = 4;
    let grid: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.25).collect();
    let g = halfspace_cheeger(&DistributionSpec::gaussian(n), 8, &grid, 400_000, 16, &s.fork("cheeger-gaussian"))?;
    let target = 4.0 * (2.0 * PI).sqrt().recip();
    let e = halfspace_cheeger(&iso(Family::ProductExponential, n), 8, &grid, 400_000, 16, &s.fork("cheeger-laplace"))?;
    let g_rel = (g.value.value - target).abs() / target;
    let e_rel = (e.value.value - 2f64.sqrt()).abs() / 2f64.sqrt();
    let mut pass = g_rel <= 0.08 && e_rel <= 0.10;
    rep.record("criterion-9", json!({ "gaussian": g.value, "product-exp": e.value }));

    let mut worst_q = 0.0f64;
    for (name, fam) in [("gaussian", Family::Gaussian), ("cube", Family::UniformCube), ("product-exp", Family::ProductExponential)] {
        for (j, theta) in [vec![1.0, 0.0, 0.0, 0.0], vec![0.5; 4]].into_iter().enumerate() {
            let probe = PoincareProbe::Linear { theta };
            let q = poincare_quotient(&iso(fam.clone(), n), &probe, 200_000, 16, &s.fork(name).replica(j as u64))?;
            worst_q = worst_q.max((q.quotient.value - 1.0).abs());
            rep.record("criterion-9", json!({ "family": name, "linear": j, "quotient": q.quotient }));
        }
    }
    pass &= worst_q <= 0.02;

    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let mut worst_z = 0.0f64;
    for (i, t) in [-1.0, 0.0, 1.0].into_iter().enumerate() {
        for (j, eps) in [0.1, 0.5].into_iter().enumerate() {
            let profile = gaussian_halfspace_profile(normal_cdf(t), eps)?;
            let st = s.fork("expansion").replica((2 * i + j) as u64);
            let emp = halfspace_expansion(&DistributionSpec::gaussian(n), &e1, t, eps, 200_000, 16, &st)?;
            let z = (emp.value - profile).abs() / emp.stderr;
            worst_z = worst_z.max(z);
            rep.record("criterion-9", json!({ "t": t, "epsilon": eps, "profile": profile, "empirical": emp }));
        }
    }
    pass &= worst_z <= 3.0;
    Ok((
        pass,
        format!(
            "gaussian h = {:.4} ({:.1}%), product-exp h = {:.4} ({:.1}%), linear quotients within {worst_q:.4}, profile within {worst_z:.2} stderr",
            g.value.value,
            100.0 * g_rel,
            e.value.value,
            100.0 * e_rel
        ),
    ))
}

fn ball_bodies(s: &RngStream, rep: &mut Report) -> Verdict {
    let mut pass = true;
    let mut detail = vec![];
    for (name, fam) in [("cube", Family::UniformCube), ("l1-ball", lp(1.0))] {
        let k = kp_body_study(&iso(fam, 3), 2.0, 1e-10, 100, 0, &s.fork(name), rep)?;
        let err = k.max_support_error.expect("uniform spec");
        pass &= err <= 1e-6;
        detail.push(format!("{name} radial error {err:.1e}"));
    }
    let k = kp_body_study(&DistributionSpec::raw(Family::ProductExponential, 2), 3.0, 1e-10, 0, 1000, &s.fork("midpoint"), rep)?;
    pass &= k.midpoint_pass == 1000;
    detail.push(format!("midpoint convexity {}/1000", k.midpoint_pass));
    let body = logconc_core::isotropy::BallBody::new(&DistributionSpec::gaussian(1), 1.0, 1e-12)?;
    let r = body.radial(&[1.0])?;
    // K_1 of the standard normal density: ∫_0^∞ φ / φ(0) = √(π/2).
    let want = (PI / 2.0).sqrt();
    pass &= (r - want).abs() <= 1e-6;
    detail.push(format!("gaussian n=1 radius {r:.8}"));
    rep.record("criterion-10", json!({ "gaussian_radius": r, "oracle": want }));
    Ok((pass, detail.join("; ")))
}

fn shoelace(points: &[Vec<f64>]) -> f64 {
    // Points on the circle are all vertices of their hull, so sort by angle.
    let mut v: Vec<&Vec<f64>> = points.iter().collect();
    v.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
    let k = v.len();
    0.5 * (0..k).map(|i| v[i][0] * v[(i + 1) % k][1] - v[(i + 1) % k][0] * v[i][1]).sum::<f64>().abs()
}

fn volumes(s: &RngStream, rep: &mut Report) -> Verdict {
    let mut pass = true;
    let mut detail = vec![];
    let bodies = [
        BodyDescriptor::Cube { dim: 4, half_width: 1.0 },
        BodyDescriptor::Ball { dim: 3, radius: 1.0 },
        BodyDescriptor::Simplex { dim: 3 },
    ];
    for (i, desc) in bodies.into_iter().enumerate() {
        let body = desc.build()?;
        let exact = body.exact_volume().expect("built-in body");
        let t0 = Instant::now();
        let est = volume_multiphase(&body, &VolumeConfig::default(), &s.fork("volume").replica(i as u64))?;
        let secs = t0.elapsed().as_secs_f64();
        let rel = (est.volume.value - exact).abs() / exact;
        pass &= rel <= 0.10 && secs <= 180.0;
        rep.oracle_calls += est.oracle_calls;
        detail.push(format!("{desc} {:.4} vs {exact:.4}", est.volume.value));
        rep.record("criterion-11", json!({ "body": desc.to_string(), "estimate": est, "exact": exact }));
    }

    let pts: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            let mut e = vec![0.0; 3];
            e[i] = 1.0;
            e
        })
        .collect();
    let cross = hull_volume_ratio_for(&pts, 100_000, 16, &s.fork("cross-polytope"))?;
    // Vol(B_1^3) / Vol(B_2^3) = (8/6) / (4π/3).
    let want = ((8f64.ln() - ln_gamma(4.0)) - ln_unit_ball_volume(3)).exp().powf(1.0 / 3.0);
    pass &= (cross.root.value - want).abs() <= 0.02;
    detail.push(format!("cross-polytope root {:.4} vs {want:.4}", cross.root.value));

    let mut rng = s.fork("planar-points").rng();
    let planar: Vec<Vec<f64>> = (0..4).map(|_| random_unit_vector(2, &mut rng)).collect();
    let sym: Vec<Vec<f64>> = planar.iter().flat_map(|p| [p.clone(), vec![-p[0], -p[1]]]).collect();
    let area = shoelace(&sym);
    let h = hull_volume_ratio_for(&planar, 200_000, 16, &s.fork("planar"))?;
    let rel = (h.ratio.value * PI - area).abs() / area;
    pass &= rel <= 0.02;
    detail.push(format!("planar area {:.4} vs shoelace {area:.4}", h.ratio.value * PI));
    rep.record("criterion-11", json!({ "cross_polytope": cross, "planar": h, "shoelace": area }));
    Ok((pass, detail.join("; ")))
}

fn sconcave(s: &RngStream, rep: &mut Report) -> Verdict {
    let mut pass = true;
    let mut detail = vec![];
    for (n, r, gamma) in [(3usize, 1.0, -0.25), (2, 2.0, -0.25)] {
        let p = sconcave_params(n, r)?;
        let exact = p.s == -1.0 / r && p.beta == n as f64 + r && p.gamma == gamma;
        pass &= exact;
        rep.record("criterion-12", json!({ "params": p }));
    }
    detail.push(format!("parameters exact: {pass}"));

    let spec = iso(Family::SConcave { r: 4.0, gauge: Gauge::L2 }, 10);
    let grid: Vec<f64> = (0..6).map(|k| 2.0 * 10f64.powf(k as f64 / 5.0)).collect();
    let k = TailConstants { big_c: 1.0, small_c: 3.0 };
    let ledger = tail_form_check(&spec, 1_000_000, TailForm::Sconcave, &grid, k, 16, &s.fork("tail"))?;
    let slope = ledger.slope.as_ref().map_or(f64::NAN, |e| e.value);
    pass &= (slope + 4.0).abs() <= 0.5 && ledger.all_pass;
    detail.push(format!("tail slope {slope:.3}, c = 3 bound dominates: {}", ledger.all_pass));
    rep.record("criterion-12", &ledger);

    let refused = [4.0, 6.0].iter().all(|&p| {
        matches!(strong_moment(&spec, p, 1000, 16, &s.fork("refuse")), Err(CoreError::MomentDoesNotExist { .. }))
    });
    pass &= refused;
    detail.push(format!("p >= r refused: {refused}"));
    Ok((pass, detail.join("; ")))
}

/// Criteria 1 to 12 on a pool of `workers` threads.
pub fn run_suite(seed: u64, workers: usize) -> Result<Report, CliError> {
    let pool = ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let root = RngStream::new(seed).fork("accept");
    Ok(pool.install(|| {
        let mut rep = Report::new("accept");
        for &(id, name, f) in CRITERIA {
            let s = root.fork(&format!("criterion-{id}"));
            let verdict = rep.timed(&check_name(id, name), |rep| f(&s, rep));
            match verdict {
                Ok((pass, detail)) => rep.check(check_name(id, name), pass, detail),
                Err(e) => rep.check(check_name(id, name), false, format!("error: {e}")),
            }
        }
        rep
    }))
}

/// The full suite at one worker, then again at eight for criterion 13.
pub fn run_acceptance(seed: u64) -> Result<Report, CliError> {
    let mut first = run_suite(seed, 1)?;
    let second = run_suite(seed, 8)?;
    let (a, b) = (first.jsonl(), second.jsonl());
    let same = a == b && first.tables() == second.tables();
    let (id, name) = DETERMINISM;
    first.check(check_name(id, name), same, format!("{} record bytes at 1 and 8 workers, identical: {same}", a.len()));
    Ok(first)
}
