use logconc_core::distributions::{midpoint_logconcavity, sample};
use logconc_core::moments::{shell_stats, weak_strong_check, NormKind};
use logconc_core::numerics::linalg::gram_schmidt_columns;
use logconc_core::numerics::{ks_critical_value, ks_distance_unsorted};
use logconc_core::{AffineMap, DistributionSpec, Family, Gauge, Matrix, RngStream};
use rand::Rng;
use rand_distr::StandardNormal;

fn log_concave_families() -> Vec<Family> {
    vec![
        Family::Gaussian,
        Family::ProductExponential,
        Family::UniformCube,
        Family::UniformSimplex,
        Family::UniformLpBall { p: 1.0 },
        Family::UniformLpBall { p: 3.0 },
    ]
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// `Q diag(s)` with singular values spread over `[1, 10]`.
fn conditioned_map(n: usize, seed: u64) -> AffineMap {
    let mut rng = RngStream::new(seed).rng();
    let g = Matrix::from_row_major(n, n, (0..n * n).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
    let q = gram_schmidt_columns(&g).unwrap();
    let s: Vec<f64> = (0..n).map(|i| 1.0 + 9.0 * i as f64 / (n - 1).max(1) as f64).collect();
    AffineMap::linear(q.matmul(&Matrix::diag(&s)).unwrap()).unwrap()
}

#[test]
fn log_concave_families_pass_midpoint_test() {
    let stream = RngStream::new(1);
    for family in log_concave_families() {
        let spec = DistributionSpec::isotropic(family.clone(), 5);
        let batch = sample(&spec, 2000, &stream.fork(family.name())).unwrap();
        let pairs: Vec<_> = (0..1000).map(|i| (batch.row(2 * i).to_vec(), batch.row(2 * i + 1).to_vec())).collect();
        let verdict = midpoint_logconcavity(&spec, &pairs).unwrap();
        assert!(verdict.pass, "{family:?}");
        assert_eq!(verdict.checked, 1000);
    }
}

#[test]
fn linear_images_match_transformed_specs() {
    let n = 4;
    let rows = 20_000;
    let crit = 3.0 * ks_critical_value(rows, 0.05);
    for (k, family) in [Family::Gaussian, Family::UniformCube].into_iter().enumerate() {
        let spec = DistributionSpec::isotropic(family, n);
        let t = conditioned_map(n, 40 + k as u64);
        assert!(t.condition_number() <= 10.0 + 1e-9);
        let stream = RngStream::new(2).fork(spec.family.name());
        let base = sample(&spec, rows, &stream.fork("base")).unwrap();
        let image = sample(&spec.transformed(&t).unwrap(), rows, &stream.fork("image")).unwrap();
        for coord in 0..n {
            let pushed: Vec<f64> = base.rows().map(|x| t.apply(x)[coord]).collect();
            let direct: Vec<f64> = image.rows().map(|x| x[coord]).collect();
            let d = ks_two_sample(pushed, direct);
            assert!(d <= crit, "{:?} coordinate {coord}: KS {d} > {crit}", spec.family);
        }
    }
}

#[test]
fn heavier_sconcave_tails_for_smaller_r() {
    let n = 3;
    let rows = 1_000_000;
    let grid = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    let tail = |r: f64| -> Vec<f64> {
        let spec = DistributionSpec::raw(Family::SConcave { r, gauge: Gauge::L2 }, n);
        let batch = sample(&spec, rows, &RngStream::new(3).fork(&format!("r{r}"))).unwrap();
        let norms: Vec<f64> = batch.rows().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        grid.iter().map(|t| norms.iter().filter(|v| **v > *t).count() as f64 / rows as f64).collect()
    };
    let (heavy, light) = (tail(2.0), tail(5.0));
    for (i, t) in grid.iter().enumerate() {
        assert!(light[i] <= heavy[i], "t = {t}: {} > {}", light[i], heavy[i]);
    }
    assert!(light[3] < heavy[3]);
}

#[test]
fn lp_ball_radius_has_power_law_cdf() {
    let (n, p) = (6, 3.0);
    let rows = 100_000;
    let spec = DistributionSpec::raw(Family::UniformLpBall { p }, n);
    let batch = sample(&spec, rows, &RngStream::new(4)).unwrap();
    let radii: Vec<f64> = batch.rows().map(|x| x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)).collect();
    let d = ks_distance_unsorted(&radii, |r| r.clamp(0.0, 1.0).powi(n as i32)).unwrap();
    assert!(d <= 0.005, "KS {d}");
}

#[test]
fn strong_moments_grow_and_dominate_weak_ones() {
    let spec = DistributionSpec::isotropic(Family::UniformCube, 8);
    let profile = weak_strong_check(&spec, &[1.0, 2.0, 4.0, 8.0], NormKind::L2, 40_000, 16, &RngStream::new(5)).unwrap();
    for w in profile.rows.windows(2) {
        assert!(w[1].strong.value >= w[0].strong.value * (1.0 - 1e-12), "p = {}", w[1].p);
    }
    for row in &profile.rows {
        assert!(row.weak.value.value <= row.strong.value + 3.0 * row.strong.stderr, "p = {}", row.p);
    }
    let two = profile.rows.iter().find(|r| r.p == 2.0).unwrap();
    assert!(two.weak.value.within_sigmas(1.0, 4.0, 0.02), "{:?}", two.weak.value);
}

#[test]
fn shell_variance_agrees_both_ways() {
    for family in log_concave_families() {
        let spec = DistributionSpec::isotropic(family, 6);
        let st = shell_stats(&spec, 20_000, &[0.1], 16, &RngStream::new(6)).unwrap();
        let rel = (st.var_sq.value - st.var_sq_via_moments).abs() / st.var_sq.value;
        assert!(rel < 1e-8, "{:?}: {rel}", spec.family);
        assert!(st.var_norm.value >= 0.0);
        assert!(st.tail.windows(2).all(|w| w[1].prob <= w[0].prob));
    }
}

#[test]
fn fourth_moment_close_to_second_on_unconditional_families() {
    let families = [Family::UniformCube, Family::UniformLpBall { p: 1.0 }, Family::UniformLpBall { p: 4.0 }, Family::ProductExponential];
    for n in [16, 64, 256] {
        for family in &families {
            let spec = DistributionSpec::isotropic(family.clone(), n);
            let st = shell_stats(&spec, 20_000, &[0.1], 16, &RngStream::new(7).fork(&format!("{n}"))).unwrap();
            let budget = 1.0 + 10.0 / n as f64;
            assert!(st.fourth_to_second.value <= budget, "{family:?} n={n}: {}", st.fourth_to_second.value);
        }
    }
}
