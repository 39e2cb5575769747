use logconc_core::isoperimetry::{
    boundary_measure, cheeger_lower_bounds, gaussian_halfspace_profile, halfspace_cheeger, halfspace_expansion,
    poincare_quotient, PoincareProbe, TestSet,
};
use logconc_core::moments::shell_stats;
use logconc_core::numerics::linalg::gram_schmidt_columns;
use logconc_core::numerics::special::normal_cdf;
use logconc_core::volume::{hit_and_run_step, hull_volume_ratio_for, volume_multiphase, VolumeConfig};
use logconc_core::{AffineMap, BodyDescriptor, DistributionSpec, Family, Matrix, RngStream};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_orthogonal(n: usize, seed: u64) -> AffineMap {
    let mut rng = RngStream::new(seed).rng();
    let g = Matrix::from_row_major(n, n, (0..n * n).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
    AffineMap::linear(gram_schmidt_columns(&g).unwrap()).unwrap()
}

#[test]
fn volume_is_rotation_invariant() {
    let body = "cube:3:1".parse::<BodyDescriptor>().unwrap().build().unwrap();
    let rotated = body.transformed(&random_orthogonal(3, 9)).unwrap();
    let cfg = VolumeConfig { epsilon: 0.05, ..VolumeConfig::default() };
    let a = volume_multiphase(&body, &cfg, &RngStream::new(10).fork("a")).unwrap();
    let b = volume_multiphase(&rotated, &cfg, &RngStream::new(10).fork("b")).unwrap();
    let joint = 3.0 * (a.volume.stderr.powi(2) + b.volume.stderr.powi(2)).sqrt();
    assert!((a.volume.value - b.volume.value).abs() <= joint, "{} vs {}", a.volume.value, b.volume.value);
    for est in [&a, &b] {
        assert!(est.phases.iter().all(|p| p.ratio.value > 0.0 && p.ratio.value <= 1.0));
        let product: f64 = est.phases.iter().map(|p| p.ratio.value).product();
        let rebuilt = est.base_volume / product;
        assert!((rebuilt - est.volume.value).abs() <= 1e-12 * est.volume.value);
    }
}

#[test]
fn hit_and_run_is_reversible_on_the_square() {
    let body = "cube:2:1".parse::<BodyDescriptor>().unwrap().build().unwrap();
    let mut rng = RngStream::new(11).rng();
    let in_a = |x: &[f64]| x[0] < -0.5;
    let (mut ab, mut ba, mut calls) = (0u64, 0u64, 0u64);
    for _ in 0..200_000 {
        let x = [2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0];
        let y = hit_and_run_step(&body, &x, &mut rng, &mut calls).unwrap();
        match (in_a(&x), in_a(&y)) {
            (true, false) => ab += 1,
            (false, true) => ba += 1,
            _ => {}
        }
    }
    let diff = ab as f64 - ba as f64;
    assert!(diff.abs() <= 3.0 * ((ab + ba) as f64).sqrt(), "{ab} vs {ba}");
    assert!(ab > 1000);
}

#[test]
fn gaussian_expansion_matches_profile() {
    let spec = DistributionSpec::gaussian(3);
    let theta = [0.6, 0.0, 0.8];
    for alpha in [0.3, 0.5] {
        for eps in [0.05, 0.1] {
            let t = logconc_core::numerics::special::normal_quantile(alpha);
            let est = halfspace_expansion(&spec, &theta, t, eps, 200_000, 16, &RngStream::new(12)).unwrap();
            let exact = gaussian_halfspace_profile(alpha, eps).unwrap();
            assert!((exact - normal_cdf(t + eps)).abs() < 1e-12);
            assert!(est.within_sigmas(exact, 3.0, 0.0), "alpha {alpha} eps {eps}: {est:?} vs {exact}");
        }
    }
}

#[test]
fn halfspace_conductance_dominates_variance_lower_bound() {
    let grid: Vec<f64> = (-8..=8).map(|i| i as f64 * 0.25).collect();
    for family in [Family::Gaussian, Family::UniformCube, Family::ProductExponential, Family::UniformLpBall { p: 1.0 }] {
        let spec = DistributionSpec::isotropic(family, 4);
        let s = RngStream::new(13).fork(spec.family.name());
        let h = halfspace_cheeger(&spec, 8, &grid, 100_000, 16, &s.fork("h")).unwrap();
        let bounds = cheeger_lower_bounds(&shell_stats(&spec, 100_000, &[0.1], 16, &s.fork("shell")).unwrap()).unwrap();
        assert!(h.value.value >= bounds.bobkov, "{:?}: {} < {}", spec.family, h.value.value, bounds.bobkov);
        assert!(bounds.kls > 0.0 && bounds.eldan > 0.0 && bounds.variance_implied > 0.0);
    }
}

#[test]
fn gaussian_poincare_quotients_are_at_least_one() {
    let spec = DistributionSpec::gaussian(4);
    for probe in [
        PoincareProbe::Linear { theta: vec![0.5; 4] },
        PoincareProbe::CoordinateSquare { index: 1 },
        PoincareProbe::NormSquared,
        PoincareProbe::SmoothedNorm { delta: 1.0 },
    ] {
        let q = poincare_quotient(&spec, &probe, 100_000, 16, &RngStream::new(14)).unwrap();
        assert!(q.quotient.value >= 1.0 - 3.0 * q.quotient.stderr, "{probe:?}: {:?}", q.quotient);
    }
}

#[test]
fn boundary_measure_halves_with_marginal_density() {
    // Diagonal marginal of the square [-1,1]² is triangular: density √2/2 at
    // 0 and √2/4 at √2/2.
    let spec = DistributionSpec::raw(Family::UniformCube, 2);
    let theta = vec![std::f64::consts::FRAC_1_SQRT_2; 2];
    let at = |t: f64, label: &str| {
        let set = TestSet::Halfspace { theta: theta.clone(), t };
        boundary_measure(&spec, &set, 0.01, 400_000, 16, &RngStream::new(15).fork(label)).unwrap().value
    };
    let (peak, half) = (at(0.0, "peak"), at(std::f64::consts::FRAC_1_SQRT_2, "half"));
    assert!(peak.within_sigmas(std::f64::consts::SQRT_2 / 2.0, 3.0, 0.01), "{peak:?}");
    let ratio = half.value / peak.value;
    let se = ratio * ((half.stderr / half.value).powi(2) + (peak.stderr / peak.value).powi(2)).sqrt();
    assert!((ratio - 0.5).abs() <= 3.0 * se + 0.01, "ratio {ratio} ± {se}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hull_ratio_stays_below_one_and_grows(n in 2usize..5, extra in 1usize..6, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed).rng();
        let mut points: Vec<Vec<f64>> = (0..n + extra)
            .map(|_| {
                let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let r = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                g.iter().map(|v| v / r).collect()
            })
            .collect();
        let mc = RngStream::new(seed ^ 0xabc);
        let big = hull_volume_ratio_for(&points, 2000, 16, &mc).unwrap();
        points.truncate(n);
        let small = hull_volume_ratio_for(&points, 2000, 16, &mc).unwrap();
        prop_assert!(big.ratio.value <= 1.0);
        prop_assert!(small.ratio.value <= big.ratio.value);
    }
}
