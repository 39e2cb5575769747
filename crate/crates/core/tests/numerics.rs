use std::f64::consts::PI;

use logconc_core::clt::classical_be_bound;
use logconc_core::covariance::cov_deviation_batch;
use logconc_core::numerics::linalg::{gram_schmidt_columns, operator_norm_sym, symmetrize};
use logconc_core::numerics::quadrature::{integrate_halfline, TailDecay};
use logconc_core::numerics::special::{gamma_fn, normal_cdf};
use logconc_core::numerics::ks::ks_distance;
use logconc_core::{AffineMap, Matrix, RngStream, SampleBatch};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = RngStream::new(seed).rng();
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_row_major(rows, cols, data).unwrap()
}

fn random_orthogonal(n: usize, seed: u64) -> Matrix {
    gram_schmidt_columns(&gaussian_matrix(n, n, seed)).unwrap()
}

type Case = (&'static str, fn(f64) -> f64, TailDecay, f64);

#[test]
fn halfline_oracle_table() {
    let tol = 1e-9;
    let table: [Case; 10] = [
        ("exp", |t| (-t).exp(), TailDecay::Exponential, 1.0),
        ("t^3 exp", |t| t.powi(3) * (-t).exp(), TailDecay::Exponential, 6.0),
        ("t^1.5 exp", |t| t.powf(1.5) * (-t).exp(), TailDecay::Exponential, gamma_fn(2.5)),
        ("half gaussian", |t| (-0.5 * t * t).exp(), TailDecay::Exponential, (PI / 2.0).sqrt()),
        ("t exp(-t^2)", |t| t * (-t * t).exp(), TailDecay::Exponential, 0.5),
        ("exp(-t^1.5)", |t| (-t.powf(1.5)).exp(), TailDecay::Exponential, gamma_fn(5.0 / 3.0)),
        ("damped cosine", |t| t.cos() * (-t).exp(), TailDecay::Exponential, 0.5),
        ("(1+t)^-2", |t| (1.0 + t).powi(-2), TailDecay::Power { exponent: 2.0 }, 1.0),
        ("(1+t)^-3", |t| (1.0 + t).powi(-3), TailDecay::Power { exponent: 3.0 }, 0.5),
        ("cauchy", |t| 1.0 / (1.0 + t * t), TailDecay::Power { exponent: 2.0 }, PI / 2.0),
    ];
    for (name, g, decay, exact) in table {
        let got = integrate_halfline(g, tol, decay).unwrap();
        assert!((got - exact).abs() <= tol * exact.max(1.0), "{name}: {got} vs {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_norm_is_rotation_invariant(n in 1usize..=32, seed in any::<u64>()) {
        let g = gaussian_matrix(n, n, seed);
        let m = symmetrize(&g);
        let q = random_orthogonal(n, seed ^ 0x5eed);
        let rotated = symmetrize(&q.matmul(&m).unwrap().matmul(&q.transpose()).unwrap());
        let (a, b) = (operator_norm_sym(&m, 1e-12).unwrap(), operator_norm_sym(&rotated, 1e-12).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn ks_is_invariant_under_monotone_reparameterization(seed in any::<u64>(), len in 5usize..400) {
        let mut rng = RngStream::new(seed).rng();
        let mut x: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        x.sort_by(f64::total_cmp);
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let direct = ks_distance(&x, normal_cdf).unwrap();
        let mapped = ks_distance(&y, |v| normal_cdf(v.ln())).unwrap();
        prop_assert!((direct - mapped).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&direct));
    }

    #[test]
    fn covariance_deviation_is_rotation_invariant(n in 1usize..12, extra in 0usize..40, seed in any::<u64>()) {
        let rows = n + 1 + extra;
        let a = gaussian_matrix(rows, n, seed);
        let q = random_orthogonal(n, seed.wrapping_add(1));
        let rotated = a.matmul(&q.transpose()).unwrap();
        let e1 = cov_deviation_batch(&SampleBatch::injected(a).unwrap()).unwrap();
        let e2 = cov_deviation_batch(&SampleBatch::injected(rotated).unwrap()).unwrap();
        prop_assert!((e1.epsilon - e2.epsilon).abs() < 1e-10, "{} vs {}", e1.epsilon, e2.epsilon);
        let via_sv = (e1.s_max * e1.s_max - 1.0).max(1.0 - e1.s_min * e1.s_min);
        prop_assert!((e1.epsilon - via_sv).abs() < 1e-10);
        prop_assert!(e1.epsilon >= 0.0);
    }

    #[test]
    fn be_bound_ignores_coordinate_order(raw in prop::collection::vec(-1.0f64..1.0, 1..40), shift in any::<prop::sample::Index>()) {
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let theta: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let mut rotated = theta.clone();
        rotated.rotate_left(shift.index(theta.len()));
        rotated.reverse();
        let (a, b) = (classical_be_bound(&theta, 1.0).unwrap(), classical_be_bound(&rotated, 1.0).unwrap());
        prop_assert!((a - b).abs() < 1e-14);
        let diagonal = classical_be_bound(&vec![1.0 / (theta.len() as f64).sqrt(); theta.len()], 1.0).unwrap();
        prop_assert!(diagonal <= a + 1e-14);
    }

    #[test]
    fn streams_are_pure_functions_of_seed_and_label(seed in any::<u64>(), k in 0u64..1000) {
        let a = RngStream::new(seed).fork("x").replica(k);
        let b = RngStream::new(seed).fork("x").replica(k);
        let draw = |s: &RngStream| -> Vec<u64> { let mut r = s.rng(); (0..8).map(|_| r.random()).collect() };
        prop_assert_eq!(draw(&a), draw(&b));
        prop_assert_ne!(draw(&a), draw(&RngStream::new(seed).fork("x").replica(k + 1)));
    }

    #[test]
    fn affine_inverse_round_trips(n in 1usize..8, seed in any::<u64>()) {
        let m = gaussian_matrix(n, n, seed);
        let shift = gaussian_matrix(1, n, seed ^ 1).to_rows().remove(0);
        let Ok(t) = AffineMap::new(m, shift) else { return Ok(()) };
        prop_assume!(t.condition_number() < 1e6);
        let inv = t.inverse().unwrap();
        let x = gaussian_matrix(1, n, seed ^ 2).to_rows().remove(0);
        let back = inv.apply(&t.apply(&x));
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()));
        }
    }
}
