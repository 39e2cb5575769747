use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use logconc_core::covariance::cov_deviation_batch;
use logconc_core::distributions::sample;
use logconc_core::numerics::ks_distance_unsorted;
use logconc_core::numerics::special::normal_cdf;
use logconc_core::volume::{hit_and_run_step, volume_multiphase, VolumeConfig};
use logconc_core::{BodyDescriptor, DistributionSpec, Family, RngStream};
use rand::Rng;

fn samplers(c: &mut Criterion) {
    let stream = RngStream::new(1);
    for family in [Family::Gaussian, Family::UniformCube, Family::UniformLpBall { p: 1.0 }, Family::UniformSimplex] {
        let spec = DistributionSpec::isotropic(family, 64);
        c.bench_function(&format!("sample 10k x 64 {}", spec.family.name()), |b| {
            b.iter(|| sample(black_box(&spec), 10_000, &stream).unwrap())
        });
    }
}

fn covariance(c: &mut Criterion) {
    let batch = sample(&DistributionSpec::gaussian(64), 8192, &RngStream::new(2)).unwrap();
    c.bench_function("cov deviation 8192 x 64", |b| b.iter(|| cov_deviation_batch(black_box(&batch)).unwrap()));
}

fn ks(c: &mut Criterion) {
    let mut rng = RngStream::new(3).rng();
    c.bench_function("ks distance 100k", |b| {
        b.iter_batched(
            || (0..100_000).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect::<Vec<f64>>(),
            |x| ks_distance_unsorted(&x, normal_cdf).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn walks(c: &mut Criterion) {
    let body = "cube:10:1".parse::<BodyDescriptor>().unwrap().build().unwrap();
    let mut rng = RngStream::new(4).rng();
    let mut calls = 0;
    let mut x = vec![0.0; 10];
    c.bench_function("hit-and-run step cube n=10", |b| {
        b.iter(|| {
            x = hit_and_run_step(&body, &x, &mut rng, &mut calls).unwrap();
        })
    });

    let cube = "cube:4:1".parse::<BodyDescriptor>().unwrap().build().unwrap();
    let cfg = VolumeConfig { epsilon: 0.1, ..VolumeConfig::default() };
    let mut group = c.benchmark_group("volume");
    group.sample_size(10);
    group.bench_function("multiphase cube n=4 eps=0.1", |b| {
        b.iter(|| volume_multiphase(&cube, &cfg, &RngStream::new(5)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, samplers, covariance, ks, walks);
criterion_main!(benches);
