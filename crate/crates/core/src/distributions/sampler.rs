use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use super::{DistributionSpec, Family, Gauge};
use crate::error::{Error, Result};
use crate::isotropy::AffineMap;
use crate::numerics::stats::{replica_sizes, replicate};
use crate::numerics::{Matrix, RngStream};
use crate::volume::HitAndRun;

/// `N × n` draws with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub data: Matrix,
    pub spec_id: String,
    pub seed: u64,
    pub stream: u64,
    /// Hit-and-run steps between rows; 0 for exact samplers.
    pub walk_budget: usize,
}

impl SampleBatch {
    /// Wraps an externally constructed matrix (test hook).
    pub fn injected(data: Matrix) -> Result<Self> {
        if data.rows() == 0 {
            return Err(Error::EmptySample);
        }
        if !data.is_finite() {
            return Err(Error::NonFinite("injected batch"));
        }
        Ok(Self { data, spec_id: "injected".into(), seed: 0, stream: 0, walk_budget: 0 })
    }

    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.data.row(i)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.len()).map(move |i| self.data.row(i))
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Gaussian,
    Laplace,
    Cube,
    Simplex,
    LpBall { p: f64, shape: Gamma<f64> },
    SConcave { radial: Gamma<f64>, tail: Gamma<f64>, gauge: Gauge },
    Oracle { chain: Box<HitAndRun>, walk_budget: usize },
}

/// Row-at-a-time sampler for one spec. Cloning gives an independent copy
/// (for oracle bodies, a copy of the chain state).
#[derive(Debug, Clone)]
pub struct Sampler {
    dim: usize,
    kind: Kind,
    map: Output,
    raw: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Output {
    Identity,
    // Product families: the isotropic map is a coordinate scaling.
    Diagonal { scale: Vec<f64>, shift: Vec<f64> },
    Affine(AffineMap),
}

impl Output {
    fn new(map: Option<AffineMap>) -> Self {
        match map {
            None => Output::Identity,
            Some(m) => match m.as_diagonal() {
                Some(scale) => Output::Diagonal { scale, shift: m.shift },
                None => Output::Affine(m),
            },
        }
    }
}

fn gamma(shape: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, 1.0).map_err(|e| Error::InvalidSpec(format!("gamma({shape}): {e}")))
}

fn signed<R: Rng + ?Sized>(v: f64, rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        v
    } else {
        -v
    }
}

impl Sampler {
    pub fn new(spec: &DistributionSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.dim;
        let kind = match &spec.family {
            Family::Gaussian => Kind::Gaussian,
            Family::ProductExponential => Kind::Laplace,
            Family::UniformCube => Kind::Cube,
            Family::UniformSimplex => Kind::Simplex,
            Family::UniformLpBall { p } if p.is_infinite() => Kind::Cube,
            Family::UniformLpBall { p } => Kind::LpBall { p: *p, shape: gamma(1.0 / p)? },
            // ρ = G_n / G_r has density ∝ ρ^{n-1} (1+ρ)^{-n-r}.
            Family::SConcave { r, gauge } => {
                Kind::SConcave { radial: gamma(n as f64)?, tail: gamma(*r)?, gauge: *gauge }
            }
            Family::OracleUniform { body, walk_budget } => {
                if *walk_budget == 0 {
                    return Err(Error::InvalidSpec("oracle body needs walk-budget >= 1".into()));
                }
                Kind::Oracle { chain: Box::new(HitAndRun::new(body.build()?)), walk_budget: *walk_budget }
            }
        };
        Ok(Self { dim: n, kind, map: Output::new(spec.output_map()?), raw: vec![0.0; n] })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Oracle calls consumed so far (0 for exact samplers).
    pub fn oracle_calls(&self) -> u64 {
        match &self.kind {
            Kind::Oracle { chain, .. } => chain.oracle_calls(),
            _ => 0,
        }
    }

    pub fn walk_budget(&self) -> usize {
        match &self.kind {
            Kind::Oracle { walk_budget, .. } => *walk_budget,
            _ => 0,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.dim);
        let raw = &mut self.raw;
        match &mut self.kind {
            Kind::Gaussian => raw.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
            Kind::Laplace => raw.iter_mut().for_each(|v| *v = signed(rng.sample(Exp1), rng)),
            Kind::Cube => raw.iter_mut().for_each(|v| *v = 2.0 * rng.random::<f64>() - 1.0),
            Kind::Simplex => {
                // Exponential spacings; the first spacing is dropped.
                let e0: f64 = rng.sample(Exp1);
                let mut total = e0;
                for v in raw.iter_mut() {
                    *v = rng.sample(Exp1);
                    total += *v;
                }
                raw.iter_mut().for_each(|v| *v /= total);
            }
            Kind::LpBall { p, shape } => {
                // g_i with density ∝ e^{-|t|^p} has |g_i|^p ~ Gamma(1/p).
                let mut total: f64 = rng.sample(Exp1);
                for v in raw.iter_mut() {
                    let gp = shape.sample(rng);
                    total += gp;
                    *v = signed(gp.powf(1.0 / *p), rng);
                }
                let s = total.powf(1.0 / *p);
                raw.iter_mut().for_each(|v| *v /= s);
            }
            Kind::SConcave { radial, tail, gauge } => {
                let rho = radial.sample(rng) / tail.sample(rng);
                match gauge {
                    Gauge::L2 => raw.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
                    Gauge::L1 => raw.iter_mut().for_each(|v| *v = signed(rng.sample(Exp1), rng)),
                }
                let g = gauge.norm(raw);
                raw.iter_mut().for_each(|v| *v *= rho / g);
            }
            Kind::Oracle { chain, walk_budget } => {
                let x = chain.run(*walk_budget, rng)?;
                raw.copy_from_slice(x);
            }
        }
        match &self.map {
            Output::Identity => out.copy_from_slice(&self.raw),
            Output::Diagonal { scale, shift } => {
                for (((o, x), a), b) in out.iter_mut().zip(&self.raw).zip(scale).zip(shift) {
                    *o = a * x + b;
                }
            }
            Output::Affine(m) => m.apply_into(&self.raw, out),
        }
        Ok(())
    }

    pub fn draw_vec<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.draw(rng, &mut out)?;
        Ok(out)
    }
}

/// `n_rows` i.i.d. rows from `spec` (a single chain for oracle bodies).
pub fn sample(spec: &DistributionSpec, n_rows: usize, stream: &RngStream) -> Result<SampleBatch> {
    if n_rows == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let mut sampler = Sampler::new(spec)?;
    let mut rng = stream.rng();
    let n = spec.dim;
    let mut data = vec![0.0; n_rows * n];
    for row in data.chunks_mut(n) {
        sampler.draw(&mut rng, row)?;
    }
    Ok(SampleBatch {
        data: Matrix::from_row_major(n_rows, n, data)?,
        spec_id: spec.id(),
        seed: stream.seed,
        stream: stream.stream,
        walk_budget: sampler.walk_budget(),
    })
}

/// Streams `sizes[k]` rows of replica `k` (substream `k`) through `fold`
/// without storing them. Results come back in replica order.
pub fn fold_replicas<T, I, F>(spec: &DistributionSpec, sizes: &[usize], stream: &RngStream, init: I, fold: F) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> T + Sync + Send,
    F: Fn(&mut T, &[f64]) + Sync + Send,
{
    let base = Sampler::new(spec)?;
    let n = spec.dim;
    replicate(stream, sizes.len(), |k, rng| -> Result<T> {
        let mut sampler = base.clone();
        let mut row = vec![0.0; n];
        let mut acc = init();
        for _ in 0..sizes[k] {
            sampler.draw(rng, &mut row)?;
            fold(&mut acc, &row);
        }
        Ok(acc)
    })
    .into_iter()
    .collect()
}

/// `total` rows split over `replicas` batches; batch `k` equals
/// `sample(spec, sizes[k], &stream.replica(k))`.
pub fn sample_replicas(spec: &DistributionSpec, total: usize, replicas: usize, stream: &RngStream) -> Result<Vec<SampleBatch>> {
    if replicas == 0 || total < replicas {
        return Err(Error::InvalidArgument(format!("need at least one row per replica, got {total} rows for {replicas}")));
    }
    let sizes = replica_sizes(total, replicas);
    let parts = fold_replicas(spec, &sizes, stream, Vec::new, |acc: &mut Vec<f64>, row| acc.extend_from_slice(row))?;
    let walk_budget = Sampler::new(spec)?.walk_budget();
    parts
        .into_iter()
        .zip(&sizes)
        .enumerate()
        .map(|(k, (data, &rows))| {
            let sub = stream.replica(k as u64);
            Ok(SampleBatch {
                data: Matrix::from_row_major(rows, spec.dim, data)?,
                spec_id: spec.id(),
                seed: sub.seed,
                stream: sub.stream,
                walk_budget,
            })
        })
        .collect()
}


#[cfg(test)]
mod replica_tests {
    use super::*;

    #[test]
    fn replica_batches_match_single_streams() {
        let spec = DistributionSpec::isotropic(Family::UniformCube, 3);
        let s = RngStream::new(11);
        let parts = sample_replicas(&spec, 100, 16, &s).unwrap();
        assert_eq!(parts.iter().map(SampleBatch::len).sum::<usize>(), 100);
        let direct = sample(&spec, parts[3].len(), &s.replica(3)).unwrap();
        assert_eq!(parts[3].data, direct.data);
    }
}
