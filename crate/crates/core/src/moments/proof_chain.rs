use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::hcond::{h_condition_ratio_batch, HGauge};
use crate::distributions::{sample, DistributionSpec, SampleBatch};
use crate::error::{Error, Result};
use crate::numerics::linalg::{dot, norm2};
use crate::numerics::stats::pairwise_sum;
use crate::numerics::{gaussian_matrix, random_unit_vector, Estimate, Flag, RngStream};

/// Rows used for the coarse sphere scan in the inner minimization.
const SCAN_ROWS: usize = 4096;

/// One inequality `lhs ≤ main_term + C · scale`, with the smallest `C`
/// consistent with the estimates.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityLedger {
    pub lhs: f64,
    pub main_term: f64,
    /// `√p σ_p`.
    pub scale: f64,
    pub implied_constant: f64,
}

impl InequalityLedger {
    fn new(lhs: f64, main_term: f64, scale: f64) -> Self {
        Self { lhs, main_term, scale, implied_constant: (lhs - main_term) / scale }
    }
}

/// Per-projection check of `min_{|z|=1} ‖⟨z, AX⟩‖_p ≤ λ E|AX|₂`.
#[derive(Debug, Clone, Serialize)]
pub struct GeometricDraw {
    pub lhs: f64,
    pub lambda: f64,
    pub mean_norm: f64,
    /// `lhs / mean_norm`.
    pub ratio: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProofChainReport {
    pub n: usize,
    pub p: f64,
    pub m: usize,
    pub samples: usize,
    pub gaussian_vectors: usize,
    pub projections: usize,
    /// Supremum over the sphere of the empirical directional moment.
    pub sigma_p: Estimate,
    /// `(E_G E_X |⟨G,X⟩|^p)^{1/p}` against `E_G (E_X |⟨G,X⟩|^p)^{1/p}`.
    pub concentration: InequalityLedger,
    /// `E_G (E_X |⟨G,X⟩|^p)^{1/p}` against `E_A min_z (E_X |⟨z,AX⟩|^p)^{1/p}`.
    pub gordon: InequalityLedger,
    pub geometric: Vec<GeometricDraw>,
    pub geometric_holds: usize,
}

/// `E_X |⟨z, Y⟩|^p` over the first `rows` rows of `y` (an `N × m` row-major buffer).
fn directional(y: &[f64], m: usize, rows: usize, z: &[f64], p: f64, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend(y.chunks(m).take(rows).map(|r| dot(z, r).abs().powf(p)));
    pairwise_sum(buf) / rows as f64
}

fn scan_directions<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<Vec<f64>> {
    match m {
        1 => vec![vec![1.0]],
        // Half circle suffices by symmetry.
        2 => (0..720)
            .map(|k| {
                let a = std::f64::consts::PI * k as f64 / 720.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        // Fibonacci lattice on the sphere.
        3 => {
            let count = 4000;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let zc = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - zc * zc).sqrt();
                    let a = golden * k as f64;
                    vec![r * a.cos(), r * a.sin(), zc]
                })
                .collect()
        }
        _ => (0..10_000).map(|_| random_unit_vector(m, rng)).collect(),
    }
}

/// Minimum over the unit sphere of `(E_X |⟨z, Y⟩|^p)^{1/p}`: a coarse scan
/// on a subsample, then projected gradient descent on all rows.
fn sphere_min<R: Rng + ?Sized>(y: &[f64], m: usize, p: f64, rng: &mut R) -> f64 {
    let rows = y.len() / m;
    let mut buf = Vec::with_capacity(rows);
    let scan = rows.min(SCAN_ROWS);
    let start = scan_directions(m, rng)
        .into_iter()
        .map(|z| {
            let v = directional(y, m, scan, &z, p, &mut buf);
            (z, v)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(z, _)| z)
        .expect("at least one direction");
    if m == 1 {
        return directional(y, m, rows, &start, p, &mut buf).powf(1.0 / p);
    }
    let mut z = start;
    let mut f = directional(y, m, rows, &z, p, &mut buf);
    let mut step = 0.05;
    for _ in 0..20 {
        let mut g = vec![0.0; m];
        for r in y.chunks(m) {
            let s = dot(&z, r);
            let w = p * s.abs().powf(p - 1.0) * s.signum();
            g.iter_mut().zip(r).for_each(|(gi, ri)| *gi += w * ri);
        }
        let gz = dot(&g, &z);
        g.iter_mut().zip(&z).for_each(|(gi, zi)| *gi -= gz * zi);
        let gn = norm2(&g);
        if gn == 0.0 {
            break;
        }
        let mut moved = false;
        while step > 1e-7 {
            let mut c: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a - step * b / gn).collect();
            let cn = norm2(&c);
            c.iter_mut().for_each(|v| *v /= cn);
            let fc = directional(y, m, rows, &c, p, &mut buf);
            if fc < f {
                z = c;
                f = fc;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    f.powf(1.0 / p)
}

/// In-sample `σ_p` of the empirical measure: the inner search maximizes
/// instead of minimizing.
fn sigma_in_sample<R: Rng + ?Sized>(batch: &SampleBatch, p: f64, rng: &mut R) -> f64 {
    let n = batch.dim();
    let mut buf = Vec::with_capacity(batch.len());
    let moment = |z: &[f64], buf: &mut Vec<f64>| -> f64 {
        buf.clear();
        buf.extend(batch.rows().map(|x| dot(z, x).abs().powf(p)));
        pairwise_sum(buf) / batch.len() as f64
    };
    let mut best = f64::NEG_INFINITY;
    let mut cands: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    cands.extend((0..2000).map(|_| random_unit_vector(n, rng)));
    let mut best_z = cands[0].clone();
    for z in cands {
        let v = moment(&z, &mut buf);
        if v > best {
            best = v;
            best_z = z;
        }
    }
    let mut step = 0.05;
    while step > 1e-7 {
        let mut improved = false;
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut c = best_z.clone();
                c[i] += s * step;
                let cn = norm2(&c);
                c.iter_mut().for_each(|v| *v /= cn);
                let v = moment(&c, &mut buf);
                if v > best {
                    best = v;
                    best_z = c;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best.powf(1.0 / p)
}

/// Monte-Carlo ledgers for the three steps of the weak/strong argument:
/// Gaussian concentration, the Gordon comparison, and the geometric
/// inequality with `λ` taken from [`h_condition_ratio_batch`] for each
/// projection. All expectations over `X` use one batch of `samples` rows.
pub fn proof_chain_check(
    spec: &DistributionSpec,
    p: f64,
    samples: usize,
    projections: usize,
    gaussian_vectors: usize,
    stream: &RngStream,
) -> Result<ProofChainReport> {
    let n = spec.dim;
    if n > 8 || p > 4.0 {
        return Err(Error::ScaleLimit(format!("proof-chain check needs n <= 8 and p <= 4, got n = {n}, p = {p}")));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be at least 1, got {p}")));
    }
    let m = p.ceil() as usize;
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds n = {n}")));
    }
    if !spec.family.is_log_concave() {
        return Err(Error::InvalidSpec("proof-chain check is for log-concave specs".into()));
    }
    if projections == 0 || gaussian_vectors == 0 {
        return Err(Error::InvalidArgument("need at least one projection and one Gaussian vector".into()));
    }
    let batch = sample(spec, samples, &stream.fork("x"))?;
    let mut rng = stream.fork("sigma").rng();
    let sigma = sigma_in_sample(&batch, p, &mut rng);
    let scale = p.sqrt() * sigma;

    let mut g_rng = stream.fork("g").rng();
    let mut buf = Vec::with_capacity(samples);
    let mg: Vec<f64> = (0..gaussian_vectors)
        .map(|_| {
            let g: Vec<f64> = (0..n).map(|_| g_rng.sample(StandardNormal)).collect();
            buf.clear();
            buf.extend(batch.rows().map(|x| dot(&g, x).abs().powf(p)));
            pairwise_sum(&buf) / samples as f64
        })
        .collect();
    let lhs12 = (pairwise_sum(&mg) / mg.len() as f64).powf(1.0 / p);
    let roots: Vec<f64> = mg.iter().map(|v| v.powf(1.0 / p)).collect();
    let main12 = pairwise_sum(&roots) / roots.len() as f64;

    let mut a_rng = stream.fork("a").rng();
    let mut search_rng = stream.fork("search").rng();
    let parts = [batch];
    let mut geometric = Vec::with_capacity(projections);
    let mut mins = Vec::with_capacity(projections);
    for _ in 0..projections {
        let a = gaussian_matrix(m, n, &mut a_rng);
        let mut y = vec![0.0; samples * m];
        for (row, out) in parts[0].rows().zip(y.chunks_mut(m)) {
            a.matvec_into(row, out);
        }
        let lhs = sphere_min(&y, m, p, &mut search_rng);
        let norms: Vec<f64> = y.chunks(m).map(norm2).collect();
        let mean_norm = pairwise_sum(&norms) / samples as f64;
        let lambda = h_condition_ratio_batch(&parts, p, &a, HGauge::Euclidean)?.lambda.value;
        mins.push(lhs);
        geometric.push(GeometricDraw {
            lhs,
            lambda,
            mean_norm,
            ratio: lhs / mean_norm,
            holds: lhs <= lambda * mean_norm * (1.0 + 1e-12),
        });
    }
    let main13 = pairwise_sum(&mins) / mins.len() as f64;
    let geometric_holds = geometric.iter().filter(|d| d.holds).count();
    Ok(ProofChainReport {
        n,
        p,
        m,
        samples,
        gaussian_vectors,
        projections,
        sigma_p: Estimate::exact(sigma).flag(Flag::LowerBound),
        concentration: InequalityLedger::new(lhs12, main12, scale),
        gordon: InequalityLedger::new(main12, main13, scale),
        geometric,
        geometric_holds,
    })
}
