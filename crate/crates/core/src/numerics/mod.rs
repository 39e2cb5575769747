//! Deterministic numeric substrate shared by every estimator.

pub mod ks;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;

pub use ks::{ks_critical_value, ks_distance, ks_distance_unsorted};
pub use linalg::{dot, norm2, operator_norm_sym, Matrix};
pub use quadrature::{integrate, integrate_halfline, TailDecay};
pub use rng::{RngStream, StreamRng};
pub use stats::{Estimate, Flag};

use rand::Rng;
use rand_distr::StandardNormal;

/// Uniform direction on `S^{n-1}` (normalized Gaussian).
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nv = norm2(&v);
        if nv > 1e-300 {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

/// `n × n` matrix of i.i.d. standard normals.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_row_major(rows, cols, data).expect("sizes agree")
}

/// Haar-distributed orthogonal matrix (up to column signs).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    loop {
        if let Ok(q) = linalg::gram_schmidt_columns(&gaussian_matrix(n, n, rng)) {
            return q;
        }
    }
}

/// Random invertible matrix with condition number at most `max_cond`
/// (`Q diag(s) R` with singular values spread over `[1, max_cond]`).
pub fn random_well_conditioned<R: Rng + ?Sized>(n: usize, max_cond: f64, rng: &mut R) -> Matrix {
    let q1 = random_orthogonal(n, rng);
    let q2 = random_orthogonal(n, rng);
    let s: Vec<f64> = (0..n).map(|_| max_cond.powf(rng.random::<f64>())).collect();
    q1.matmul(&Matrix::diag(&s)).and_then(|m| m.matmul(&q2)).expect("square")
}
