//! Small dense linear algebra: row-major matrices, cyclic Jacobi for
//! symmetric spectra, and the handful of matrix functions the estimators need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a matrix is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    /// `z zᵀ`.
    pub fn outer(z: &[f64]) -> Self {
        let n = z.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = z[i] * z[j];
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · x`, writing into `out`.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.data.len(), got: other.data.len() });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    fn check_symmetric(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        if !self.is_finite() {
            return Err(Error::NonFinite("matrix"));
        }
        let scale = self.data.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let asym = self.asymmetry();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NonSymmetric(asym));
        }
        Ok(())
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Determinant by partial-pivot LU.
    pub fn determinant(&self) -> Result<f64> {
        let (lu, _, sign) = self.lu()?;
        let n = self.rows;
        Ok((0..n).map(|i| lu[(i, i)]).product::<f64>() * sign)
    }

    /// `ln |det|`, finite in dimensions where the determinant itself
    /// would overflow; `-inf` for singular matrices.
    pub fn ln_abs_determinant(&self) -> Result<f64> {
        let (lu, _, _) = self.lu()?;
        Ok((0..self.rows).map(|i| lu[(i, i)].abs().ln()).sum())
    }

    fn lu(&self) -> Result<(Matrix, Vec<usize>, f64)> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, _) = (k..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            if pivot == 0.0 {
                continue;
            }
            for i in (k + 1)..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                for j in (k + 1)..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        Ok((a, perm, sign))
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))
                .unwrap_or(k);
            if a[(p, k)].abs() <= 1e-300f64.max(scale * 1e-15) {
                return Err(Error::SingularCovariance(a[(p, k)].abs()));
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                    inv.data.swap(k * n + j, p * n + j);
                }
            }
            let pivot = a[(k, k)];
            for j in 0..n {
                a[(k, j)] /= pivot;
                inv[(k, j)] /= pivot;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let (av, iv) = (a[(k, j)], inv[(k, j)]);
                    a[(i, j)] -= f * av;
                    inv[(i, j)] -= f * iv;
                }
            }
        }
        Ok(inv)
    }

    /// Singular values, descending, via the spectrum of `AᵀA` (or `AAᵀ`).
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let gram = if self.rows <= self.cols {
            self.matmul(&self.transpose())?
        } else {
            self.transpose().matmul(self)?
        };
        let eig = symmetric_eigen(&symmetrize(&gram))?;
        let mut s: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0).sqrt()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    }

    pub fn condition_number(&self) -> Result<f64> {
        let s = self.singular_values()?;
        let (max, min) = (s[0], *s.last().unwrap_or(&0.0));
        Ok(if min > 0.0 { max / min } else { f64::INFINITY })
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Averages `M` with its transpose; removes rounding-level asymmetry.
pub fn symmetrize(m: &Matrix) -> Matrix {
    let mut s = m.clone();
    for i in 0..m.rows {
        for j in 0..m.cols {
            s[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, matching `values`.
    pub vectors: Matrix,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
pub fn symmetric_eigen(m: &Matrix) -> Result<SymmetricEigen> {
    m.check_symmetric()?;
    let n = m.rows;
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    let total: f64 = a.data.iter().map(|x| x * x).sum();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off <= f64::EPSILON * f64::EPSILON * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Largest absolute eigenvalue of a symmetric matrix.
///
/// `tol` is the relative accuracy requested; Jacobi converges to machine
/// precision, so it only has to be positive.
pub fn operator_norm_sym(m: &Matrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let eig = symmetric_eigen(m)?;
    Ok(eig.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Power iteration on `M²`; only used as an independent cross-check of
/// [`operator_norm_sym`].
pub fn operator_norm_power(m: &Matrix, iters: usize) -> f64 {
    let n = m.rows;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.618_033_988_7).fract()).collect();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let y = m.matvec(&m.matvec(&x));
        let ny = norm2(&y);
        if ny == 0.0 {
            return 0.0;
        }
        lambda = (ny / norm2(&x)).sqrt();
        x = y.iter().map(|v| v / ny).collect();
    }
    lambda
}

/// Applies `f` to the spectrum of a symmetric matrix: `V f(Λ) Vᵀ`.
pub fn sym_matrix_function(m: &Matrix, f: impl Fn(f64) -> f64) -> Result<Matrix> {
    let eig = symmetric_eigen(m)?;
    let n = m.rows;
    let mut out = Matrix::zeros(n, n);
    for k in 0..n {
        let fk = f(eig.values[k]);
        for i in 0..n {
            let vik = eig.vectors[(i, k)] * fk;
            if vik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[(i, j)] += vik * eig.vectors[(j, k)];
            }
        }
    }
    Ok(out)
}

/// `M^{-1/2}` for symmetric positive definite `M`.
pub fn inv_sqrt_spd(m: &Matrix) -> Result<Matrix> {
    let eig = symmetric_eigen(m)?;
    let max = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.values[0];
    if !(min > max * 1e-13) {
        return Err(Error::SingularCovariance(min));
    }
    sym_matrix_function(m, |v| 1.0 / v.sqrt())
}

/// `M^{1/2}` for symmetric positive semi-definite `M`.
pub fn sqrt_spd(m: &Matrix) -> Result<Matrix> {
    sym_matrix_function(m, |v| v.max(0.0).sqrt())
}

/// Log-determinant of a symmetric positive definite matrix.
pub fn log_det_spd(m: &Matrix) -> Result<f64> {
    let eig = symmetric_eigen(m)?;
    if !(eig.values[0] > 0.0) {
        return Err(Error::SingularCovariance(eig.values[0]));
    }
    Ok(eig.values.iter().map(|v| v.ln()).sum())
}

/// Completes the unit vector `theta` to an orthonormal basis; the returned
/// `n-1` vectors span `theta^⊥`.
pub fn orthonormal_complement(theta: &[f64]) -> Vec<Vec<f64>> {
    let n = theta.len();
    let mut basis: Vec<Vec<f64>> = vec![theta.to_vec()];
    let mut candidates: Vec<usize> = (0..n).collect();
    // Start from the axes least aligned with theta for conditioning.
    candidates.sort_by(|&i, &j| theta[i].abs().total_cmp(&theta[j].abs()));
    for &axis in &candidates {
        if basis.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let nv = norm2(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            basis.push(v);
        }
    }
    basis.remove(0);
    basis
}

/// Orthonormalizes the columns of a square matrix (modified Gram-Schmidt).
/// Applied to a Gaussian matrix this gives a Haar-random orthogonal matrix
/// up to column signs, which is all the invariance tests need.
pub fn gram_schmidt_columns(m: &Matrix) -> Result<Matrix> {
    let n = m.rows;
    let mut cols: Vec<Vec<f64>> = (0..m.cols).map(|j| (0..n).map(|i| m[(i, j)]).collect()).collect();
    for j in 0..cols.len() {
        for k in 0..j {
            let c = dot(&cols[j], &cols[k]);
            let (head, tail) = cols.split_at_mut(j);
            for (a, b) in tail[0].iter_mut().zip(&head[k]) {
                *a -= c * b;
            }
        }
        let nv = norm2(&cols[j]);
        if nv < 1e-12 {
            return Err(Error::SingularCovariance(nv));
        }
        cols[j].iter_mut().for_each(|x| *x /= nv);
    }
    let mut q = Matrix::zeros(n, m.cols);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            q[(i, j)] = c[i];
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_norm_is_one() {
        assert_eq!(operator_norm_sym(&Matrix::identity(5), 1e-12).unwrap(), 1.0);
    }

    #[test]
    fn diagonal_norm_is_largest_entry() {
        let m = Matrix::diag(&[1.0, 2.0, 3.0]);
        assert!((operator_norm_sym(&m, 1e-12).unwrap() - 3.0).abs() < 1e-14);
        let m = Matrix::diag(&[1.0, -4.0, 3.0]);
        assert!((operator_norm_sym(&m, 1e-12).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_unit_vector() {
        let z = [0.3, -0.5, 0.1, 0.7];
        let nz = norm2(&z);
        let z: Vec<f64> = z.iter().map(|v| v / nz).collect();
        let m = Matrix::outer(&z);
        assert!((operator_norm_sym(&m, 1e-12).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_symmetric_and_non_finite() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(operator_norm_sym(&m, 1e-9), Err(Error::NonSymmetric(_))));
        let m = Matrix::from_rows(&[vec![f64::NAN, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(operator_norm_sym(&m, 1e-9), Err(Error::NonFinite(_))));
        assert!(operator_norm_sym(&Matrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn power_iteration_agrees_with_jacobi() {
        let m = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, -1.0],
        ])
        .unwrap();
        let j = operator_norm_sym(&m, 1e-12).unwrap();
        let p = operator_norm_power(&m, 500);
        assert!((j - p).abs() < 1e-9, "{j} vs {p}");
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let m = Matrix::from_rows(&[
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ])
        .unwrap();
        let r = sym_matrix_function(&m, |v| v).unwrap();
        assert!(r.sub(&m).unwrap().frobenius() < 1e-12);
        let s = inv_sqrt_spd(&m).unwrap();
        let back = s.matmul(&s).unwrap().matmul(&m).unwrap();
        assert!(back.sub(&Matrix::identity(3)).unwrap().frobenius() < 1e-12);
    }

    #[test]
    fn inverse_and_determinant() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!((m.determinant().unwrap() - 5.0).abs() < 1e-14);
        assert!((m.ln_abs_determinant().unwrap() - 5f64.ln()).abs() < 1e-14);
        let big = Matrix::identity(300).scale(16.0);
        assert!(big.determinant().unwrap().is_infinite());
        assert!((big.ln_abs_determinant().unwrap() - 300.0 * 16f64.ln()).abs() < 1e-9);
        let inv = m.inverse().unwrap();
        let id = m.matmul(&inv).unwrap();
        assert!(id.sub(&Matrix::identity(2)).unwrap().frobenius() < 1e-14);
        let sing = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(sing.inverse().is_err());
    }

    #[test]
    fn complement_is_orthonormal() {
        let theta = [0.6, 0.0, 0.8];
        let b = orthonormal_complement(&theta);
        assert_eq!(b.len(), 2);
        for v in &b {
            assert!(dot(v, &theta).abs() < 1e-14);
            assert!((norm2(v) - 1.0).abs() < 1e-14);
        }
        assert!(dot(&b[0], &b[1]).abs() < 1e-14);
    }
}
