use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// `x ↦ A x + b` with invertible `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub linear: Matrix,
    pub shift: Vec<f64>,
}

impl AffineMap {
    pub fn new(linear: Matrix, shift: Vec<f64>) -> Result<Self> {
        if !linear.is_square() {
            return Err(Error::DimensionMismatch { expected: linear.rows(), got: linear.cols() });
        }
        if shift.len() != linear.rows() {
            return Err(Error::DimensionMismatch { expected: linear.rows(), got: shift.len() });
        }
        if !linear.is_finite() || shift.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine map"));
        }
        let ln_det = linear.ln_abs_determinant()?;
        if !ln_det.is_finite() {
            return Err(Error::InvalidArgument("affine map is not invertible".into()));
        }
        Ok(Self { linear, shift })
    }

    pub fn linear(linear: Matrix) -> Result<Self> {
        let n = linear.rows();
        Self::new(linear, vec![0.0; n])
    }

    pub fn identity(n: usize) -> Self {
        Self { linear: Matrix::identity(n), shift: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.linear.matvec(x);
        for (yi, bi) in y.iter_mut().zip(&self.shift) {
            *yi += bi;
        }
        y
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.linear.matvec_into(x, out);
        for (yi, bi) in out.iter_mut().zip(&self.shift) {
            *yi += bi;
        }
    }

    /// Diagonal of `A` when every off-diagonal entry is exactly zero.
    pub fn as_diagonal(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        for i in 0..n {
            if self.linear.row(i).iter().enumerate().any(|(j, v)| j != i && *v != 0.0) {
                return None;
            }
        }
        Some((0..n).map(|i| self.linear[(i, i)]).collect())
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = self.linear.inverse()?;
        let shift = inv.matvec(&self.shift).into_iter().map(|v| -v).collect();
        Ok(AffineMap { linear: inv, shift })
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> Result<AffineMap> {
        let linear = self.linear.matmul(&inner.linear)?;
        let shift = self.apply(&inner.shift);
        Ok(AffineMap { linear, shift })
    }

    pub fn determinant(&self) -> f64 {
        self.linear.determinant().expect("square by construction")
    }

    pub fn ln_abs_determinant(&self) -> f64 {
        self.linear.ln_abs_determinant().expect("square by construction")
    }

    pub fn condition_number(&self) -> f64 {
        self.linear.condition_number().unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.5, 3.0]]).unwrap();
        let t = AffineMap::new(a, vec![1.0, -2.0]).unwrap();
        let x = [0.3, 0.7];
        let back = t.inverse().unwrap().apply(&t.apply(&x));
        assert!((back[0] - x[0]).abs() < 1e-14 && (back[1] - x[1]).abs() < 1e-14);
    }

    #[test]
    fn singular_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(AffineMap::linear(a).is_err());
    }
}
