use nalgebra::{DMatrix, DVector};
use crate::error::{Error, Result};

const SPECIAL_TOL: f64 = 1e-12;

/// x ↦ A·x + b with A invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    shift: DVector<f64>,
    det: f64,
}

impl AffineMap {
    pub fn new(rows: &[Vec<f64>], shift: &[f64]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Singular("matrix must be square and non-empty".into()));
        }
        if shift.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: shift.len(),
            });
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_parts(matrix, DVector::from_column_slice(shift))
    }

    fn from_parts(matrix: DMatrix<f64>, shift: DVector<f64>) -> Result<Self> {
        if matrix.iter().chain(shift.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Singular("non-finite entry".into()));
        }
        let det = matrix.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Singular(format!("determinant {det}")));
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("matrix not invertible".into()))?;
        Ok(Self {
            matrix,
            inverse,
            shift,
            det,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_parts(DMatrix::identity(n, n), DVector::zeros(n)).expect("identity")
    }

    pub fn translation(shift: &[f64]) -> Self {
        let n = shift.len();
        Self::from_parts(DMatrix::identity(n, n), DVector::from_column_slice(shift))
            .expect("translation")
    }

    pub fn linear(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows, &vec![0.0; rows.len()])
    }

    /// c·x.
    pub fn scaling(n: usize, c: f64) -> Result<Self> {
        Self::from_parts(DMatrix::identity(n, n) * c, DVector::zeros(n))
    }

    /// Unit-determinant shear x₀ ↦ x₀ + λ·x₁ (needs n ≥ 2).
    pub fn shear(n: usize, lambda: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension { expected: 2, found: n });
        }
        let mut m = DMatrix::identity(n, n);
        m[(0, 1)] = lambda;
        Self::from_parts(m, DVector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn determinant(&self) -> f64 {
        self.det
    }

    /// |det| = 1 within 1e-12.
    pub fn is_volume_preserving(&self) -> bool {
        (self.det.abs() - 1.0).abs() <= SPECIAL_TOL
    }

    pub fn is_linear(&self) -> bool {
        self.shift.iter().all(|&v| v == 0.0)
    }

    pub fn matrix_rows(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)]).collect())
            .collect()
    }

    pub fn shift(&self) -> &[f64] {
        self.shift.as_slice()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * x[j]).sum::<f64>() + self.shift[i])
            .collect()
    }

    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let y: Vec<f64> = (0..n).map(|i| x[i] - self.shift[i]).collect();
        (0..n)
            .map(|i| (0..n).map(|j| self.inverse[(i, j)] * y[j]).sum())
            .collect()
    }

    /// Linear part applied without the shift.
    pub fn apply_linear(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn apply_linear_inverse(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.inverse[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Transpose of the linear part applied to x.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(j, i)] * x[j]).sum())
            .collect()
    }

    /// The map with the same linear part and no shift.
    pub fn linear_part(&self) -> Self {
        Self::from_parts(self.matrix.clone(), DVector::zeros(self.dim())).expect("linear part")
    }

    /// Composition self ∘ other.
    pub fn compose(&self, other: &AffineMap) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let m = &self.matrix * &other.matrix;
        let b = &self.matrix * &other.shift + &self.shift;
        Self::from_parts(m, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shear_is_special_and_inverts() {
        let s = AffineMap::shear(2, 1.0).unwrap();
        assert!(s.is_volume_preserving());
        let x = [0.3, -1.2];
        let y = s.apply(&x);
        assert_eq!(y, vec![0.3 - 1.2, -1.2]);
        let back = s.apply_inverse(&y);
        assert!((back[0] - x[0]).abs() < 1e-15 && (back[1] - x[1]).abs() < 1e-15);
    }

    #[test]
    fn singular_rejected() {
        assert!(AffineMap::linear(&[vec![1.0, 2.0], vec![2.0, 4.0]]).is_err());
        assert!(AffineMap::new(&[vec![1.0]], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn scaling_not_special() {
        let m = AffineMap::scaling(2, 2.0).unwrap();
        assert!(!m.is_volume_preserving());
        assert_eq!(m.determinant(), 4.0);
    }
}
