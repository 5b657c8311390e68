//! Quadratic test model `L(theta) = theta' A theta / 2` with symmetric `A`:
//! gradient, Hessian, and spectrum are known in closed form, which makes it
//! the reference problem for every curvature estimator in the crate.

use super::{GradModel, LossModel, ModelError};

pub struct QuadraticModel {
    dim: usize,
    diag: Option<Vec<f64>>,
    dense: Option<Vec<Vec<f64>>>,
}

impl QuadraticModel {
    pub fn diagonal(diag: Vec<f64>) -> Self {
        Self {
            dim: diag.len(),
            diag: Some(diag),
            dense: None,
        }
    }

    /// Dense symmetric Hessian. Panics on a non-square or asymmetric matrix.
    pub fn dense(a: Vec<Vec<f64>>) -> Self {
        let n = a.len();
        for (i, row) in a.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (j, &entry) in row.iter().enumerate() {
                assert!(
                    (entry - a[j][i]).abs() <= 1e-12 * (1.0 + entry.abs()),
                    "matrix must be symmetric"
                );
            }
        }
        Self {
            dim: n,
            diag: None,
            dense: Some(a),
        }
    }

    fn apply(&self, theta: &[f64]) -> Vec<f64> {
        if let Some(d) = &self.diag {
            d.iter().zip(theta).map(|(di, ti)| di * ti).collect()
        } else {
            let a = self.dense.as_ref().unwrap();
            a.iter()
                .map(|row| row.iter().zip(theta).map(|(r, t)| r * t).sum())
                .collect()
        }
    }
}

impl LossModel for QuadraticModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, theta: &[f64]) -> Result<f64, ModelError> {
        if theta.len() != self.dim {
            return Err(ModelError::ShapeMismatch {
                expected: self.dim,
                got: theta.len(),
            });
        }
        let at = self.apply(theta);
        Ok(0.5 * at.iter().zip(theta).map(|(a, t)| a * t).sum::<f64>())
    }
}

impl GradModel for QuadraticModel {
    fn grad(&self, theta: &[f64]) -> Result<Vec<f64>, ModelError> {
        if theta.len() != self.dim {
            return Err(ModelError::ShapeMismatch {
                expected: self.dim,
                got: theta.len(),
            });
        }
        Ok(self.apply(theta))
    }
}
