//! Finite-difference gradients, used as an independent cross-check of every
//! analytic gradient in the crate (and by the `oracle-check` self-test).

use crate::parallel::indexed_map;

use super::{LossModel, ModelError};

/// Central-difference gradient with per-coordinate step
/// `rel_step * (1 + |theta_i|)`.
pub fn central_grad(
    model: &dyn LossModel,
    theta: &[f64],
    rel_step: f64,
) -> Result<Vec<f64>, ModelError> {
    difference_grad(model, theta, rel_step, true)
}

/// One-sided forward-difference gradient, same step rule. Mainly useful for
/// step-halving consistency checks against [`central_grad`].
pub fn forward_grad(
    model: &dyn LossModel,
    theta: &[f64],
    rel_step: f64,
) -> Result<Vec<f64>, ModelError> {
    difference_grad(model, theta, rel_step, false)
}

fn difference_grad(
    model: &dyn LossModel,
    theta: &[f64],
    rel_step: f64,
    central: bool,
) -> Result<Vec<f64>, ModelError> {
    if theta.len() != model.dim() {
        return Err(ModelError::ShapeMismatch {
            expected: model.dim(),
            got: theta.len(),
        });
    }
    let base = if central { None } else { Some(model.loss(theta)?) };
    let entries = indexed_map(theta.len(), |i| -> Result<f64, ModelError> {
        let h = rel_step * (1.0 + theta[i].abs());
        let mut probe = theta.to_vec();
        probe[i] = theta[i] + h;
        let up = model.loss(&probe)?;
        let down = if central {
            probe[i] = theta[i] - h;
            model.loss(&probe)?
        } else {
            base.unwrap()
        };
        let denom = if central { 2.0 * h } else { h };
        Ok((up - down) / denom)
    });
    entries.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::QuadraticModel;

    #[test]
    fn central_difference_is_exact_on_quadratics() {
        let model = QuadraticModel::diagonal(vec![1.0, 2.0, 3.0]);
        let theta = [0.5, -1.0, 2.0];
        let grad = central_grad(&model, &theta, 1e-5).unwrap();
        // grad = A theta for L = theta' A theta / 2.
        for (g, e) in grad.iter().zip([0.5, -2.0, 6.0]) {
            assert!((g - e).abs() < 1e-9);
        }
    }
}
