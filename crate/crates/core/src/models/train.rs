//! Full-batch Adam. Deterministic given the initial iterate: the losses in
//! this crate are pure functions, so no data order or minibatch state exists.

use super::{GradModel, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamOptions {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub steps: usize,
}

impl Default for AdamOptions {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            steps: 1000,
        }
    }
}

impl AdamOptions {
    pub fn with_lr_and_steps(lr: f64, steps: usize) -> Self {
        Self {
            lr,
            steps,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub theta: Vec<f64>,
    /// Loss at the start of each step plus the final loss; length `steps + 1`.
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("training diverged at step {step} (loss became non-finite)")]
    Diverged {
        step: usize,
        /// Last iterate with a finite loss, so callers can inspect or retry.
        last_finite: Vec<f64>,
        last_loss: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn train(
    model: &dyn GradModel,
    init: &[f64],
    opts: &AdamOptions,
) -> Result<TrainResult, TrainError> {
    if opts.steps == 0 {
        return Err(TrainError::Model(ModelError::InvalidSpec(
            "steps must be >= 1".into(),
        )));
    }
    let dim = init.len();
    let mut theta = init.to_vec();
    let mut m = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let mut trace = Vec::with_capacity(opts.steps + 1);

    let mut last_finite = theta.clone();
    let mut last_loss = f64::INFINITY;
    for step in 1..=opts.steps {
        let loss = match model.loss(&theta) {
            Ok(l) if l.is_finite() => l,
            Ok(_) | Err(ModelError::NonFinite { .. }) => {
                return Err(TrainError::Diverged {
                    step,
                    last_finite,
                    last_loss,
                });
            }
            Err(e) => return Err(e.into()),
        };
        last_finite.copy_from_slice(&theta);
        last_loss = loss;
        trace.push(loss);

        let grad = match model.grad(&theta) {
            Ok(g) => g,
            Err(ModelError::NonFinite { .. }) => {
                return Err(TrainError::Diverged {
                    step,
                    last_finite,
                    last_loss,
                });
            }
            Err(e) => return Err(e.into()),
        };
        let bc1 = 1.0 - opts.beta1.powi(step as i32);
        let bc2 = 1.0 - opts.beta2.powi(step as i32);
        for i in 0..dim {
            m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * grad[i];
            v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * grad[i] * grad[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            theta[i] -= opts.lr * m_hat / (v_hat.sqrt() + opts.epsilon);
        }
    }
    let final_loss = match model.loss(&theta) {
        Ok(l) if l.is_finite() => l,
        _ => {
            return Err(TrainError::Diverged {
                step: opts.steps,
                last_finite,
                last_loss,
            });
        }
    };
    trace.push(final_loss);
    Ok(TrainResult {
        theta,
        loss_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LossModel, MlpModel, MlpSpec, QuadraticModel};

    #[test]
    fn quadratic_bowl_converges() {
        let model = QuadraticModel::diagonal(vec![1.0; 8]);
        let init = vec![0.9, -0.4, 0.7, -0.8, 0.2, 0.5, -0.6, 0.3];
        let opts = AdamOptions::with_lr_and_steps(0.01, 2000);
        let result = train(&model, &init, &opts).unwrap();
        let norm: f64 = result.theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        assert!(norm < 1e-3, "final norm {norm}");
        assert_eq!(result.loss_trace.len(), 2001);
    }

    #[test]
    fn training_is_deterministic() {
        let model = MlpModel::new(&MlpSpec::default()).unwrap();
        let init = model.init_params(42).values;
        let opts = AdamOptions::with_lr_and_steps(0.01, 50);
        let a = train(&model, &init, &opts).unwrap();
        let b = train(&model, &init, &opts).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn mlp_reaches_low_training_loss() {
        let model = MlpModel::new(&MlpSpec::default()).unwrap();
        let init = model.init_params(0).values;
        let opts = AdamOptions::with_lr_and_steps(0.02, 400);
        let result = train(&model, &init, &opts).unwrap();
        let final_loss = model.loss(&result.theta).unwrap();
        assert!(final_loss < 0.1, "final loss {final_loss}");
    }

    #[test]
    fn divergence_carries_last_finite_iterate() {
        // Gradient ascent in disguise: huge learning rate on a steep
        // quadratic overflows quickly.
        let model = QuadraticModel::diagonal(vec![1e150, 1e150]);
        let opts = AdamOptions {
            lr: 1e140,
            ..AdamOptions::with_lr_and_steps(1e140, 50)
        };
        match train(&model, &[1.0, 1.0], &opts) {
            Err(TrainError::Diverged { last_finite, .. }) => {
                assert!(last_finite.iter().all(|t| t.is_finite()));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn zero_steps_rejected() {
        let model = QuadraticModel::diagonal(vec![1.0]);
        let opts = AdamOptions {
            steps: 0,
            ..AdamOptions::default()
        };
        assert!(train(&model, &[1.0], &opts).is_err());
    }
}
