//! Tanh MLP classifier on a synthetic two-blob dataset, with squared-error
//! or logistic (cross-entropy) loss and an exact backpropagation gradient.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::net::NetArch;
use super::{GradModel, LossModel, ModelError, ParameterVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Mean squared error against targets in {-1, +1}.
    SquaredError,
    /// Mean binary cross-entropy with logits against targets in {0, 1}.
    CrossEntropy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    /// Full width chain including the 2D input and scalar output,
    /// e.g. `[2, 16, 16, 1]`. At least one hidden layer.
    pub layer_widths: Vec<usize>,
    pub loss: LossKind,
    /// Synthetic dataset size (two Gaussian blobs, one per class).
    pub n_points: usize,
    pub data_seed: u64,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self {
            layer_widths: vec![2, 16, 16, 1],
            loss: LossKind::SquaredError,
            n_points: 200,
            data_seed: 0,
        }
    }
}

impl MlpSpec {
    fn arch(&self) -> Result<NetArch, ModelError> {
        if self.layer_widths.len() < 3 {
            return Err(ModelError::InvalidSpec(
                "classifier needs at least one hidden layer".into(),
            ));
        }
        if self.layer_widths[0] != 2 {
            return Err(ModelError::InvalidSpec(
                "classifier input width must be 2".into(),
            ));
        }
        NetArch::new(&self.layer_widths)
    }
}

pub struct MlpModel {
    arch: NetArch,
    loss_kind: LossKind,
    inputs: Vec<[f64; 2]>,
    targets: Vec<f64>,
}

impl MlpModel {
    pub fn new(spec: &MlpSpec) -> Result<Self, ModelError> {
        let arch = spec.arch()?;
        if spec.n_points == 0 {
            return Err(ModelError::InvalidSpec("empty dataset".into()));
        }
        // Two Gaussian blobs; class alternates with the point index so the
        // dataset is balanced up to rounding.
        let mut rng = ChaCha8Rng::seed_from_u64(spec.data_seed);
        let centers = [[-1.5, -1.5], [1.5, 1.5]];
        let sigma = 0.8;
        let mut inputs = Vec::with_capacity(spec.n_points);
        let mut targets = Vec::with_capacity(spec.n_points);
        for i in 0..spec.n_points {
            let class = i % 2;
            let gx: f64 = StandardNormal.sample(&mut rng);
            let gy: f64 = StandardNormal.sample(&mut rng);
            inputs.push([
                centers[class][0] + sigma * gx,
                centers[class][1] + sigma * gy,
            ]);
            targets.push(match spec.loss {
                LossKind::SquaredError => {
                    if class == 0 {
                        -1.0
                    } else {
                        1.0
                    }
                }
                LossKind::CrossEntropy => class as f64,
            });
        }
        Ok(Self {
            arch,
            loss_kind: spec.loss,
            inputs,
            targets,
        })
    }

    pub fn init_params(&self, seed: u64) -> ParameterVector {
        ParameterVector::new(self.arch.init_params(seed), self.arch.layout())
            .expect("init matches layout")
    }

    pub fn layout(&self) -> Vec<super::Segment> {
        self.arch.layout()
    }

    /// Fraction of training points classified correctly (sign for squared
    /// error, logit sign for cross-entropy).
    pub fn accuracy(&self, theta: &[f64]) -> Result<f64, ModelError> {
        self.arch.check_theta(theta)?;
        let mut hits = 0usize;
        for (x, &y) in self.inputs.iter().zip(&self.targets) {
            let out = self.arch.forward(theta, x);
            let predicted_positive = out > 0.0;
            let is_positive = match self.loss_kind {
                LossKind::SquaredError => y > 0.0,
                LossKind::CrossEntropy => y > 0.5,
            };
            if predicted_positive == is_positive {
                hits += 1;
            }
        }
        Ok(hits as f64 / self.inputs.len() as f64)
    }
}

fn softplus(z: f64) -> f64 {
    // Stable log(1 + exp(z)).
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LossModel for MlpModel {
    fn dim(&self) -> usize {
        self.arch.param_count()
    }

    fn loss(&self, theta: &[f64]) -> Result<f64, ModelError> {
        self.arch.check_theta(theta)?;
        let n = self.inputs.len() as f64;
        let mut total = 0.0;
        for (x, &y) in self.inputs.iter().zip(&self.targets) {
            let out = self.arch.forward(theta, x);
            total += match self.loss_kind {
                LossKind::SquaredError => (out - y) * (out - y),
                LossKind::CrossEntropy => softplus(out) - y * out,
            };
        }
        let loss = total / n;
        if !loss.is_finite() {
            return Err(ModelError::NonFinite {
                term: "classifier loss".into(),
            });
        }
        Ok(loss)
    }
}

impl GradModel for MlpModel {
    fn grad(&self, theta: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.arch.check_theta(theta)?;
        let n = self.inputs.len() as f64;
        let mut grad = vec![0.0; theta.len()];
        for (x, &y) in self.inputs.iter().zip(&self.targets) {
            let cache = self.arch.forward_cached(theta, x);
            let out = cache.output();
            let g_out = match self.loss_kind {
                LossKind::SquaredError => 2.0 * (out - y) / n,
                LossKind::CrossEntropy => (sigmoid(out) - y) / n,
            };
            self.arch.backward(theta, &cache, g_out, &mut grad);
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(ModelError::NonFinite {
                term: "classifier gradient".into(),
            });
        }
        Ok(grad)
    }
}
