//! Fully connected scalar-output network with tanh hidden layers: the
//! building block behind both the classifier and the PDE surrogate.
//!
//! Besides the usual forward/backward pass, the network supports a
//! forward-mode pass that carries two input tangents through every layer,
//! yielding the exact partial derivatives of the output with respect to the
//! two inputs. The corresponding backward pass differentiates a function of
//! (output, output-tangents) with respect to the weights, so losses built on
//! input derivatives still get exact weight gradients.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ModelError, Segment};

/// Layer widths from input to output, e.g. `[2, 16, 16, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetArch {
    widths: Vec<usize>,
}

/// Cached activations of one plain forward pass. `acts[0]` is the input,
/// `acts[l]` the post-activation output of layer `l`.
pub struct ForwardCache {
    acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> f64 {
        self.acts[self.acts.len() - 1][0]
    }
}

/// Cached state of one dual forward pass: activations plus pre- and
/// post-activation tangents (two tangent directions per unit).
pub struct DualCache {
    acts: Vec<Vec<f64>>,
    dz: Vec<Vec<[f64; 2]>>,
    da: Vec<Vec<[f64; 2]>>,
}

impl DualCache {
    pub fn output(&self) -> f64 {
        self.acts[self.acts.len() - 1][0]
    }

    /// Exact derivatives of the output with respect to the two inputs.
    pub fn output_tangents(&self) -> [f64; 2] {
        self.dz[self.dz.len() - 1][0]
    }
}

impl NetArch {
    pub fn new(widths: &[usize]) -> Result<Self, ModelError> {
        if widths.len() < 2 {
            return Err(ModelError::InvalidSpec(
                "network needs at least input and output layers".into(),
            ));
        }
        if widths.contains(&0) {
            return Err(ModelError::InvalidSpec("zero-width layer".into()));
        }
        if *widths.last().unwrap() != 1 {
            return Err(ModelError::InvalidSpec(
                "output layer must have width 1".into(),
            ));
        }
        Ok(Self {
            widths: widths.to_vec(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn layer_count(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.widths
            .windows(2)
            .map(|w| w[1] * w[0] + w[1])
            .sum()
    }

    pub fn layout(&self) -> Vec<Segment> {
        let mut segs = Vec::new();
        for (l, w) in self.widths.windows(2).enumerate() {
            segs.push(Segment {
                label: format!("w{}", l + 1),
                rows: w[1],
                cols: w[0],
            });
            segs.push(Segment {
                label: format!("b{}", l + 1),
                rows: w[1],
                cols: 1,
            });
        }
        segs
    }

    /// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], seeded.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut theta = Vec::with_capacity(self.param_count());
        for w in self.widths.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[1] * w[0] + w[1] {
                theta.push(rng.gen_range(-bound..=bound));
            }
        }
        theta
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<(), ModelError> {
        if theta.len() != self.param_count() {
            return Err(ModelError::ShapeMismatch {
                expected: self.param_count(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    fn layer_params<'a>(&self, theta: &'a [f64], layer: usize) -> (&'a [f64], &'a [f64]) {
        let mut off = 0;
        for l in 0..layer {
            off += self.widths[l + 1] * self.widths[l] + self.widths[l + 1];
        }
        let (nin, nout) = (self.widths[layer], self.widths[layer + 1]);
        let w = &theta[off..off + nout * nin];
        let b = &theta[off + nout * nin..off + nout * nin + nout];
        (w, b)
    }

    fn layer_params_mut<'a>(
        &self,
        grad: &'a mut [f64],
        layer: usize,
    ) -> (&'a mut [f64], &'a mut [f64]) {
        let mut off = 0;
        for l in 0..layer {
            off += self.widths[l + 1] * self.widths[l] + self.widths[l + 1];
        }
        let (nin, nout) = (self.widths[layer], self.widths[layer + 1]);
        let (w, rest) = grad[off..off + nout * nin + nout].split_at_mut(nout * nin);
        (w, rest)
    }

    pub fn forward(&self, theta: &[f64], input: &[f64]) -> f64 {
        self.forward_cached(theta, input).output()
    }

    pub fn forward_cached(&self, theta: &[f64], input: &[f64]) -> ForwardCache {
        debug_assert_eq!(input.len(), self.input_dim());
        let last = self.layer_count() - 1;
        let mut acts = Vec::with_capacity(self.widths.len());
        acts.push(input.to_vec());
        for l in 0..self.layer_count() {
            let (w, b) = self.layer_params(theta, l);
            let nin = self.widths[l];
            let prev = &acts[l];
            let mut a = Vec::with_capacity(self.widths[l + 1]);
            for j in 0..self.widths[l + 1] {
                let mut z = b[j];
                let row = &w[j * nin..(j + 1) * nin];
                for (wi, xi) in row.iter().zip(prev) {
                    z += wi * xi;
                }
                a.push(if l < last { z.tanh() } else { z });
            }
            acts.push(a);
        }
        ForwardCache { acts }
    }

    /// Accumulates into `grad` the weight gradient of `g_out * output`.
    pub fn backward(&self, theta: &[f64], cache: &ForwardCache, g_out: f64, grad: &mut [f64]) {
        let mut delta = vec![g_out];
        for l in (0..self.layer_count()).rev() {
            let (w, _) = self.layer_params(theta, l);
            let nin = self.widths[l];
            let prev = &cache.acts[l];
            {
                let (gw, gb) = self.layer_params_mut(grad, l);
                for (j, &dj) in delta.iter().enumerate() {
                    gb[j] += dj;
                    let row = &mut gw[j * nin..(j + 1) * nin];
                    for (gi, xi) in row.iter_mut().zip(prev) {
                        *gi += dj * xi;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let mut prev_delta = vec![0.0; nin];
            for (j, &dj) in delta.iter().enumerate() {
                let row = &w[j * nin..(j + 1) * nin];
                for (pi, wi) in prev_delta.iter_mut().zip(row) {
                    *pi += wi * dj;
                }
            }
            // Through tanh of the previous layer: phi' = 1 - a^2.
            for (pi, ai) in prev_delta.iter_mut().zip(prev) {
                *pi *= 1.0 - ai * ai;
            }
            delta = prev_delta;
        }
    }

    /// Forward pass with two input tangents seeded as the identity, so the
    /// output tangents are the exact derivatives d(out)/d(input_0) and
    /// d(out)/d(input_1). Requires `input_dim == 2`.
    pub fn forward_dual(&self, theta: &[f64], x: f64, t: f64) -> DualCache {
        debug_assert_eq!(self.input_dim(), 2);
        let last = self.layer_count() - 1;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.widths.len());
        let mut dz: Vec<Vec<[f64; 2]>> = Vec::with_capacity(self.layer_count());
        let mut da: Vec<Vec<[f64; 2]>> = Vec::with_capacity(self.widths.len());
        acts.push(vec![x, t]);
        da.push(vec![[1.0, 0.0], [0.0, 1.0]]);
        for l in 0..self.layer_count() {
            let (w, b) = self.layer_params(theta, l);
            let nin = self.widths[l];
            let prev = &acts[l];
            let prev_d = &da[l];
            let mut a = Vec::with_capacity(self.widths[l + 1]);
            let mut z_tan = Vec::with_capacity(self.widths[l + 1]);
            let mut a_tan = Vec::with_capacity(self.widths[l + 1]);
            for j in 0..self.widths[l + 1] {
                let row = &w[j * nin..(j + 1) * nin];
                let mut z = b[j];
                let mut d = [0.0; 2];
                for i in 0..nin {
                    z += row[i] * prev[i];
                    d[0] += row[i] * prev_d[i][0];
                    d[1] += row[i] * prev_d[i][1];
                }
                if l < last {
                    let y = z.tanh();
                    let phi = 1.0 - y * y;
                    a.push(y);
                    a_tan.push([phi * d[0], phi * d[1]]);
                } else {
                    a.push(z);
                    a_tan.push(d);
                }
                z_tan.push(d);
            }
            acts.push(a);
            dz.push(z_tan);
            da.push(a_tan);
        }
        DualCache { acts, dz, da }
    }

    /// Accumulates into `grad` the weight gradient of
    /// `g_out * output + g_tan[0] * d(out)/dx + g_tan[1] * d(out)/dt`.
    pub fn backward_dual(
        &self,
        theta: &[f64],
        cache: &DualCache,
        g_out: f64,
        g_tan: [f64; 2],
        grad: &mut [f64],
    ) {
        let mut gz = vec![g_out];
        let mut gdz = vec![g_tan];
        for l in (0..self.layer_count()).rev() {
            let (w, _) = self.layer_params(theta, l);
            let nin = self.widths[l];
            let prev = &cache.acts[l];
            let prev_da = &cache.da[l];
            {
                let (gw, gb) = self.layer_params_mut(grad, l);
                for j in 0..gz.len() {
                    gb[j] += gz[j];
                    let row = &mut gw[j * nin..(j + 1) * nin];
                    for i in 0..nin {
                        row[i] +=
                            gz[j] * prev[i] + gdz[j][0] * prev_da[i][0] + gdz[j][1] * prev_da[i][1];
                    }
                }
            }
            if l == 0 {
                break;
            }
            let mut ga = vec![0.0; nin];
            let mut gda = vec![[0.0; 2]; nin];
            for j in 0..gz.len() {
                let row = &w[j * nin..(j + 1) * nin];
                for i in 0..nin {
                    ga[i] += row[i] * gz[j];
                    gda[i][0] += row[i] * gdz[j][0];
                    gda[i][1] += row[i] * gdz[j][1];
                }
            }
            // Through tanh: a = tanh(z), da = phi * dz with phi = 1 - a^2,
            // so d(phi)/dz = -2 a phi enters via the cached pre-activation
            // tangents of the previous layer.
            let prev_dz = &cache.dz[l - 1];
            let mut next_gz = vec![0.0; nin];
            let mut next_gdz = vec![[0.0; 2]; nin];
            for i in 0..nin {
                let a = prev[i];
                let phi = 1.0 - a * a;
                next_gz[i] = ga[i] * phi
                    + (gda[i][0] * prev_dz[i][0] + gda[i][1] * prev_dz[i][1]) * (-2.0 * a * phi);
                next_gdz[i] = [gda[i][0] * phi, gda[i][1] * phi];
            }
            gz = next_gz;
            gdz = next_gdz;
        }
    }
}
