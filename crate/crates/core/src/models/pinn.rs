//! Physics-informed loss for the 1D convection equation
//! `du/dt + beta * du/dx = 0` on `x in [0, 2*pi]`, `t in [0, T]`, with
//! initial condition `u(x, 0) = sin(x)` and a periodic boundary penalty.
//!
//! The loss over a tanh network `u_hat(x, t; theta)` has three terms:
//! mean squared initial-condition mismatch over uniformly spaced points,
//! the mean weighted squared PDE residual over seeded random collocation
//! points, and the mean squared periodicity mismatch
//! `(u_hat(0, t) - u_hat(2*pi, t))^2` over uniformly spaced times.
//!
//! Input derivatives inside the residual come from forward-mode tangent
//! propagation and are exact; the weight gradient is an exact reverse-mode
//! pass through the whole composite loss, including the tangent terms.
//! The analytic solution `sin(x - beta * t)` annihilates the residual, a
//! property the tests exercise through the [`SpaceTimeField`] seam.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::net::NetArch;
use super::{GradModel, LossModel, ModelError, ParameterVector};

pub const X_MAX: f64 = std::f64::consts::TAU;

fn initial_condition(x: f64) -> f64 {
    x.sin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvectionPinnSpec {
    /// Wave speed (convection coefficient). Must be positive.
    pub beta: f64,
    /// Full width chain, input `(x, t)` to scalar output.
    pub net_widths: Vec<usize>,
    /// Initial-condition points (uniform over `[0, 2*pi)`).
    pub n_u: usize,
    /// Collocation points (seeded uniform over the space-time domain).
    pub n_f: usize,
    /// Boundary time samples (uniform over `[0, T]`).
    pub n_b: usize,
    /// Time horizon T.
    pub t_max: f64,
    /// Seed for the collocation draw.
    pub seed: u64,
    /// Uniform residual weight, applied to every collocation point.
    pub residual_weight: f64,
}

impl Default for ConvectionPinnSpec {
    fn default() -> Self {
        Self {
            beta: 1.0,
            net_widths: vec![2, 16, 16, 1],
            n_u: 50,
            n_f: 400,
            n_b: 50,
            t_max: 1.0,
            seed: 0,
            residual_weight: 1.0,
        }
    }
}

impl ConvectionPinnSpec {
    fn validate(&self) -> Result<(), ModelError> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(ModelError::InvalidSpec("beta must be positive".into()));
        }
        if self.n_u == 0 || self.n_f == 0 || self.n_b == 0 {
            return Err(ModelError::InvalidSpec(
                "need at least one initial, collocation, and boundary point".into(),
            ));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(ModelError::InvalidSpec("t_max must be positive".into()));
        }
        if !(self.residual_weight.is_finite() && self.residual_weight > 0.0) {
            return Err(ModelError::InvalidSpec(
                "residual weight must be positive".into(),
            ));
        }
        if self.net_widths.first() != Some(&2) {
            return Err(ModelError::InvalidSpec(
                "network input width must be 2 (x, t)".into(),
            ));
        }
        Ok(())
    }
}

/// A differentiable function of space and time: value plus both partials.
/// Implemented by the network and by analytic reference solutions.
pub trait SpaceTimeField {
    /// Returns `(u, du/dx, du/dt)` at `(x, t)`.
    fn eval(&self, x: f64, t: f64) -> (f64, f64, f64);
}

/// The exact convection solution `sin(x - beta t)` for `h(x) = sin(x)`.
pub struct AnalyticConvectionSolution {
    pub beta: f64,
}

impl SpaceTimeField for AnalyticConvectionSolution {
    fn eval(&self, x: f64, t: f64) -> (f64, f64, f64) {
        let phase = x - self.beta * t;
        let c = phase.cos();
        (phase.sin(), c, -self.beta * c)
    }
}

/// The three loss terms, each finite and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinnTerms {
    pub data: f64,
    pub residual: f64,
    pub boundary: f64,
}

impl PinnTerms {
    pub fn total(&self) -> f64 {
        self.data + self.residual + self.boundary
    }
}

pub struct PinnModel {
    arch: NetArch,
    spec: ConvectionPinnSpec,
    initial_points: Vec<f64>,
    collocation: Vec<(f64, f64)>,
    boundary_times: Vec<f64>,
}

impl PinnModel {
    pub fn new(spec: &ConvectionPinnSpec) -> Result<Self, ModelError> {
        spec.validate()?;
        let arch = NetArch::new(&spec.net_widths)?;
        let initial_points: Vec<f64> = (0..spec.n_u)
            .map(|i| X_MAX * i as f64 / spec.n_u as f64)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let collocation: Vec<(f64, f64)> = (0..spec.n_f)
            .map(|_| {
                let x = rng.gen_range(0.0..X_MAX);
                let t = rng.gen_range(0.0..spec.t_max);
                (x, t)
            })
            .collect();
        let boundary_times: Vec<f64> = if spec.n_b == 1 {
            vec![0.0]
        } else {
            (0..spec.n_b)
                .map(|j| spec.t_max * j as f64 / (spec.n_b - 1) as f64)
                .collect()
        };
        Ok(Self {
            arch,
            spec: spec.clone(),
            initial_points,
            collocation,
            boundary_times,
        })
    }

    pub fn spec(&self) -> &ConvectionPinnSpec {
        &self.spec
    }

    pub fn init_params(&self, seed: u64) -> ParameterVector {
        ParameterVector::new(self.arch.init_params(seed), self.arch.layout())
            .expect("init matches layout")
    }

    pub fn layout(&self) -> Vec<super::Segment> {
        self.arch.layout()
    }

    /// Evaluates the loss terms of an arbitrary space-time field against this
    /// model's sample points — the seam through which reference solutions are
    /// pushed through the same quadrature as the network.
    pub fn terms_of_field<F: SpaceTimeField>(&self, field: &F) -> PinnTerms {
        let mut data = 0.0;
        for &x in &self.initial_points {
            let (u, _, _) = field.eval(x, 0.0);
            let d = u - initial_condition(x);
            data += d * d;
        }
        data /= self.spec.n_u as f64;

        let mut residual = 0.0;
        for &(x, t) in &self.collocation {
            let (_, ux, ut) = field.eval(x, t);
            let r = ut + self.spec.beta * ux;
            residual += self.spec.residual_weight * r * r;
        }
        residual /= self.spec.n_f as f64;

        let mut boundary = 0.0;
        for &t in &self.boundary_times {
            let (u0, _, _) = field.eval(0.0, t);
            let (u1, _, _) = field.eval(X_MAX, t);
            let d = u0 - u1;
            boundary += d * d;
        }
        boundary /= self.spec.n_b as f64;

        PinnTerms {
            data,
            residual,
            boundary,
        }
    }

    /// Loss terms of the network at `theta`, with the offending term named
    /// if anything overflows to a non-finite value.
    pub fn terms(&self, theta: &[f64]) -> Result<PinnTerms, ModelError> {
        self.arch.check_theta(theta)?;
        let terms = self.terms_of_field(&NetField {
            arch: &self.arch,
            theta,
        });
        for (value, name) in [
            (terms.data, "initial-condition term"),
            (terms.residual, "residual term"),
            (terms.boundary, "boundary term"),
        ] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { term: name.into() });
            }
        }
        Ok(terms)
    }

    /// Mean absolute error of the network against the analytic solution on a
    /// uniform evaluation grid (`nx` by `nt` points spanning the domain).
    pub fn mean_abs_error(&self, theta: &[f64], nx: usize, nt: usize) -> Result<f64, ModelError> {
        self.arch.check_theta(theta)?;
        let exact = AnalyticConvectionSolution {
            beta: self.spec.beta,
        };
        let mut total = 0.0;
        for i in 0..nx {
            let x = X_MAX * i as f64 / (nx - 1).max(1) as f64;
            for j in 0..nt {
                let t = self.spec.t_max * j as f64 / (nt - 1).max(1) as f64;
                let u = self.arch.forward(theta, &[x, t]);
                total += (u - exact.eval(x, t).0).abs();
            }
        }
        Ok(total / (nx * nt) as f64)
    }
}

struct NetField<'a> {
    arch: &'a NetArch,
    theta: &'a [f64],
}

impl SpaceTimeField for NetField<'_> {
    fn eval(&self, x: f64, t: f64) -> (f64, f64, f64) {
        let cache = self.arch.forward_dual(self.theta, x, t);
        let [ux, ut] = cache.output_tangents();
        (cache.output(), ux, ut)
    }
}

impl LossModel for PinnModel {
    fn dim(&self) -> usize {
        self.arch.param_count()
    }

    fn loss(&self, theta: &[f64]) -> Result<f64, ModelError> {
        Ok(self.terms(theta)?.total())
    }
}

impl GradModel for PinnModel {
    fn grad(&self, theta: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.arch.check_theta(theta)?;
        let mut grad = vec![0.0; theta.len()];

        let nu = self.spec.n_u as f64;
        for &x in &self.initial_points {
            let cache = self.arch.forward_cached(theta, &[x, 0.0]);
            let g = 2.0 * (cache.output() - initial_condition(x)) / nu;
            self.arch.backward(theta, &cache, g, &mut grad);
        }

        let nf = self.spec.n_f as f64;
        let beta = self.spec.beta;
        for &(x, t) in &self.collocation {
            let cache = self.arch.forward_dual(theta, x, t);
            let [ux, ut] = cache.output_tangents();
            let r = ut + beta * ux;
            let s = 2.0 * self.spec.residual_weight * r / nf;
            // d(residual)/d(du/dx) = s*beta, d(residual)/d(du/dt) = s.
            self.arch
                .backward_dual(theta, &cache, 0.0, [s * beta, s], &mut grad);
        }

        let nb = self.spec.n_b as f64;
        for &t in &self.boundary_times {
            let c0 = self.arch.forward_cached(theta, &[0.0, t]);
            let c1 = self.arch.forward_cached(theta, &[X_MAX, t]);
            let d = c0.output() - c1.output();
            self.arch.backward(theta, &c0, 2.0 * d / nb, &mut grad);
            self.arch.backward(theta, &c1, -2.0 * d / nb, &mut grad);
        }

        if grad.iter().any(|g| !g.is_finite()) {
            return Err(ModelError::NonFinite {
                term: "loss gradient".into(),
            });
        }
        Ok(grad)
    }
}
