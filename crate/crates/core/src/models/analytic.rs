//! Closed-form 2D test fields, evaluated directly on an image grid. These
//! bypass model sampling entirely and exist so the topology pipeline can be
//! exercised against functions whose minima are known analytically.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::field::ScalarField;
use crate::sampler::{self, GridMetadata, LandscapeGrid, Representation};

use super::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticKind {
    /// Four-well polynomial benchmark; all four minima have value 0.
    Himmelblau,
    /// Negated sum of `components` random Gaussian bumps.
    GaussianMixture { components: usize, seed: u64 },
    Constant(f64),
}

impl AnalyticKind {
    pub fn label(&self) -> String {
        match self {
            AnalyticKind::Himmelblau => "himmelblau".into(),
            AnalyticKind::GaussianMixture { components, seed } => {
                format!("gaussian_mixture(m={components}, seed={seed})")
            }
            AnalyticKind::Constant(c) => format!("constant({c})"),
        }
    }
}

pub fn himmelblau(x: f64, y: f64) -> f64 {
    let a = x * x + y - 11.0;
    let b = x + y * y - 7.0;
    a * a + b * b
}

struct GaussianMixture {
    centers: Vec<[f64; 2]>,
    inv_two_sigma_sq: Vec<f64>,
    amplitudes: Vec<f64>,
}

impl GaussianMixture {
    fn new(components: usize, seed: u64, lo: f64, hi: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let span = hi - lo;
        let mut centers = Vec::with_capacity(components);
        let mut inv = Vec::with_capacity(components);
        let mut amp = Vec::with_capacity(components);
        for _ in 0..components {
            let cx = rng.gen_range(lo..hi);
            let cy = rng.gen_range(lo..hi);
            let sigma = rng.gen_range(0.08..0.25) * span;
            let a = rng.gen_range(0.5..1.5);
            centers.push([cx, cy]);
            inv.push(1.0 / (2.0 * sigma * sigma));
            amp.push(a);
        }
        Self {
            centers,
            inv_two_sigma_sq: inv,
            amplitudes: amp,
        }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.centers.len() {
            let dx = x - self.centers[i][0];
            let dy = y - self.centers[i][1];
            total -= self.amplitudes[i] * (-(dx * dx + dy * dy) * self.inv_two_sigma_sq[i]).exp();
        }
        total
    }
}

/// Evaluates an analytic field on a square grid (`resolution` points per
/// axis over `[lo, hi]` in both coordinates) and packages it as a landscape
/// grid, so it flows through the same representation and clipping stages as
/// sampled landscapes.
pub fn analytic_grid(
    kind: &AnalyticKind,
    resolution: usize,
    range: (f64, f64),
) -> Result<LandscapeGrid, ModelError> {
    let (lo, hi) = range;
    if resolution < 2 {
        return Err(ModelError::InvalidSpec(
            "analytic field needs resolution >= 2 per axis".into(),
        ));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(ModelError::InvalidSpec("invalid analytic range".into()));
    }
    if let AnalyticKind::Constant(c) = kind {
        if !c.is_finite() {
            return Err(ModelError::InvalidSpec("constant must be finite".into()));
        }
    }
    let mixture = match kind {
        AnalyticKind::GaussianMixture { components, seed } => {
            if *components == 0 {
                return Err(ModelError::InvalidSpec(
                    "mixture needs at least one component".into(),
                ));
            }
            Some(GaussianMixture::new(*components, *seed, lo, hi))
        }
        _ => None,
    };
    let eval = |x: f64, y: f64| -> f64 {
        match kind {
            AnalyticKind::Himmelblau => himmelblau(x, y),
            AnalyticKind::Constant(c) => *c,
            AnalyticKind::GaussianMixture { .. } => mixture.as_ref().unwrap().eval(x, y),
        }
    };

    let axis = sampler::linspace(lo, hi, resolution);
    let mut losses = Vec::with_capacity(resolution * resolution);
    for &x in &axis {
        for &y in &axis {
            losses.push(eval(x, y));
        }
    }
    let center_loss = if resolution % 2 == 1 {
        let mid = resolution / 2;
        losses[mid * resolution + mid]
    } else {
        eval(0.5 * (lo + hi), 0.5 * (lo + hi))
    };
    let metadata = GridMetadata {
        model: Some(kind.label()),
        directions: None,
        ranges: [[lo, hi], [lo, hi]],
        resolution: [resolution, resolution],
        center_loss,
        nonfinite_replaced: 0,
        clipped_cells: 0,
        clip_quantile: None,
    };
    Ok(LandscapeGrid {
        alphas1: axis.clone(),
        alphas2: axis,
        losses,
        center_loss,
        metadata,
    })
}

/// Analytic field as an 8-connected image-grid scalar field.
pub fn analytic_field(
    kind: &AnalyticKind,
    resolution: usize,
    range: (f64, f64),
) -> Result<ScalarField, ModelError> {
    let grid = analytic_grid(kind, resolution, range)?;
    sampler::to_field(&grid, &Representation::Image8)
        .map_err(|e| ModelError::InvalidSpec(e.to_string()))
}
