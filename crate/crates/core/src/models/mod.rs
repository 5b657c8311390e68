//! Differentiable loss functions over a flat parameter vector: a small MLP
//! classifier on synthetic blobs, a physics-informed loss for 1D convection,
//! quadratic test models, closed-form 2D fields, and an Adam trainer.

mod net;

pub mod analytic;
pub mod fd;
pub mod mlp;
pub mod pinn;
pub mod quadratic;
pub mod train;

use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use analytic::{analytic_field, analytic_grid, AnalyticKind};
pub use mlp::{LossKind, MlpModel, MlpSpec};
pub use net::NetArch;
pub use pinn::{ConvectionPinnSpec, PinnModel, PinnTerms, SpaceTimeField};
pub use quadratic::QuadraticModel;
pub use train::{train, AdamOptions, TrainError, TrainResult};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("parameter vector has {got} entries, model expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite value in {term}")]
    NonFinite { term: String },
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("parameter metadata sidecar {0} is missing or unreadable")]
    MetaMissing(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A loss as a pure function of a flat parameter vector. Implementations
/// must be deterministic: equal `theta` gives bit-equal loss.
pub trait LossModel: Sync {
    fn dim(&self) -> usize;
    fn loss(&self, theta: &[f64]) -> Result<f64, ModelError>;
}

/// A loss with a gradient.
pub trait GradModel: LossModel {
    fn grad(&self, theta: &[f64]) -> Result<Vec<f64>, ModelError>;
}

/// One named block of parameters (a weight matrix or bias vector).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub label: String,
    pub rows: usize,
    pub cols: usize,
}

/// A flat parameter vector with its layer layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    pub layout: Vec<Segment>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>, layout: Vec<Segment>) -> Result<Self, ModelError> {
        let expected: usize = layout.iter().map(|s| s.rows * s.cols).sum();
        if expected != values.len() {
            return Err(ModelError::ShapeMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite {
                term: format!("parameter {i}"),
            });
        }
        Ok(Self { values, layout })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct LayoutDescriptor {
    layout: Vec<Segment>,
}

fn layout_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("layout.json")
}

/// Writes a parameter vector as a one-column decimal CSV (full round-trip
/// precision) plus a layout-descriptor JSON sidecar.
pub fn save_params(params: &ParameterVector, csv_path: &Path) -> Result<(), ModelError> {
    let mut body = String::from("theta\n");
    for v in &params.values {
        writeln!(body, "{}", v).expect("string write");
    }
    std::fs::write(csv_path, body)?;
    let descriptor = LayoutDescriptor {
        layout: params.layout.clone(),
    };
    let json = serde_json::to_string_pretty(&descriptor)
        .map_err(|e| ModelError::InvalidSpec(e.to_string()))?;
    std::fs::write(layout_path(csv_path), json)?;
    Ok(())
}

/// Loads a parameter vector saved by [`save_params`]; round-trips exactly.
pub fn load_params(csv_path: &Path) -> Result<ParameterVector, ModelError> {
    let meta_file = layout_path(csv_path);
    let text = std::fs::read_to_string(&meta_file)
        .map_err(|_| ModelError::MetaMissing(meta_file.clone()))?;
    let descriptor: LayoutDescriptor =
        serde_json::from_str(&text).map_err(|e| ModelError::InvalidSpec(e.to_string()))?;
    let file = std::fs::File::open(csv_path)?;
    let mut values = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if idx == 0 {
            if trimmed != "theta" {
                return Err(ModelError::Parse {
                    line: 1,
                    message: format!("expected header `theta`, found `{trimmed}`"),
                });
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let v: f64 = trimmed.parse().map_err(|_| ModelError::Parse {
            line: idx + 1,
            message: format!("cannot parse `{trimmed}` as a number"),
        })?;
        values.push(v);
    }
    ParameterVector::new(values, descriptor.layout)
}
