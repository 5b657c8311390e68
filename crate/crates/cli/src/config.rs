//! Pipeline configuration: a flat key-value file with every key overridable
//! by a same-named `--key value` command-line flag (flags win). Unknown keys
//! are rejected. The resolved configuration (every known key with its
//! effective value) feeds a stable hash recorded in the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lossscape_core::directions::PowerIterOptions;
use lossscape_core::metrics::EsdOptions;
use lossscape_core::models::{AnalyticKind, ConvectionPinnSpec, LossKind, MlpSpec};
use lossscape_core::sampler::Representation;

use crate::CliError;

/// Every key the configuration understands, with its default value.
/// Defaults marked empty are "unset" (optional behavior).
const KNOWN_KEYS: &[(&str, &str)] = &[
    ("model", "pinn"),
    ("analytic.name", "himmelblau"),
    ("analytic.constant", "0"),
    ("analytic.components", "5"),
    ("analytic.seed", "1"),
    ("analytic.resolution", "201"),
    ("analytic.range", "-6,6"),
    ("mlp.widths", "2,16,16,1"),
    ("mlp.loss", "mse"),
    ("mlp.points", "200"),
    ("mlp.data_seed", "0"),
    ("pinn.beta", "1"),
    ("pinn.widths", "2,16,16,1"),
    ("pinn.n_u", "50"),
    ("pinn.n_f", "400"),
    ("pinn.n_b", "50"),
    ("pinn.t_max", "1"),
    ("pinn.seed", "0"),
    ("pinn.residual_weight", "1"),
    ("theta.source", "train"),
    ("theta.path", ""),
    ("train.steps", "1500"),
    ("train.lr", "0.001"),
    ("train.seed", "0"),
    ("directions.kind", "hessian"),
    ("directions.seed", "0"),
    ("directions.tol", "1e-6"),
    ("directions.max_iter", "100"),
    ("directions.fd_step", "1e-4"),
    ("directions.per_layer_norm", "false"),
    ("sampling.range1", ""),
    ("sampling.range2", ""),
    ("sampling.resolution", "41x41"),
    ("sampling.clip_quantile", ""),
    ("representation.kind", "image8"),
    ("representation.k", "8"),
    ("metrics.include_essential", "true"),
    ("metrics.trace_probes", "100"),
    ("metrics.seed", "0"),
    ("metrics.esd", "false"),
    ("metrics.esd_order", "30"),
    ("metrics.esd_probes", "10"),
    ("metrics.esd_bins", "100"),
    ("input", ""),
    ("output_dir", "out"),
    ("sweep.betas", "1,2,3,4,5,6,7,8,9,10"),
    ("demo.variants", "2,16,1;2,16,16,16,1"),
    ("demo.seeds", "0,123,123456,2023"),
];

#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        let values = KNOWN_KEYS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { values }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Config {
    /// Parses a `key = value` file (one pair per line, `#` comments).
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(format!("config line {}: expected `key = value`", idx + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| config_err(format!("config line {}: {e}", idx + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KNOWN_KEYS.iter().any(|(k, _)| *k == key) {
            return Err(config_err(format!("unknown configuration key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("unknown key {key} queried"))
    }

    /// Whether a key carries a value (optional keys default to empty).
    pub fn is_set(&self, key: &str) -> bool {
        !self.get(key).is_empty()
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)
            .parse::<T>()
            .map_err(|_| config_err(format!("key `{key}`: cannot parse `{}`", self.get(key))))
    }

    fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        self.get(key)
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<T>()
                    .map_err(|_| config_err(format!("key `{key}`: cannot parse `{}`", s.trim())))
            })
            .collect()
    }

    fn parse_bool(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(config_err(format!("key `{key}`: expected a boolean, got `{other}`"))),
        }
    }

    /// FNV-1a 64 over the resolved `key=value` lines; stable across runs and
    /// sensitive to every effective field.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for (k, v) in &self.values {
            for byte in k.bytes().chain(*b"=").chain(v.bytes()).chain(*b"\n") {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        format!("{h:016x}")
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.get("output_dir"))
    }

    pub fn input_path(&self) -> Result<PathBuf, CliError> {
        if !self.is_set("input") {
            return Err(config_err("`input` must point at a landscape CSV"));
        }
        Ok(PathBuf::from(self.get("input")))
    }

    pub fn model_kind(&self) -> Result<ModelKind, CliError> {
        match self.get("model") {
            "analytic" => Ok(ModelKind::Analytic),
            "mlp" => Ok(ModelKind::Mlp),
            "pinn" => Ok(ModelKind::Pinn),
            other => Err(config_err(format!(
                "key `model`: expected analytic | mlp | pinn, got `{other}`"
            ))),
        }
    }

    pub fn analytic_kind(&self) -> Result<AnalyticKind, CliError> {
        match self.get("analytic.name") {
            "himmelblau" => Ok(AnalyticKind::Himmelblau),
            "constant" => Ok(AnalyticKind::Constant(self.parse("analytic.constant")?)),
            "gaussian_mixture" => Ok(AnalyticKind::GaussianMixture {
                components: self.parse("analytic.components")?,
                seed: self.parse("analytic.seed")?,
            }),
            other => Err(config_err(format!("unknown analytic field `{other}`"))),
        }
    }

    pub fn analytic_resolution(&self) -> Result<usize, CliError> {
        self.parse("analytic.resolution")
    }

    pub fn analytic_range(&self) -> Result<(f64, f64), CliError> {
        let ends: Vec<f64> = self.parse_list("analytic.range")?;
        if ends.len() != 2 {
            return Err(config_err("key `analytic.range`: expected `lo,hi`"));
        }
        Ok((ends[0], ends[1]))
    }

    pub fn mlp_spec(&self) -> Result<MlpSpec, CliError> {
        Ok(MlpSpec {
            layer_widths: self.parse_list("mlp.widths")?,
            loss: match self.get("mlp.loss") {
                "mse" => LossKind::SquaredError,
                "cross_entropy" => LossKind::CrossEntropy,
                other => {
                    return Err(config_err(format!(
                        "key `mlp.loss`: expected mse | cross_entropy, got `{other}`"
                    )))
                }
            },
            n_points: self.parse("mlp.points")?,
            data_seed: self.parse("mlp.data_seed")?,
        })
    }

    pub fn pinn_spec(&self) -> Result<ConvectionPinnSpec, CliError> {
        Ok(ConvectionPinnSpec {
            beta: self.parse("pinn.beta")?,
            net_widths: self.parse_list("pinn.widths")?,
            n_u: self.parse("pinn.n_u")?,
            n_f: self.parse("pinn.n_f")?,
            n_b: self.parse("pinn.n_b")?,
            t_max: self.parse("pinn.t_max")?,
            seed: self.parse("pinn.seed")?,
            residual_weight: self.parse("pinn.residual_weight")?,
        })
    }

    pub fn theta_source(&self) -> Result<ThetaSource, CliError> {
        match self.get("theta.source") {
            "train" => Ok(ThetaSource::Train {
                steps: self.parse("train.steps")?,
                lr: self.parse("train.lr")?,
                seed: self.parse("train.seed")?,
            }),
            "load" => {
                if !self.is_set("theta.path") {
                    return Err(config_err("theta.source = load requires theta.path"));
                }
                Ok(ThetaSource::Load(PathBuf::from(self.get("theta.path"))))
            }
            other => Err(config_err(format!(
                "key `theta.source`: expected train | load, got `{other}`"
            ))),
        }
    }

    pub fn directions_kind(&self) -> Result<DirectionsKind, CliError> {
        match self.get("directions.kind") {
            "random" => Ok(DirectionsKind::Random {
                seed: self.parse("directions.seed")?,
            }),
            "hessian" => Ok(DirectionsKind::Hessian(PowerIterOptions {
                tol: self.parse("directions.tol")?,
                max_iter: self.parse("directions.max_iter")?,
                seed: self.parse("directions.seed")?,
                fd_step: self.parse("directions.fd_step")?,
            })),
            other => Err(config_err(format!(
                "key `directions.kind`: expected random | hessian, got `{other}`"
            ))),
        }
    }

    pub fn per_layer_norm(&self) -> Result<bool, CliError> {
        self.parse_bool("directions.per_layer_norm")
    }

    fn parse_range(&self, key: &str) -> Result<Option<(f64, f64)>, CliError> {
        if !self.is_set(key) {
            return Ok(None);
        }
        let ends: Vec<f64> = self.parse_list(key)?;
        if ends.len() != 2 {
            return Err(config_err(format!("key `{key}`: expected `lo,hi`")));
        }
        Ok(Some((ends[0], ends[1])))
    }

    /// Sampling ranges; unset ranges fall back to the direction-kind default
    /// ([-1,1]^2 for Hessian directions, [-0.5,0.5]^2 for random ones).
    pub fn sample_options(&self, kind: &DirectionsKind) -> Result<lossscape_core::SampleOptions, CliError> {
        let default_range = match kind {
            DirectionsKind::Random { .. } => (-0.5, 0.5),
            DirectionsKind::Hessian(_) => (-1.0, 1.0),
        };
        let resolution = {
            let text = self.get("sampling.resolution");
            let (r, c) = text
                .split_once('x')
                .ok_or_else(|| config_err("key `sampling.resolution`: expected `RxC`"))?;
            let r: usize = r
                .trim()
                .parse()
                .map_err(|_| config_err(format!("bad resolution rows `{r}`")))?;
            let c: usize = c
                .trim()
                .parse()
                .map_err(|_| config_err(format!("bad resolution cols `{c}`")))?;
            (r, c)
        };
        Ok(lossscape_core::SampleOptions {
            range1: self.parse_range("sampling.range1")?.unwrap_or(default_range),
            range2: self.parse_range("sampling.range2")?.unwrap_or(default_range),
            resolution,
        })
    }

    pub fn clip_quantile(&self) -> Result<Option<f64>, CliError> {
        if !self.is_set("sampling.clip_quantile") {
            return Ok(None);
        }
        Ok(Some(self.parse("sampling.clip_quantile")?))
    }

    pub fn representation(&self) -> Result<Representation, CliError> {
        match self.get("representation.kind") {
            "image8" => Ok(Representation::Image8),
            "knn" => Ok(Representation::Knn {
                k: self.parse("representation.k")?,
            }),
            other => Err(config_err(format!(
                "key `representation.kind`: expected image8 | knn, got `{other}`"
            ))),
        }
    }

    pub fn include_essential(&self) -> Result<bool, CliError> {
        self.parse_bool("metrics.include_essential")
    }

    pub fn hessian_options(&self) -> Result<lossscape_core::metrics::HessianOptions, CliError> {
        let power_iter = match self.directions_kind()? {
            DirectionsKind::Hessian(p) => p,
            DirectionsKind::Random { seed } => PowerIterOptions {
                seed,
                ..PowerIterOptions::default()
            },
        };
        let esd = if self.parse_bool("metrics.esd")? {
            Some(EsdOptions {
                lanczos_order: self.parse("metrics.esd_order")?,
                n_probes: self.parse("metrics.esd_probes")?,
                bins: self.parse("metrics.esd_bins")?,
                seed: self.parse("metrics.seed")?,
                fd_step: self.parse("directions.fd_step")?,
            })
        } else {
            None
        };
        Ok(lossscape_core::metrics::HessianOptions {
            power_iter,
            trace_probes: self.parse("metrics.trace_probes")?,
            trace_seed: self.parse("metrics.seed")?,
            esd,
        })
    }

    pub fn sweep_betas(&self) -> Result<Vec<f64>, CliError> {
        let betas: Vec<f64> = self.parse_list("sweep.betas")?;
        if betas.is_empty() {
            return Err(config_err("sweep.betas must be nonempty"));
        }
        Ok(betas)
    }

    pub fn demo_variants(&self) -> Result<Vec<Vec<usize>>, CliError> {
        let mut variants = Vec::new();
        for part in self.get("demo.variants").split(';') {
            let widths: Result<Vec<usize>, _> = part
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| config_err(format!("bad width `{}` in demo.variants", s.trim())))
                })
                .collect();
            variants.push(widths?);
        }
        if variants.len() < 2 {
            return Err(config_err("demo.variants needs at least two variants"));
        }
        Ok(variants)
    }

    pub fn demo_seeds(&self) -> Result<Vec<u64>, CliError> {
        let seeds: Vec<u64> = self.parse_list("demo.seeds")?;
        if seeds.len() < 2 {
            return Err(config_err("demo.seeds needs at least two seeds"));
        }
        Ok(seeds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Analytic,
    Mlp,
    Pinn,
}

#[derive(Debug, Clone)]
pub enum ThetaSource {
    Train { steps: usize, lr: f64, seed: u64 },
    Load(PathBuf),
}

#[derive(Debug, Clone)]
pub enum DirectionsKind {
    Random { seed: u64 },
    Hessian(PowerIterOptions),
}
