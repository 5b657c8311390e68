//! The end-to-end run: subspace definition, loss computation on the grid,
//! field representation, topological analysis, quantification, and output.
//! `sample` stops after the representation stage; `analyze` starts from a
//! saved landscape CSV, so externally produced landscapes are first-class.

use std::path::{Path, PathBuf};

use lossscape_core::directions::{self, DirectionPair, DirectionsError};
use lossscape_core::field::{self, FieldMeta};
use lossscape_core::metrics::{self, TopoMetrics};
use lossscape_core::models::{
    self, analytic_grid, AdamOptions, GradModel, LossModel, MlpModel, ParameterVector, PinnModel,
};
use lossscape_core::sampler::{self, LandscapeGrid, Representation};
use lossscape_core::topology::{self, export};
use lossscape_core::{HessianSummary, ScalarField};

use crate::config::{Config, DirectionsKind, ModelKind, ThetaSource};
use crate::output::{atomic_write, ensure_dir, LandscapeMeta, ManifestBuilder, MetricsJson};
use crate::CliError;

macro_rules! stage {
    ($manifest:expr, $name:literal, $body:expr) => {{
        $manifest.begin_stage($name);
        match $body {
            Ok(value) => value,
            Err(e) => return Err(($name.to_string(), e.into())),
        }
    }};
}

pub enum ModelInstance {
    Analytic,
    Mlp(MlpModel),
    Pinn(PinnModel),
}

impl ModelInstance {
    fn as_grad_model(&self) -> Option<&dyn GradModel> {
        match self {
            ModelInstance::Analytic => None,
            ModelInstance::Mlp(m) => Some(m),
            ModelInstance::Pinn(m) => Some(m),
        }
    }
}

/// What a finished run hands back to callers (the sweep drivers reuse the
/// trained parameters and metric values without re-reading the files).
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub topo_with_essential: TopoMetrics,
    pub topo_finite_only: TopoMetrics,
    pub hessian: Option<HessianSummary>,
    pub final_loss: Option<f64>,
    pub theta: Option<ParameterVector>,
    pub direction_fallback: bool,
}

impl RunSummary {
    /// The persistence average under the configured essential-class
    /// convention.
    pub fn avg_persistence(&self, include_essential: bool) -> f64 {
        if include_essential {
            self.topo_with_essential.avg_persistence
        } else {
            self.topo_finite_only.avg_persistence
        }
    }
}

type StageResult<T> = Result<T, (String, CliError)>;

pub fn run_pipeline(cfg: &Config) -> Result<RunSummary, CliError> {
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let mut manifest = ManifestBuilder::new(cfg.hash());
    match pipeline_inner(cfg, &dir, &mut manifest, true) {
        Ok(summary) => {
            manifest.write(&dir, None)?;
            Ok(summary)
        }
        Err((stage, err)) => {
            // Partial outputs stay on disk; the manifest names the failure.
            let _ = manifest.write(&dir, Some(stage));
            Err(err)
        }
    }
}

/// Stages 1-3 only: write the landscape CSV and its sidecar, skip topology.
pub fn run_sample(cfg: &Config) -> Result<(), CliError> {
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let mut manifest = ManifestBuilder::new(cfg.hash());
    match pipeline_inner(cfg, &dir, &mut manifest, false) {
        Ok(_) => {
            manifest.write(&dir, None)?;
            Ok(())
        }
        Err((stage, err)) => {
            let _ = manifest.write(&dir, Some(stage));
            Err(err)
        }
    }
}

fn pipeline_inner(
    cfg: &Config,
    dir: &Path,
    manifest: &mut ManifestBuilder,
    analyze: bool,
) -> StageResult<RunSummary> {
    let model = stage!(manifest, "model", build_model(cfg));

    let mut final_loss = None;
    let mut theta = None;
    if let Some(grad_model) = model.as_grad_model() {
        let pv = stage!(manifest, "theta", resolve_theta(cfg, &model, grad_model, dir, manifest));
        final_loss = Some(stage!(manifest, "theta_loss", grad_model.loss(&pv.values)));
        theta = Some(pv);
    }

    let mut dirs = None;
    let mut direction_fallback = false;
    if let Some(grad_model) = model.as_grad_model() {
        let pv = theta.as_ref().expect("theta resolved for parametric model");
        let (pair, fallback) = stage!(
            manifest,
            "directions",
            build_directions(cfg, &model, grad_model, pv, dir, manifest)
        );
        dirs = Some(pair);
        direction_fallback = fallback;
    }

    let mut grid = stage!(manifest, "sample", build_grid(cfg, &model, &theta, &dirs));

    if let Some(q) = stage!(manifest, "clip", cfg.clip_quantile()) {
        grid = stage!(manifest, "clip", sampler::clip_outliers(&grid, q).map_err(CliError::from));
    }

    let representation = stage!(manifest, "represent", cfg.representation());
    let field = stage!(
        manifest,
        "represent",
        represent(&grid, &representation, dir, manifest)
    );

    if !analyze {
        return Ok(RunSummary {
            output_dir: dir.to_path_buf(),
            topo_with_essential: TopoMetrics {
                n_saddles: 0,
                n_minima: 0,
                avg_persistence: 0.0,
                include_essential: true,
            },
            topo_finite_only: TopoMetrics {
                n_saddles: 0,
                n_minima: 0,
                avg_persistence: 0.0,
                include_essential: false,
            },
            hessian: None,
            final_loss,
            theta,
            direction_fallback,
        });
    }

    let (tree, diagram) = stage!(
        manifest,
        "topology",
        topology::sublevel_analysis(&field).map_err(CliError::from)
    );
    stage!(manifest, "topology", write_topology(dir, manifest, &tree, &diagram));

    let topo_with = stage!(
        manifest,
        "metrics",
        metrics::topo_metrics(&tree, &diagram, true).map_err(CliError::from)
    );
    let topo_finite = stage!(
        manifest,
        "metrics",
        metrics::topo_metrics(&tree, &diagram, false).map_err(CliError::from)
    );
    let mut hessian = None;
    if let Some(grad_model) = model.as_grad_model() {
        let pv = theta.as_ref().expect("theta resolved");
        let opts = stage!(manifest, "metrics", cfg.hessian_options());
        hessian = Some(stage!(
            manifest,
            "metrics",
            metrics::hessian_summary(grad_model, &pv.values, &opts).map_err(CliError::from)
        ));
    }
    let mut metrics_json = MetricsJson::new(topo_with, topo_finite);
    if let Some(summary) = &hessian {
        metrics_json = metrics_json.with_hessian(summary);
    }
    let metrics_path = dir.join("metrics.json");
    stage!(
        manifest,
        "write",
        atomic_write(
            &metrics_path,
            &serde_json::to_string_pretty(&metrics_json).expect("metrics serialization"),
        )
    );
    manifest.record_output(&metrics_path);
    manifest.end_stage();

    Ok(RunSummary {
        output_dir: dir.to_path_buf(),
        topo_with_essential: topo_with,
        topo_finite_only: topo_finite,
        hessian,
        final_loss,
        theta,
        direction_fallback,
    })
}

fn build_model(cfg: &Config) -> Result<ModelInstance, CliError> {
    Ok(match cfg.model_kind()? {
        ModelKind::Analytic => ModelInstance::Analytic,
        ModelKind::Mlp => ModelInstance::Mlp(MlpModel::new(&cfg.mlp_spec()?)?),
        ModelKind::Pinn => ModelInstance::Pinn(PinnModel::new(&cfg.pinn_spec()?)?),
    })
}

fn resolve_theta(
    cfg: &Config,
    model: &ModelInstance,
    grad_model: &dyn GradModel,
    dir: &Path,
    manifest: &mut ManifestBuilder,
) -> Result<ParameterVector, CliError> {
    let pv = match cfg.theta_source()? {
        ThetaSource::Load(path) => {
            let pv = models::load_params(&path)?;
            if pv.len() != grad_model.dim() {
                return Err(CliError::Config(format!(
                    "loaded parameters have {} entries, model expects {}",
                    pv.len(),
                    grad_model.dim()
                )));
            }
            pv
        }
        ThetaSource::Train { steps, lr, seed } => {
            let init = match model {
                ModelInstance::Mlp(m) => m.init_params(seed),
                ModelInstance::Pinn(m) => m.init_params(seed),
                ModelInstance::Analytic => unreachable!("analytic models have no parameters"),
            };
            let result = models::train(
                grad_model,
                &init.values,
                &AdamOptions::with_lr_and_steps(lr, steps),
            )?;
            ParameterVector::new(result.theta, init.layout)?
        }
    };
    let params_path = dir.join("params.csv");
    models::save_params(&pv, &params_path)?;
    manifest.record_output(&params_path);
    manifest.record_output(&params_path.with_extension("layout.json"));
    Ok(pv)
}

fn build_directions(
    cfg: &Config,
    model: &ModelInstance,
    grad_model: &dyn GradModel,
    theta: &ParameterVector,
    dir: &Path,
    manifest: &mut ManifestBuilder,
) -> Result<(DirectionPair, bool), CliError> {
    let mut fallback = false;
    let mut pair = match cfg.directions_kind()? {
        DirectionsKind::Random { seed } => directions::random_pair(theta.len(), seed)?,
        DirectionsKind::Hessian(opts) => {
            match directions::top2_eigenvectors(grad_model, &theta.values, &opts) {
                Ok(pair) => pair,
                Err(DirectionsError::NoConvergence { best, res1, res2, .. }) => {
                    // Keep going with the best iterate; the residuals stay in
                    // the provenance for anyone inspecting the run.
                    eprintln!(
                        "warning: power iteration did not reach tolerance \
                         (residuals {res1:.3e}, {res2:.3e}); using best iterate"
                    );
                    fallback = true;
                    *best
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    if cfg.per_layer_norm()? {
        let layout = match model {
            ModelInstance::Mlp(m) => m.layout(),
            ModelInstance::Pinn(m) => m.layout(),
            ModelInstance::Analytic => unreachable!(),
        };
        directions::per_layer_normalize(&mut pair.delta1, &theta.values, &layout);
        directions::per_layer_normalize(&mut pair.delta2, &theta.values, &layout);
        // Rescaling bends the pair away from orthogonality; restore it.
        let d1 = pair.delta1.clone();
        lossscape_core::linalg::orthogonalize_against(&mut pair.delta2, &d1);
        lossscape_core::linalg::normalize(&mut pair.delta2);
    }
    for (name, values) in [("delta1.csv", &pair.delta1), ("delta2.csv", &pair.delta2)] {
        let pv = ParameterVector::new(values.clone(), theta.layout.clone())?;
        let path = dir.join(name);
        models::save_params(&pv, &path)?;
        manifest.record_output(&path);
    }
    let prov_path = dir.join("directions.meta.json");
    atomic_write(
        &prov_path,
        &serde_json::to_string_pretty(&pair.provenance).expect("provenance serialization"),
    )?;
    manifest.record_output(&prov_path);
    Ok((pair, fallback))
}

fn build_grid(
    cfg: &Config,
    model: &ModelInstance,
    theta: &Option<ParameterVector>,
    dirs: &Option<DirectionPair>,
) -> Result<LandscapeGrid, CliError> {
    match model {
        ModelInstance::Analytic => Ok(analytic_grid(
            &cfg.analytic_kind()?,
            cfg.analytic_resolution()?,
            cfg.analytic_range()?,
        )?),
        _ => {
            let grad_model = model.as_grad_model().expect("parametric");
            let pv = theta.as_ref().expect("theta resolved");
            let pair = dirs.as_ref().expect("directions resolved");
            let opts = cfg.sample_options(&cfg.directions_kind()?)?;
            let mut grid = sampler::sample_landscape(
                grad_model as &dyn LossModel,
                &pv.values,
                pair,
                &opts,
            )?;
            grid.metadata.model = Some(model_label(cfg)?);
            Ok(grid)
        }
    }
}

fn model_label(cfg: &Config) -> Result<String, CliError> {
    Ok(match cfg.model_kind()? {
        ModelKind::Analytic => cfg.analytic_kind()?.label(),
        ModelKind::Mlp => format!("mlp({})", cfg.get("mlp.widths")),
        ModelKind::Pinn => format!("pinn(beta={})", cfg.get("pinn.beta")),
    })
}

fn represent(
    grid: &LandscapeGrid,
    representation: &Representation,
    dir: &Path,
    manifest: &mut ManifestBuilder,
) -> Result<ScalarField, CliError> {
    let field = sampler::to_field(grid, representation)?;
    let builder = match representation {
        Representation::Image8 => FieldMeta::Grid {
            rows: grid.rows(),
            cols: grid.cols(),
        },
        Representation::Knn { k } => FieldMeta::Knn { k: *k },
    };
    let csv_path = dir.join("landscape.csv");
    atomic_write(&csv_path, &field::field_csv_string(&field))?;
    manifest.record_output(&csv_path);
    let meta = LandscapeMeta {
        builder,
        landscape: &grid.metadata,
    };
    let meta_path = dir.join("landscape.meta.json");
    atomic_write(
        &meta_path,
        &serde_json::to_string_pretty(&meta).expect("landscape meta serialization"),
    )?;
    manifest.record_output(&meta_path);
    Ok(field)
}

fn write_topology(
    dir: &Path,
    manifest: &mut ManifestBuilder,
    tree: &lossscape_core::MergeTree,
    diagram: &lossscape_core::PersistenceDiagram,
) -> Result<(), CliError> {
    let tree_path = dir.join("merge_tree.json");
    atomic_write(&tree_path, &export::merge_tree_json(tree))?;
    manifest.record_output(&tree_path);
    let dot_path = dir.join("merge_tree.dot");
    atomic_write(&dot_path, &export::merge_tree_dot(tree))?;
    manifest.record_output(&dot_path);
    let diagram_path = dir.join("diagram.csv");
    atomic_write(&diagram_path, &export::diagram_csv(diagram))?;
    manifest.record_output(&diagram_path);
    Ok(())
}

/// Reloads a landscape CSV (with its builder sidecar) and recomputes the
/// topology and topological metrics.
pub fn run_analyze(cfg: &Config) -> Result<RunSummary, CliError> {
    let dir = cfg.output_dir();
    ensure_dir(&dir)?;
    let mut manifest = ManifestBuilder::new(cfg.hash());
    match analyze_inner(cfg, &dir, &mut manifest) {
        Ok(summary) => {
            manifest.write(&dir, None)?;
            Ok(summary)
        }
        Err((stage, err)) => {
            let _ = manifest.write(&dir, Some(stage));
            Err(err)
        }
    }
}

fn analyze_inner(
    cfg: &Config,
    dir: &Path,
    manifest: &mut ManifestBuilder,
) -> StageResult<RunSummary> {
    let input = stage!(manifest, "load", cfg.input_path());
    let field = stage!(manifest, "load", field::load_field(&input).map_err(CliError::from));
    let (tree, diagram) = stage!(
        manifest,
        "topology",
        topology::sublevel_analysis(&field).map_err(CliError::from)
    );
    stage!(manifest, "topology", write_topology(dir, manifest, &tree, &diagram));
    let topo_with = stage!(
        manifest,
        "metrics",
        metrics::topo_metrics(&tree, &diagram, true).map_err(CliError::from)
    );
    let topo_finite = stage!(
        manifest,
        "metrics",
        metrics::topo_metrics(&tree, &diagram, false).map_err(CliError::from)
    );
    let metrics_json = MetricsJson::new(topo_with, topo_finite);
    let metrics_path = dir.join("metrics.json");
    stage!(
        manifest,
        "write",
        atomic_write(
            &metrics_path,
            &serde_json::to_string_pretty(&metrics_json).expect("metrics serialization"),
        )
    );
    manifest.record_output(&metrics_path);
    manifest.end_stage();
    Ok(RunSummary {
        output_dir: dir.to_path_buf(),
        topo_with_essential: topo_with,
        topo_finite_only: topo_finite,
        hessian: None,
        final_loss: None,
        theta: None,
        direction_fallback: false,
    })
}
