//! Multi-run drivers: the wave-speed sweep (train one PINN per beta, build
//! its Hessian-direction landscape, quantify) and the classifier demo
//! (architecture variants crossed with seeds). Each run writes a full
//! pipeline output directory; the driver adds one summary CSV.

use std::fmt::Write as _;

use lossscape_core::metrics::spearman;
use lossscape_core::models::{MlpModel, PinnModel};

use crate::config::Config;
use crate::output::{atomic_write, ensure_dir};
use crate::pipeline::run_pipeline;
use crate::CliError;

/// Mean-absolute-error evaluation grid against the analytic solution.
const ERROR_GRID: (usize, usize) = (101, 51);

pub struct SweepRow {
    pub label: String,
    pub seed: Option<u64>,
    pub n_saddles: Option<usize>,
    pub n_minima: Option<usize>,
    pub avg_persistence: Option<f64>,
    pub lambda1: Option<f64>,
    pub trace: Option<f64>,
    pub final_loss: Option<f64>,
    pub fit: Option<f64>,
    pub status: String,
}

impl SweepRow {
    fn failed(label: String, seed: Option<u64>, status: String) -> Self {
        Self {
            label,
            seed,
            n_saddles: None,
            n_minima: None,
            avg_persistence: None,
            lambda1: None,
            trace: None,
            final_loss: None,
            fit: None,
            status,
        }
    }
}

fn fmt_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn render_csv(header: &str, rows: &[SweepRow], with_seed: bool) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        if with_seed {
            write!(out, "{},{},", r.label, r.seed.unwrap_or(0)).expect("string write");
        } else {
            write!(out, "{},", r.label).expect("string write");
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_opt(&r.n_saddles),
            fmt_opt(&r.n_minima),
            fmt_opt(&r.avg_persistence),
            fmt_opt(&r.lambda1),
            fmt_opt(&r.trace),
            fmt_opt(&r.final_loss),
            fmt_opt(&r.fit),
            r.status
        )
        .expect("string write");
    }
    out
}

/// One pipeline run per beta. A diverging run becomes a flagged row and the
/// sweep continues. Returns the completed rows for summary printing.
pub fn run_beta_sweep(cfg: &Config) -> Result<Vec<SweepRow>, CliError> {
    let betas = cfg.sweep_betas()?;
    if cfg.model_kind()? != crate::config::ModelKind::Pinn {
        return Err(CliError::Config("beta-sweep requires model = pinn".into()));
    }
    let base_dir = cfg.output_dir();
    ensure_dir(&base_dir)?;
    let include_essential = cfg.include_essential()?;

    let mut rows = Vec::with_capacity(betas.len());
    for beta in &betas {
        let label = format!("{beta}");
        let mut sub = cfg.clone();
        sub.set("pinn.beta", &label)?;
        // The sweep compares landscapes across wave speeds, so it zooms out
        // further than single-run analysis unless told otherwise.
        if !sub.is_set("sampling.range1") {
            sub.set("sampling.range1", "-2,2")?;
        }
        if !sub.is_set("sampling.range2") {
            sub.set("sampling.range2", "-2,2")?;
        }
        sub.set(
            "output_dir",
            &base_dir.join(format!("beta_{label}")).to_string_lossy(),
        )?;
        match run_pipeline(&sub) {
            Ok(summary) => {
                let model = PinnModel::new(&sub.pinn_spec()?)?;
                let theta = summary.theta.as_ref().expect("pinn run trains theta");
                let abs_error =
                    model.mean_abs_error(&theta.values, ERROR_GRID.0, ERROR_GRID.1)?;
                let status = if summary.direction_fallback {
                    "ok(direction-fallback)"
                } else {
                    "ok"
                };
                rows.push(SweepRow {
                    label,
                    seed: None,
                    n_saddles: Some(summary.topo_with_essential.n_saddles),
                    n_minima: Some(summary.topo_with_essential.n_minima),
                    avg_persistence: Some(summary.avg_persistence(include_essential)),
                    lambda1: summary.hessian.as_ref().map(|h| h.lambda1),
                    trace: summary.hessian.as_ref().map(|h| h.trace_estimate),
                    final_loss: summary.final_loss,
                    fit: Some(abs_error),
                    status: status.into(),
                });
            }
            Err(CliError::Numeric(msg)) => {
                rows.push(SweepRow::failed(label, None, format!("diverged({msg})")));
            }
            Err(e) => return Err(e),
        }
    }

    let csv = render_csv(
        "beta,n_saddles,n_minima,avg_persistence,lambda1,trace,final_loss,abs_error,status",
        &rows,
        false,
    );
    let path = base_dir.join("sweep.csv");
    atomic_write(&path, &csv)?;

    print_sweep_summary(&rows);
    Ok(rows)
}

fn print_sweep_summary(rows: &[SweepRow]) {
    let complete: Vec<&SweepRow> = rows.iter().filter(|r| r.n_saddles.is_some()).collect();
    if complete.len() >= 2 {
        let betas: Vec<f64> = complete.iter().map(|r| r.label.parse().unwrap()).collect();
        let saddles: Vec<f64> = complete
            .iter()
            .map(|r| r.n_saddles.unwrap() as f64)
            .collect();
        let persistence: Vec<f64> = complete.iter().map(|r| r.avg_persistence.unwrap()).collect();
        let error: Vec<f64> = complete.iter().map(|r| r.fit.unwrap()).collect();
        println!(
            "spearman(beta, n_saddles) = {:+.3}",
            spearman(&betas, &saddles)
        );
        println!(
            "spearman(beta, avg_persistence) = {:+.3}",
            spearman(&betas, &persistence)
        );
        println!(
            "spearman(beta, abs_error) = {:+.3}",
            spearman(&betas, &error)
        );
    }
    for r in rows {
        println!(
            "beta={}: saddles={} minima={} avg_pers={} abs_error={} [{}]",
            r.label,
            fmt_opt(&r.n_saddles),
            fmt_opt(&r.n_minima),
            fmt_opt(&r.avg_persistence),
            fmt_opt(&r.fit),
            r.status
        );
    }
}

/// Architecture variants crossed with seeds, mirroring the sweep schema;
/// the fit column reports training-set accuracy.
pub fn run_mlp_demo(cfg: &Config) -> Result<Vec<SweepRow>, CliError> {
    let variants = cfg.demo_variants()?;
    let seeds = cfg.demo_seeds()?;
    let base_dir = cfg.output_dir();
    ensure_dir(&base_dir)?;
    let include_essential = cfg.include_essential()?;

    let mut rows = Vec::with_capacity(variants.len() * seeds.len());
    for widths in &variants {
        let widths_text = widths
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let label = widths
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join("x");
        for &seed in &seeds {
            let mut sub = cfg.clone();
            sub.set("model", "mlp")?;
            sub.set("mlp.widths", &widths_text)?;
            sub.set("train.seed", &seed.to_string())?;
            sub.set(
                "output_dir",
                &base_dir
                    .join(format!("mlp_{label}_seed{seed}"))
                    .to_string_lossy(),
            )?;
            match run_pipeline(&sub) {
                Ok(summary) => {
                    let model = MlpModel::new(&sub.mlp_spec()?)?;
                    let theta = summary.theta.as_ref().expect("mlp run trains theta");
                    let accuracy = model.accuracy(&theta.values)?;
                    rows.push(SweepRow {
                        label: label.clone(),
                        seed: Some(seed),
                        n_saddles: Some(summary.topo_with_essential.n_saddles),
                        n_minima: Some(summary.topo_with_essential.n_minima),
                        avg_persistence: Some(summary.avg_persistence(include_essential)),
                        lambda1: summary.hessian.as_ref().map(|h| h.lambda1),
                        trace: summary.hessian.as_ref().map(|h| h.trace_estimate),
                        final_loss: summary.final_loss,
                        fit: Some(accuracy),
                        status: if summary.direction_fallback {
                            "ok(direction-fallback)".into()
                        } else {
                            "ok".into()
                        },
                    });
                }
                Err(CliError::Numeric(msg)) => {
                    rows.push(SweepRow::failed(
                        label.clone(),
                        Some(seed),
                        format!("diverged({msg})"),
                    ));
                }
                Err(e) => return Err(e),
            }
        }
    }

    let csv = render_csv(
        "variant,seed,n_saddles,n_minima,avg_persistence,lambda1,trace,final_loss,accuracy,status",
        &rows,
        true,
    );
    let path = base_dir.join("demo.csv");
    atomic_write(&path, &csv)?;
    for r in &rows {
        println!(
            "variant={} seed={}: saddles={} minima={} avg_pers={} accuracy={} [{}]",
            r.label,
            r.seed.unwrap_or(0),
            fmt_opt(&r.n_saddles),
            fmt_opt(&r.n_minima),
            fmt_opt(&r.avg_persistence),
            fmt_opt(&r.fit),
            r.status
        );
    }
    Ok(rows)
}
