//! Output files and the run manifest. Every file is written atomically
//! (temp file in the same directory, then rename), so a crashed run never
//! leaves a half-written artifact behind.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use lossscape_core::field::FieldMeta;
use lossscape_core::metrics::{SpectralHistogram, TopoMetrics};
use lossscape_core::sampler::GridMetadata;
use lossscape_core::HessianSummary;

use crate::CliError;

pub fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Io(format!("renaming into {}: {e}", path.display())))?;
    Ok(())
}

/// Landscape sidecar: the field-builder block (used to re-derive
/// connectivity on load) plus the sampling metadata.
#[derive(Serialize)]
pub struct LandscapeMeta<'a> {
    #[serde(flatten)]
    pub builder: FieldMeta,
    pub landscape: &'a GridMetadata,
}

/// The metrics JSON emitted by `pipeline` and `analyze`. Both persistence
/// averages are always present so downstream comparisons never depend on the
/// essential-class convention silently; Hessian entries appear only for
/// parametric models.
#[derive(Serialize)]
pub struct MetricsJson {
    pub n_saddles: usize,
    pub n_minima: usize,
    /// Essential classes included (with their recorded finite deaths).
    pub avg_persistence: f64,
    pub avg_persistence_finite_only: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub esd: Option<EsdJson>,
}

#[derive(Serialize)]
pub struct EsdJson {
    pub edges: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MetricsJson {
    pub fn new(with_essential: TopoMetrics, finite_only: TopoMetrics) -> Self {
        Self {
            n_saddles: with_essential.n_saddles,
            n_minima: with_essential.n_minima,
            avg_persistence: with_essential.avg_persistence,
            avg_persistence_finite_only: finite_only.avg_persistence,
            lambda1: None,
            lambda2: None,
            trace: None,
            esd: None,
        }
    }

    pub fn with_hessian(mut self, summary: &HessianSummary) -> Self {
        self.lambda1 = Some(summary.lambda1);
        self.lambda2 = Some(summary.lambda2);
        self.trace = Some(summary.trace_estimate);
        self.esd = summary.esd.as_ref().map(|h: &SpectralHistogram| EsdJson {
            edges: h.edges.clone(),
            weights: h.weights.clone(),
        });
        self
    }
}

/// Accumulates per-stage timings, the output file list, and the failure
/// point (if any); serialized as `manifest.json` even for failed runs.
pub struct ManifestBuilder {
    config_hash: String,
    stages: Vec<StageRecord>,
    outputs: Vec<String>,
    current: Option<(String, Instant)>,
}

#[derive(Serialize, Clone)]
struct StageRecord {
    name: String,
    millis: u64,
}

#[derive(Serialize)]
struct ManifestJson {
    tool_version: &'static str,
    config_hash: String,
    stages: Vec<StageRecord>,
    outputs: Vec<String>,
    failed_stage: Option<String>,
}

impl ManifestBuilder {
    pub fn new(config_hash: String) -> Self {
        Self {
            config_hash,
            stages: Vec::new(),
            outputs: Vec::new(),
            current: None,
        }
    }

    pub fn begin_stage(&mut self, name: &str) {
        self.end_stage();
        self.current = Some((name.to_string(), Instant::now()));
    }

    pub fn end_stage(&mut self) {
        if let Some((name, start)) = self.current.take() {
            self.stages.push(StageRecord {
                name,
                millis: start.elapsed().as_millis() as u64,
            });
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        if let Some(name) = path.file_name() {
            self.outputs.push(name.to_string_lossy().into_owned());
        }
    }

    fn render(&mut self, failed_stage: Option<String>) -> String {
        self.end_stage();
        let doc = ManifestJson {
            tool_version: env!("CARGO_PKG_VERSION"),
            config_hash: self.config_hash.clone(),
            stages: self.stages.clone(),
            outputs: self.outputs.clone(),
            failed_stage,
        };
        serde_json::to_string_pretty(&doc).expect("manifest serialization")
    }

    /// Writes the manifest; on failure paths the failed stage is the one
    /// still open. Returns the manifest path.
    pub fn write(mut self, dir: &Path, failed_stage: Option<String>) -> Result<PathBuf, CliError> {
        let text = self.render(failed_stage);
        let path = dir.join("manifest.json");
        atomic_write(&path, &text)?;
        Ok(path)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        atomic_write(&p, "one").unwrap();
        atomic_write(&p, "two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert!(!p.with_extension("tmp~").exists());
    }

    #[test]
    fn manifest_records_stages_and_failure() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = ManifestBuilder::new("abc".into());
        m.begin_stage("one");
        m.end_stage();
        m.begin_stage("two");
        let path = m.write(dir.path(), Some("two".into())).unwrap();
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(doc["failed_stage"], "two");
        assert_eq!(doc["stages"].as_array().unwrap().len(), 2);
        assert_eq!(doc["config_hash"], "abc");
    }
}
