//! Scalar summaries of a landscape: topology counts and average persistence
//! on one side, Hessian curvature measures on the other (top eigenvalues by
//! power iteration, Hutchinson trace, spectral density by stochastic Lanczos
//! quadrature). All stochastic estimators are seeded and sum in a fixed
//! order, so results are bit-reproducible.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::directions::{self, DirectionsError, PowerIterOptions, Provenance};
use crate::linalg::{self, dot, norm, normalize, orthogonalize_against};
use crate::models::{GradModel, ModelError};
use crate::topology::{MergeTree, PersistenceDiagram};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("empty persistence diagram")]
    EmptyDiagram,
    #[error("tree and diagram disagree ({0})")]
    Inconsistent(String),
    #[error("need at least one probe")]
    NoProbes,
    #[error("Lanczos order must be at least 2")]
    OrderTooSmall,
    #[error("tridiagonal eigensolver failed: {0}")]
    Tridiagonal(#[from] crate::linalg::TridiagonalError),
    #[error(transparent)]
    Directions(#[from] DirectionsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Topology summary of one landscape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopoMetrics {
    pub n_saddles: usize,
    pub n_minima: usize,
    /// Mean of (death - birth) over the selected pairs.
    pub avg_persistence: f64,
    pub include_essential: bool,
}

/// Saddle count, minima count, and average persistence. Essential classes
/// participate with their recorded finite deaths when `include_essential`
/// is set; with it unset and no finite pairs present the average is 0.
pub fn topo_metrics(
    tree: &MergeTree,
    diagram: &PersistenceDiagram,
    include_essential: bool,
) -> Result<TopoMetrics, MetricsError> {
    if diagram.pairs.is_empty() {
        return Err(MetricsError::EmptyDiagram);
    }
    if diagram.finite_pairs().count() != tree.n_minima() - tree.n_components {
        return Err(MetricsError::Inconsistent(
            "finite pair count vs leaves and components".into(),
        ));
    }
    let (mut total, mut count) = (0.0, 0usize);
    for p in &diagram.pairs {
        if p.essential && !include_essential {
            continue;
        }
        total += p.persistence();
        count += 1;
    }
    let avg_persistence = if count == 0 { 0.0 } else { total / count as f64 };
    Ok(TopoMetrics {
        n_saddles: tree.n_saddles(),
        n_minima: tree.n_minima(),
        avg_persistence,
        include_essential,
    })
}

/// The two dominant Hessian eigenvalues (by magnitude), via deflated power
/// iteration on Hessian-vector products.
pub fn top_eigenvalues(
    model: &dyn GradModel,
    theta: &[f64],
    opts: &PowerIterOptions,
) -> Result<(f64, f64), MetricsError> {
    let pair = directions::top2_eigenvectors(model, theta, opts)?;
    match pair.provenance {
        Provenance::Hessian { eigenvalues, .. } => Ok((eigenvalues[0], eigenvalues[1])),
        Provenance::Random { .. } => unreachable!("hessian path returns hessian provenance"),
    }
}

/// Hutchinson trace estimator: the mean of `v' H v` over seeded Rademacher
/// probes. Probes are consumed and summed in draw order.
pub fn hessian_trace(
    model: &dyn GradModel,
    theta: &[f64],
    n_probes: usize,
    seed: u64,
    fd_step: f64,
) -> Result<f64, MetricsError> {
    if n_probes == 0 {
        return Err(MetricsError::NoProbes);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = theta.len();
    let mut total = 0.0;
    for _ in 0..n_probes {
        let v: Vec<f64> = (0..dim)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let hv = directions::hvp(model, theta, &v, fd_step)?;
        total += dot(&v, &hv);
    }
    Ok(total / n_probes as f64)
}

/// Normalized histogram approximating the Hessian eigenvalue density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralHistogram {
    /// `bins + 1` edges, ascending.
    pub edges: Vec<f64>,
    /// One weight per bin; nonnegative, summing to 1.
    pub weights: Vec<f64>,
}

impl SpectralHistogram {
    /// First moment, using bin centers.
    pub fn first_moment(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * 0.5 * (self.edges[i] + self.edges[i + 1]))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsdOptions {
    pub lanczos_order: usize,
    pub n_probes: usize,
    pub bins: usize,
    pub seed: u64,
    pub fd_step: f64,
}

impl Default for EsdOptions {
    fn default() -> Self {
        Self {
            lanczos_order: 30,
            n_probes: 10,
            bins: 100,
            seed: 0,
            fd_step: directions::DEFAULT_FD_STEP,
        }
    }
}

/// One Lanczos run: tridiagonal coefficients from `order` steps with full
/// reorthogonalization, truncated early on breakdown.
fn lanczos_tridiagonal(
    model: &dyn GradModel,
    theta: &[f64],
    start: &[f64],
    order: usize,
    fd_step: f64,
) -> Result<(Vec<f64>, Vec<f64>, bool), MetricsError> {
    let mut alphas = Vec::with_capacity(order);
    let mut betas: Vec<f64> = Vec::with_capacity(order.saturating_sub(1));
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(order);
    let mut v = start.to_vec();
    normalize(&mut v);
    basis.push(v.clone());
    let mut truncated = false;
    for j in 0..order {
        let mut w = directions::hvp(model, theta, &basis[j], fd_step)?;
        let alpha = dot(&w, &basis[j]);
        alphas.push(alpha);
        if j + 1 == order {
            break;
        }
        linalg::axpy(-alpha, &basis[j], &mut w);
        if j > 0 {
            linalg::axpy(-betas[j - 1], &basis[j - 1], &mut w);
        }
        // Full reorthogonalization against the entire basis.
        for b in &basis {
            orthogonalize_against(&mut w, b);
        }
        let beta = norm(&w);
        if beta < 1e-12 {
            truncated = true;
            break;
        }
        linalg::scale(&mut w, 1.0 / beta);
        betas.push(beta);
        basis.push(w);
    }
    Ok((alphas, betas, truncated))
}

/// The raw quadrature nodes behind the spectral density estimate: per probe,
/// the Ritz values of the Lanczos tridiagonal matrix paired with the squared
/// first eigenvector components, already divided by the probe count (total
/// weight sums to 1). Lanczos breakdown truncates the affected probe, it is
/// not an error.
pub fn slq_nodes(
    model: &dyn GradModel,
    theta: &[f64],
    opts: &EsdOptions,
) -> Result<Vec<(f64, f64)>, MetricsError> {
    if opts.lanczos_order < 2 {
        return Err(MetricsError::OrderTooSmall);
    }
    if opts.n_probes == 0 {
        return Err(MetricsError::NoProbes);
    }
    let dim = theta.len();
    let order = opts.lanczos_order.min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for _ in 0..opts.n_probes {
        let start: Vec<f64> = (0..dim)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let (alphas, betas, _) = lanczos_tridiagonal(model, theta, &start, order, opts.fd_step)?;
        let (ritz, vectors) = linalg::tridiagonal_eigen(&alphas, &betas)?;
        for (value, vector) in ritz.iter().zip(&vectors) {
            let tau = vector[0] * vector[0];
            nodes.push((*value, tau / opts.n_probes as f64));
        }
    }
    Ok(nodes)
}

/// Stochastic Lanczos quadrature estimate of the eigenvalue spectral
/// density: the [`slq_nodes`] averaged over probes and binned into a
/// normalized histogram.
pub fn hessian_esd(
    model: &dyn GradModel,
    theta: &[f64],
    opts: &EsdOptions,
) -> Result<SpectralHistogram, MetricsError> {
    let nodes = slq_nodes(model, theta, opts)?;

    let lo = nodes.iter().map(|n| n.0).fold(f64::INFINITY, f64::min);
    let hi = nodes.iter().map(|n| n.0).fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let margin = 0.01 * span + 1e-9 * (1.0 + hi.abs());
    let (lo, hi) = (lo - margin, hi + margin);
    let width = (hi - lo) / opts.bins as f64;
    let edges: Vec<f64> = (0..=opts.bins).map(|i| lo + i as f64 * width).collect();
    let mut weights = vec![0.0; opts.bins];
    for (value, tau) in nodes {
        let bin = (((value - lo) / width) as usize).min(opts.bins - 1);
        weights[bin] += tau;
    }
    Ok(SpectralHistogram { edges, weights })
}

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either argument is rank-degenerate (all values equal).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Hessian metrics bundle, as emitted in the metrics JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianSummary {
    pub lambda1: f64,
    pub lambda2: f64,
    pub trace_estimate: f64,
    pub trace_probes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub esd: Option<SpectralHistogram>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianOptions {
    pub power_iter: PowerIterOptions,
    pub trace_probes: usize,
    pub trace_seed: u64,
    pub esd: Option<EsdOptions>,
}

impl Default for HessianOptions {
    fn default() -> Self {
        Self {
            power_iter: PowerIterOptions::default(),
            trace_probes: 100,
            trace_seed: 0,
            esd: None,
        }
    }
}

/// Computes the full Hessian summary at `theta`. On power-iteration
/// non-convergence the best iterate's eigenvalues are used and the summary
/// is still produced (the residuals live in the direction provenance).
pub fn hessian_summary(
    model: &dyn GradModel,
    theta: &[f64],
    opts: &HessianOptions,
) -> Result<HessianSummary, MetricsError> {
    let eigenvalues = match top_eigenvalues(model, theta, &opts.power_iter) {
        Ok(pair) => pair,
        Err(MetricsError::Directions(DirectionsError::NoConvergence { best, .. })) => {
            match best.provenance {
                Provenance::Hessian { eigenvalues, .. } => (eigenvalues[0], eigenvalues[1]),
                Provenance::Random { .. } => unreachable!(),
            }
        }
        Err(e) => return Err(e),
    };
    let trace = hessian_trace(
        model,
        theta,
        opts.trace_probes,
        opts.trace_seed,
        opts.power_iter.fd_step,
    )?;
    let esd = match &opts.esd {
        Some(esd_opts) => Some(hessian_esd(model, theta, esd_opts)?),
        None => None,
    };
    Ok(HessianSummary {
        lambda1: eigenvalues.0,
        lambda2: eigenvalues.1,
        trace_estimate: trace,
        trace_probes: opts.trace_probes,
        esd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::models::QuadraticModel;
    use crate::topology::sublevel_analysis;

    fn path_field(values: &[f64]) -> ScalarField {
        let coords: Vec<[f64; 2]> = (0..values.len()).map(|i| [i as f64, 0.0]).collect();
        let edges: Vec<[usize; 2]> = (1..values.len()).map(|i| [i - 1, i]).collect();
        ScalarField::from_parts(values.to_vec(), coords, edges).unwrap()
    }

    #[test]
    fn topo_metrics_on_two_basin_path() {
        let field = path_field(&[2.0, 1.0, 3.0, 0.0, 4.0]);
        let (tree, diagram) = sublevel_analysis(&field).unwrap();
        let with = topo_metrics(&tree, &diagram, true).unwrap();
        assert_eq!(with.n_minima, 2);
        assert_eq!(with.n_saddles, 1);
        assert_eq!(with.avg_persistence, 3.0); // ((3-1) + (4-0)) / 2
        let without = topo_metrics(&tree, &diagram, false).unwrap();
        assert_eq!(without.avg_persistence, 2.0);
    }

    #[test]
    fn topo_metrics_on_constant_field() {
        let field = crate::field::build_image_grid(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let (tree, diagram) = sublevel_analysis(&field).unwrap();
        let m = topo_metrics(&tree, &diagram, true).unwrap();
        assert_eq!(m.n_minima, 1);
        assert_eq!(m.n_saddles, 0);
        assert_eq!(m.avg_persistence, 0.0);
    }

    #[test]
    fn trace_identity_hessian_is_exact_with_zero_variance() {
        let dim = 16;
        let model = QuadraticModel::diagonal(vec![1.0; dim]);
        let theta = vec![0.0; dim];
        let mut estimates = Vec::new();
        for probes in [1usize, 3, 7] {
            let t = hessian_trace(&model, &theta, probes, 0, 1e-4).unwrap();
            estimates.push(t);
        }
        for t in &estimates {
            assert!((t - dim as f64).abs() < 1e-9, "estimate {t}");
        }
        // Every probe contributes exactly <v, v> = dim.
        assert!((estimates[0] - estimates[2]).abs() < 1e-12);
    }

    #[test]
    fn trace_on_known_diagonal_within_stochastic_tolerance() {
        let model = QuadraticModel::diagonal((1..=10).map(f64::from).collect());
        let theta = vec![0.0; 10];
        let estimate = hessian_trace(&model, &theta, 1000, 0, 1e-4).unwrap();
        assert!((estimate - 55.0).abs() < 0.05 * 55.0, "estimate {estimate}");
    }

    #[test]
    fn trace_is_linear_in_the_loss() {
        let model = QuadraticModel::diagonal(vec![1.0, 2.0, 3.0]);
        let doubled = QuadraticModel::diagonal(vec![2.0, 4.0, 6.0]);
        let theta = vec![0.0; 3];
        let a = hessian_trace(&model, &theta, 64, 5, 1e-4).unwrap();
        let b = hessian_trace(&doubled, &theta, 64, 5, 1e-4).unwrap();
        assert!((2.0 * a - b).abs() < 1e-8 * b.abs().max(1.0));
    }

    #[test]
    fn slq_recovers_small_spectrum_exactly() {
        let model = QuadraticModel::diagonal((1..=10).map(f64::from).collect());
        let theta = vec![0.0; 10];
        let opts = EsdOptions {
            lanczos_order: 10,
            n_probes: 1,
            bins: 200,
            seed: 0,
            fd_step: 1e-4,
        };
        let hist = hessian_esd(&model, &theta, &opts).unwrap();
        let total: f64 = hist.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Each eigenvalue 1..10 receives weight 1/10: a Rademacher start
        // vector overlaps every axis eigenvector equally.
        for lambda in 1..=10 {
            let mass: f64 = hist
                .weights
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    hist.edges[*i] <= lambda as f64 + 1e-6
                        && lambda as f64 - 1e-6 < hist.edges[i + 1]
                })
                .map(|(_, w)| w)
                .sum();
            assert!((mass - 0.1).abs() < 1e-9, "lambda {lambda}: mass {mass}");
        }
    }

    #[test]
    fn slq_identity_hessian_single_ritz_value() {
        let model = QuadraticModel::diagonal(vec![1.0; 12]);
        let theta = vec![0.0; 12];
        let opts = EsdOptions {
            lanczos_order: 8,
            n_probes: 3,
            bins: 50,
            seed: 1,
            fd_step: 1e-4,
        };
        // Lanczos breaks down after one step (the Krylov space is
        // one-dimensional); the probe truncates rather than failing.
        let hist = hessian_esd(&model, &theta, &opts).unwrap();
        let total: f64 = hist.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // All mass concentrates in one bin whose center is the sole Ritz
        // value 1 (up to finite-difference rounding).
        let (peak_bin, peak) = hist
            .weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((peak - 1.0).abs() < 1e-12, "peak mass {peak}");
        let center = 0.5 * (hist.edges[peak_bin] + hist.edges[peak_bin + 1]);
        assert!((center - 1.0).abs() < 1e-6, "peak center {center}");
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]), 0.0);
        // Ties get average ranks.
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 3.0]);
        assert!(r > 0.9);
    }
}
