//! Samples a loss function on a regular grid in the 2D subspace spanned by a
//! direction pair: every cell evaluates `loss(theta + a1 * d1 + a2 * d2)`.
//! Cells are pure and independent, so they may be evaluated concurrently;
//! the result is identical to sequential evaluation.

use serde::{Deserialize, Serialize};

use crate::directions::{DirectionPair, Provenance};
use crate::field::{self, FieldError, ScalarField};
use crate::models::{LossModel, ModelError};
use crate::parallel::indexed_map;

#[derive(Debug, thiserror::Error)]
pub enum SamplerError {
    #[error("resolution must be at least 2 per axis, got {0}x{1}")]
    ResolutionTooSmall(usize, usize),
    #[error("invalid sampling range [{0}, {1}]")]
    BadRange(f64, f64),
    #[error("direction dimension {dirs} does not match theta dimension {theta}")]
    DimensionMismatch { dirs: usize, theta: usize },
    #[error("every grid cell evaluated to a non-finite loss")]
    AllNonFinite,
    #[error("clip quantile must satisfy 0.5 < q <= 1, got {0}")]
    BadQuantile(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Sampling metadata carried with the grid and emitted as JSON next to the
/// landscape CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<Provenance>,
    pub ranges: [[f64; 2]; 2],
    pub resolution: [usize; 2],
    pub center_loss: f64,
    /// Cells whose loss came back non-finite and were replaced by the
    /// maximum finite value.
    pub nonfinite_replaced: usize,
    pub clipped_cells: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clip_quantile: Option<f64>,
}

/// Loss values on a regular subspace grid. `losses` is row-major:
/// `losses[i * alphas2.len() + j]` belongs to `(alphas1[i], alphas2[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    pub alphas1: Vec<f64>,
    pub alphas2: Vec<f64>,
    pub losses: Vec<f64>,
    pub center_loss: f64,
    pub metadata: GridMetadata,
}

impl LandscapeGrid {
    pub fn rows(&self) -> usize {
        self.alphas1.len()
    }

    pub fn cols(&self) -> usize {
        self.alphas2.len()
    }

    pub fn loss_at(&self, i: usize, j: usize) -> f64 {
        self.losses[i * self.cols() + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOptions {
    pub range1: (f64, f64),
    pub range2: (f64, f64),
    pub resolution: (usize, usize),
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            range1: (-1.0, 1.0),
            range2: (-1.0, 1.0),
            resolution: (41, 41),
        }
    }
}

/// Defaults from the direction kind: Hessian directions span [-1, 1]^2,
/// random directions use the tighter [-0.5, 0.5]^2.
impl SampleOptions {
    pub fn for_directions(dirs: &DirectionPair) -> Self {
        match dirs.provenance {
            Provenance::Random { .. } => Self {
                range1: (-0.5, 0.5),
                range2: (-0.5, 0.5),
                resolution: (41, 41),
            },
            Provenance::Hessian { .. } => Self::default(),
        }
    }
}

/// Evenly spaced coordinates. Symmetric ranges are mirrored exactly:
/// `out[i] == -out[n-1-i]` bitwise, with an exact 0 at the center of odd
/// resolutions, so reflected sampling runs reproduce each other bit-for-bit.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    let step = (hi - lo) / (n - 1) as f64;
    if lo == -hi {
        let mut out = vec![0.0; n];
        for i in 0..n / 2 {
            let v = lo + i as f64 * step;
            out[i] = v;
            out[n - 1 - i] = -v;
        }
        out
    } else {
        (0..n).map(|i| lo + i as f64 * step).collect()
    }
}

/// Evaluates the loss at every grid cell. Non-finite cells (including
/// evaluations failing with a non-finite-term error) are replaced by the
/// maximum finite cell value and counted in the metadata; a grid with no
/// finite cell at all is an error.
pub fn sample_landscape(
    model: &dyn LossModel,
    theta: &[f64],
    dirs: &DirectionPair,
    opts: &SampleOptions,
) -> Result<LandscapeGrid, SamplerError> {
    let (r, c) = opts.resolution;
    if r < 2 || c < 2 {
        return Err(SamplerError::ResolutionTooSmall(r, c));
    }
    for (lo, hi) in [opts.range1, opts.range2] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(SamplerError::BadRange(lo, hi));
        }
    }
    if dirs.dim() != theta.len() {
        return Err(SamplerError::DimensionMismatch {
            dirs: dirs.dim(),
            theta: theta.len(),
        });
    }
    if theta.len() != model.dim() {
        return Err(SamplerError::Model(ModelError::ShapeMismatch {
            expected: model.dim(),
            got: theta.len(),
        }));
    }
    let alphas1 = linspace(opts.range1.0, opts.range1.1, r);
    let alphas2 = linspace(opts.range2.0, opts.range2.1, c);

    let cells = indexed_map(r * c, |idx| -> Result<f64, ModelError> {
        let (i, j) = (idx / c, idx % c);
        let (a1, a2) = (alphas1[i], alphas2[j]);
        let mut perturbed = theta.to_vec();
        for (k, p) in perturbed.iter_mut().enumerate() {
            *p += a1 * dirs.delta1[k] + a2 * dirs.delta2[k];
        }
        model.loss(&perturbed)
    });

    let mut losses = Vec::with_capacity(r * c);
    for cell in cells {
        match cell {
            Ok(v) => losses.push(v),
            // Divergent evaluations are data here, not failures: the cell is
            // topologically "very high" and gets the max finite value below.
            Err(ModelError::NonFinite { .. }) => losses.push(f64::NAN),
            Err(e) => return Err(e.into()),
        }
    }
    let max_finite = losses
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !max_finite.is_finite() {
        return Err(SamplerError::AllNonFinite);
    }
    let mut nonfinite_replaced = 0;
    for v in losses.iter_mut() {
        if !v.is_finite() {
            *v = max_finite;
            nonfinite_replaced += 1;
        }
    }

    // The exact (0, 0) cell is the unperturbed model; otherwise evaluate
    // the center separately.
    let center_cell = alphas1
        .iter()
        .position(|&a| a == 0.0)
        .zip(alphas2.iter().position(|&a| a == 0.0));
    let center_loss = match center_cell {
        Some((i, j)) => losses[i * c + j],
        None => model.loss(theta)?,
    };

    let metadata = GridMetadata {
        model: None,
        directions: Some(dirs.provenance.clone()),
        ranges: [
            [opts.range1.0, opts.range1.1],
            [opts.range2.0, opts.range2.1],
        ],
        resolution: [r, c],
        center_loss,
        nonfinite_replaced,
        clipped_cells: 0,
        clip_quantile: None,
    };
    Ok(LandscapeGrid {
        alphas1,
        alphas2,
        losses,
        center_loss,
        metadata,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Image8,
    Knn { k: usize },
}

/// Turns a grid into a scalar field under the chosen representation, with
/// coordinates taken from the subspace axes.
pub fn to_field(grid: &LandscapeGrid, repr: &Representation) -> Result<ScalarField, FieldError> {
    let (r, c) = (grid.rows(), grid.cols());
    let mut coords = Vec::with_capacity(r * c);
    for &a1 in &grid.alphas1 {
        for &a2 in &grid.alphas2 {
            coords.push([a1, a2]);
        }
    }
    match repr {
        Representation::Image8 => field::grid_field(r, c, grid.losses.clone(), coords),
        Representation::Knn { k } => field::build_knn_graph(&coords, &grid.losses, *k),
    }
}

/// Caps values above the nearest-rank `q`-quantile at that quantile value,
/// recording how many cells were clipped. `q = 1` is the identity.
pub fn clip_outliers(grid: &LandscapeGrid, q: f64) -> Result<LandscapeGrid, SamplerError> {
    if !(q > 0.5 && q <= 1.0) {
        return Err(SamplerError::BadQuantile(q));
    }
    let n = grid.losses.len();
    let mut sorted = grid.losses.clone();
    sorted.sort_by(f64::total_cmp);
    // Nearest-rank quantile: smallest value whose rank >= q * n.
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    let threshold = sorted[rank - 1];
    let mut out = grid.clone();
    let mut clipped = 0;
    for v in out.losses.iter_mut() {
        if *v > threshold {
            *v = threshold;
            clipped += 1;
        }
    }
    out.metadata.clipped_cells = clipped;
    out.metadata.clip_quantile = Some(q);
    if let Some(i) = out.alphas1.iter().position(|&a| a == 0.0) {
        if let Some(j) = out.alphas2.iter().position(|&a| a == 0.0) {
            out.center_loss = out.losses[i * out.cols() + j];
            out.metadata.center_loss = out.center_loss;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directions::random_pair;
    use crate::models::QuadraticModel;

    fn unit_dirs(dim: usize) -> DirectionPair {
        let mut d1 = vec![0.0; dim];
        let mut d2 = vec![0.0; dim];
        d1[0] = 1.0;
        d2[1] = 1.0;
        DirectionPair {
            delta1: d1,
            delta2: d2,
            provenance: Provenance::Random { seed: 0 },
        }
    }

    #[test]
    fn origin_cell_is_unperturbed_loss() {
        let model = QuadraticModel::diagonal(vec![2.0, 3.0, 4.0]);
        let theta = [0.5, -0.5, 1.0];
        let dirs = unit_dirs(3);
        let grid = sample_landscape(
            &model,
            &theta,
            &dirs,
            &SampleOptions {
                resolution: (5, 5),
                ..SampleOptions::default()
            },
        )
        .unwrap();
        let expected = model.loss(&theta).unwrap();
        assert_eq!(grid.loss_at(2, 2), expected);
        assert_eq!(grid.center_loss, expected);
    }

    #[test]
    fn quadratic_surface_along_eigendirections_is_exact() {
        let model = QuadraticModel::diagonal(vec![5.0, 2.0, 1.0]);
        let theta = [0.0, 0.0, 0.0];
        let dirs = unit_dirs(3);
        let grid = sample_landscape(&model, &theta, &dirs, &SampleOptions::default()).unwrap();
        for i in 0..grid.rows() {
            for j in 0..grid.cols() {
                let (a1, a2) = (grid.alphas1[i], grid.alphas2[j]);
                let expected = 0.5 * (5.0 * a1 * a1 + 2.0 * a2 * a2);
                assert!((grid.loss_at(i, j) - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn default_grid_shape() {
        let model = QuadraticModel::diagonal(vec![1.0; 4]);
        let dirs = random_pair(4, 0).unwrap();
        let grid = sample_landscape(&model, &[0.0; 4], &dirs, &SampleOptions::default()).unwrap();
        assert_eq!(grid.rows() * grid.cols(), 1681);
        // Symmetric coordinate arrays around an exact zero.
        assert_eq!(grid.alphas1[20], 0.0);
        for i in 0..41 {
            assert_eq!(grid.alphas1[i], -grid.alphas1[40 - i]);
        }
    }

    #[test]
    fn reflection_consistency() {
        let model = QuadraticModel::dense(vec![
            vec![3.0, 1.0, 0.0],
            vec![1.0, 2.0, 0.5],
            vec![0.0, 0.5, 1.0],
        ]);
        let theta = [0.3, 0.1, -0.2];
        let dirs = random_pair(3, 5).unwrap();
        let flipped = DirectionPair {
            delta1: dirs.delta1.iter().map(|x| -x).collect(),
            delta2: dirs.delta2.clone(),
            provenance: dirs.provenance.clone(),
        };
        let opts = SampleOptions {
            resolution: (9, 7),
            ..SampleOptions::default()
        };
        let a = sample_landscape(&model, &theta, &dirs, &opts).unwrap();
        let b = sample_landscape(&model, &theta, &flipped, &opts).unwrap();
        for i in 0..9 {
            for j in 0..7 {
                assert_eq!(a.loss_at(i, j).to_bits(), b.loss_at(8 - i, j).to_bits());
            }
        }
    }

    #[test]
    fn coarser_odd_grid_is_a_subset() {
        let model = QuadraticModel::dense(vec![vec![2.0, 0.3], vec![0.3, 1.0]]);
        let theta = [0.2, -0.4];
        let dirs = random_pair(2, 1).unwrap();
        let fine = sample_landscape(
            &model,
            &theta,
            &dirs,
            &SampleOptions {
                resolution: (41, 41),
                ..SampleOptions::default()
            },
        )
        .unwrap();
        let coarse = sample_landscape(
            &model,
            &theta,
            &dirs,
            &SampleOptions {
                resolution: (21, 21),
                ..SampleOptions::default()
            },
        )
        .unwrap();
        for i in 0..21 {
            for j in 0..21 {
                assert_eq!(
                    coarse.loss_at(i, j).to_bits(),
                    fine.loss_at(2 * i, 2 * j).to_bits(),
                    "cell ({i}, {j})"
                );
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let model = QuadraticModel::diagonal(vec![1.0, 2.0, 3.0, 4.0]);
        let theta = [0.1, 0.2, 0.3, 0.4];
        let dirs = random_pair(4, 7).unwrap();
        let a = sample_landscape(&model, &theta, &dirs, &SampleOptions::default()).unwrap();
        let b = sample_landscape(&model, &theta, &dirs, &SampleOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    struct SometimesInfinite;

    impl LossModel for SometimesInfinite {
        fn dim(&self) -> usize {
            2
        }
        fn loss(&self, theta: &[f64]) -> Result<f64, ModelError> {
            if theta[0] > 0.5 {
                Ok(f64::INFINITY)
            } else {
                Ok(theta[0] + theta[1])
            }
        }
    }

    struct AlwaysNan;

    impl LossModel for AlwaysNan {
        fn dim(&self) -> usize {
            2
        }
        fn loss(&self, _theta: &[f64]) -> Result<f64, ModelError> {
            Ok(f64::NAN)
        }
    }

    #[test]
    fn nonfinite_cells_replaced_by_max_finite() {
        let dirs = unit_dirs(2);
        let grid =
            sample_landscape(&SometimesInfinite, &[0.0, 0.0], &dirs, &SampleOptions::default())
                .unwrap();
        assert!(grid.metadata.nonfinite_replaced > 0);
        let max = grid.losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(max.is_finite());
        assert!(grid.losses.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn all_nonfinite_is_an_error() {
        let dirs = unit_dirs(2);
        assert!(matches!(
            sample_landscape(&AlwaysNan, &[0.0, 0.0], &dirs, &SampleOptions::default()),
            Err(SamplerError::AllNonFinite)
        ));
    }

    #[test]
    fn to_field_image8_and_knn_agree_on_interior() {
        let model = QuadraticModel::diagonal(vec![1.0, 2.0]);
        let dirs = unit_dirs(2);
        let grid = sample_landscape(
            &model,
            &[0.0, 0.0],
            &dirs,
            &SampleOptions {
                resolution: (7, 7),
                ..SampleOptions::default()
            },
        )
        .unwrap();
        let image = to_field(&grid, &Representation::Image8).unwrap();
        assert_eq!(image.vertex_count(), 49);
        let knn = to_field(&grid, &Representation::Knn { k: 8 }).unwrap();
        for i in 1..6usize {
            for j in 1..6usize {
                let v = i * 7 + j;
                let img_nbrs = image.neighbors(v);
                let knn_nbrs = knn.neighbors(v);
                assert!(
                    img_nbrs.iter().all(|x| knn_nbrs.contains(x)),
                    "interior vertex {v}"
                );
            }
        }
    }

    #[test]
    fn clip_identity_cases() {
        let model = QuadraticModel::diagonal(vec![1.0, 1.0]);
        let dirs = unit_dirs(2);
        let grid = sample_landscape(&model, &[0.0, 0.0], &dirs, &SampleOptions::default()).unwrap();
        let clipped = clip_outliers(&grid, 1.0).unwrap();
        assert_eq!(clipped.losses, grid.losses);
        assert_eq!(clipped.metadata.clipped_cells, 0);

        // Constant field: any valid quantile is the identity.
        let mut constant = grid.clone();
        constant.losses.iter_mut().for_each(|v| *v = 2.0);
        let clipped = clip_outliers(&constant, 0.75).unwrap();
        assert_eq!(clipped.losses, constant.losses);
        assert_eq!(clipped.metadata.clipped_cells, 0);
    }

    #[test]
    fn clip_nearest_rank_on_1_to_100() {
        // 10x10 grid holding 1..=100: the 0.9 quantile by nearest rank is 90,
        // and exactly 10 cells sit above it.
        let mut grid = {
            let model = QuadraticModel::diagonal(vec![1.0, 1.0]);
            let dirs = unit_dirs(2);
            sample_landscape(
                &model,
                &[0.0, 0.0],
                &dirs,
                &SampleOptions {
                    resolution: (10, 10),
                    ..SampleOptions::default()
                },
            )
            .unwrap()
        };
        for (i, v) in grid.losses.iter_mut().enumerate() {
            *v = (i + 1) as f64;
        }
        let clipped = clip_outliers(&grid, 0.9).unwrap();
        let max = clipped.losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(max, 90.0);
        assert_eq!(clipped.metadata.clipped_cells, 10);
    }

    #[test]
    fn clip_rejects_bad_quantile() {
        let model = QuadraticModel::diagonal(vec![1.0, 1.0]);
        let dirs = unit_dirs(2);
        let grid = sample_landscape(&model, &[0.0, 0.0], &dirs, &SampleOptions::default()).unwrap();
        assert!(matches!(
            clip_outliers(&grid, 0.5),
            Err(SamplerError::BadQuantile(_))
        ));
        assert!(matches!(
            clip_outliers(&grid, 1.1),
            Err(SamplerError::BadQuantile(_))
        ));
    }
}
