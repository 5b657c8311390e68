//! Two-dimensional loss-landscape analysis: sample a model's loss on a plane
//! through parameter space, represent it as a vertex-weighted graph, extract
//! the merge tree and 0-dimensional persistence diagram of its sub-level
//! sets, and quantify both the topology (saddle and minima counts, average
//! persistence) and the local curvature (top Hessian eigenvalues, trace,
//! eigenvalue spectral density).
//!
//! The crate is organized along the pipeline:
//!
//! * [`models`] — differentiable losses over a flat parameter vector (a
//!   small MLP classifier, a physics-informed convection loss, quadratic
//!   and closed-form test surfaces) plus an Adam trainer.
//! * [`directions`] — the two orthonormal subspace directions, random or
//!   top-2 Hessian eigenvectors via matrix-free power iteration.
//! * [`sampler`] — grid evaluation of the loss in the subspace, outlier
//!   clipping, and conversion to a field representation.
//! * [`field`] — scalar fields as graphs: 8-connected image grids,
//!   k-nearest-neighbor graphs, and the CSV/JSON persistence format.
//! * [`topology`] — merge tree and persistence diagram via a sorted
//!   union-find sweep, with a brute-force flood-fill reference in
//!   [`topology::oracle`].
//! * [`metrics`] — topological and Hessian-based summaries.

pub mod directions;
pub mod field;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod parallel;
pub mod sampler;
pub mod topology;

pub use directions::{random_pair, top2_eigenvectors, DirectionPair, Provenance};
pub use field::{build_image_grid, build_knn_graph, load_field, save_field, FieldMeta, ScalarField};
pub use metrics::{topo_metrics, HessianSummary, SpectralHistogram, TopoMetrics};
pub use models::{
    analytic_field, train, AnalyticKind, ConvectionPinnSpec, GradModel, LossModel, MlpModel,
    MlpSpec, ParameterVector, PinnModel, QuadraticModel,
};
pub use sampler::{
    clip_outliers, sample_landscape, to_field, LandscapeGrid, Representation, SampleOptions,
};
pub use topology::{
    merge_tree, persistence_diagram, sublevel_analysis, MergeTree, PersistenceDiagram,
    PersistencePair,
};
