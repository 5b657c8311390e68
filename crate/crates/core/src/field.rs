//! Vertex-weighted graphs carrying a sampled scalar function, plus the two
//! connectivity constructions used for landscapes: pixel-style 8-connectivity
//! on regular grids and symmetrized k-nearest-neighbor graphs on point sets.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("field has no vertices")]
    NoVertices,
    #[error("non-finite value at vertex {index}")]
    NonFiniteValue { index: usize },
    #[error("non-finite coordinate at vertex {index}")]
    NonFiniteCoord { index: usize },
    #[error("grid row {row} has {got} columns, expected {expected}")]
    RaggedRows { row: usize, got: usize, expected: usize },
    #[error("non-finite grid entry at row {row}, column {col}")]
    NonFiniteCell { row: usize, col: usize },
    #[error("coordinate count {coords} does not match value count {values}")]
    CoordMismatch { coords: usize, values: usize },
    #[error("edge ({a}, {b}) out of range for {vertices} vertices")]
    EdgeOutOfRange { a: usize, b: usize, vertices: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("k = {k} must be positive and smaller than the point count {n}")]
    BadK { k: usize, n: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("field metadata sidecar {0} is missing or unreadable")]
    MetaMissing(PathBuf),
    #[error("field metadata: {0}")]
    MetaInvalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How a field's connectivity is (re)derived from its vertex list. Stored in
/// a JSON sidecar next to the vertex CSV, since edges are never serialized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "lowercase")]
pub enum FieldMeta {
    Grid { rows: usize, cols: usize },
    Knn { k: usize },
}

/// An immutable scalar field: one value and one 2D coordinate per vertex,
/// undirected connectivity stored both as a normalized edge list and as
/// per-vertex adjacency for traversal.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
    coords: Vec<[f64; 2]>,
    edges: Vec<[usize; 2]>,
    adj_offsets: Vec<usize>,
    adj_targets: Vec<usize>,
}

impl ScalarField {
    /// Builds a field from raw parts, validating every invariant: finite
    /// values and coordinates, matching lengths, in-range edges, no
    /// self-loops, no duplicates. Edges are normalized to `a < b` and sorted.
    pub fn from_parts(
        values: Vec<f64>,
        coords: Vec<[f64; 2]>,
        edges: Vec<[usize; 2]>,
    ) -> Result<Self, FieldError> {
        let n = values.len();
        if n == 0 {
            return Err(FieldError::NoVertices);
        }
        if coords.len() != n {
            return Err(FieldError::CoordMismatch {
                coords: coords.len(),
                values: n,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFiniteValue { index: i });
        }
        if let Some(i) = coords.iter().position(|c| !c[0].is_finite() || !c[1].is_finite()) {
            return Err(FieldError::NonFiniteCoord { index: i });
        }
        let mut edges: Vec<[usize; 2]> = edges
            .into_iter()
            .map(|[a, b]| if a <= b { [a, b] } else { [b, a] })
            .collect();
        edges.sort_unstable();
        for pair in edges.windows(2) {
            if pair[0] == pair[1] {
                return Err(FieldError::DuplicateEdge(pair[0][0], pair[0][1]));
            }
        }
        for &[a, b] in &edges {
            if a == b {
                return Err(FieldError::SelfLoop(a));
            }
            if b >= n {
                return Err(FieldError::EdgeOutOfRange { a, b, vertices: n });
            }
        }

        // CSR adjacency.
        let mut degree = vec![0usize; n];
        for &[a, b] in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut adj_offsets = vec![0usize; n + 1];
        for i in 0..n {
            adj_offsets[i + 1] = adj_offsets[i] + degree[i];
        }
        let mut cursor = adj_offsets.clone();
        let mut adj_targets = vec![0usize; 2 * edges.len()];
        for &[a, b] in &edges {
            adj_targets[cursor[a]] = b;
            cursor[a] += 1;
            adj_targets[cursor[b]] = a;
            cursor[b] += 1;
        }
        for i in 0..n {
            adj_targets[adj_offsets[i]..adj_offsets[i + 1]].sort_unstable();
        }

        Ok(Self {
            values,
            coords,
            edges,
            adj_offsets,
            adj_targets,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.values.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coord(&self, v: usize) -> [f64; 2] {
        self.coords[v]
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// Normalized (`a < b`), lexicographically sorted edge list.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Neighbors of `v` in ascending vertex order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj_targets[self.adj_offsets[v]..self.adj_offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj_offsets[v + 1] - self.adj_offsets[v]
    }
}

/// Builds an 8-connected image-style field from an R x C value matrix.
/// Vertex `(i, j)` gets index `i*C + j` and coordinate `(i, j)`; interior
/// vertices have 8 neighbors (axial plus diagonal), corners 3.
pub fn build_image_grid(rows: &[Vec<f64>]) -> Result<ScalarField, FieldError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(FieldError::NoVertices);
    }
    let r = rows.len();
    let c = rows[0].len();
    let mut values = Vec::with_capacity(r * c);
    let mut coords = Vec::with_capacity(r * c);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(FieldError::RaggedRows {
                row: i,
                got: row.len(),
                expected: c,
            });
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(FieldError::NonFiniteCell { row: i, col: j });
            }
            values.push(v);
            coords.push([i as f64, j as f64]);
        }
    }
    grid_field(r, c, values, coords)
}

/// Grid connectivity over pre-flattened row-major values with explicit
/// coordinates. Shared by `build_image_grid`, the sampler, and field loading.
pub(crate) fn grid_field(
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    coords: Vec<[f64; 2]>,
) -> Result<ScalarField, FieldError> {
    // Emit each undirected edge once via "forward" offsets.
    const FORWARD: [(isize, isize); 4] = [(0, 1), (1, -1), (1, 0), (1, 1)];
    let mut edges = Vec::with_capacity(4 * rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            for (di, dj) in FORWARD {
                let (a, b) = (i as isize + di, j as isize + dj);
                if a >= 0 && (a as usize) < rows && b >= 0 && (b as usize) < cols {
                    edges.push([i * cols + j, a as usize * cols + b as usize]);
                }
            }
        }
    }
    ScalarField::from_parts(values, coords, edges)
}

/// Builds the union-symmetrized exact k-nearest-neighbor graph of a 2D point
/// set. Distance ties are broken by ascending vertex index, so the result is
/// deterministic even for duplicate points.
pub fn build_knn_graph(
    points: &[[f64; 2]],
    values: &[f64],
    k: usize,
) -> Result<ScalarField, FieldError> {
    let n = points.len();
    if n == 0 {
        return Err(FieldError::NoVertices);
    }
    if k == 0 || k >= n {
        return Err(FieldError::BadK { k, n });
    }
    let neighbor_lists = crate::parallel::indexed_map(n, |i| {
        let p = points[i];
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let dx = points[j][0] - p[0];
                let dy = points[j][1] - p[1];
                (dx * dx + dy * dy, j)
            })
            .collect();
        // Total order: squared distance, then index.
        cand.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cand.truncate(k);
        cand.into_iter().map(|(_, j)| j).collect::<Vec<usize>>()
    });
    let mut edges = Vec::with_capacity(n * k);
    for (i, nbrs) in neighbor_lists.iter().enumerate() {
        for &j in nbrs {
            edges.push(if i < j { [i, j] } else { [j, i] });
        }
    }
    edges.sort_unstable();
    edges.dedup();
    ScalarField::from_parts(values.to_vec(), points.to_vec(), edges)
}

const CSV_HEADER: &str = "alpha1,alpha2,loss";

fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Writes the vertex CSV (`alpha1,alpha2,loss`, one row per vertex, decimal
/// serialization with full round-trip precision). Edges are not serialized.
pub fn write_field_csv(field: &ScalarField, path: &Path) -> Result<(), FieldError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(field_csv_string(field).as_bytes())?;
    Ok(())
}

/// The vertex CSV as an in-memory string; shared with atomic file writers.
pub fn field_csv_string(field: &ScalarField) -> String {
    let mut body = String::with_capacity(24 * field.vertex_count());
    body.push_str(CSV_HEADER);
    body.push('\n');
    for v in 0..field.vertex_count() {
        let [a1, a2] = field.coord(v);
        writeln!(body, "{},{},{}", a1, a2, field.value(v)).expect("string write");
    }
    body
}

/// Saves a field as vertex CSV plus a builder sidecar (`*.meta.json`) from
/// which connectivity is re-derived on load.
pub fn save_field(field: &ScalarField, meta: &FieldMeta, csv_path: &Path) -> Result<(), FieldError> {
    if let FieldMeta::Grid { rows, cols } = *meta {
        if rows * cols != field.vertex_count() {
            return Err(FieldError::MetaInvalid(format!(
                "grid {}x{} does not cover {} vertices",
                rows,
                cols,
                field.vertex_count()
            )));
        }
    }
    write_field_csv(field, csv_path)?;
    let json =
        serde_json::to_string_pretty(meta).map_err(|e| FieldError::MetaInvalid(e.to_string()))?;
    std::fs::write(meta_path(csv_path), json)?;
    Ok(())
}

/// Loads a field saved by [`save_field`]: parses the vertex CSV, reads the
/// sidecar, and re-runs the declared builder. Round-trips exactly.
pub fn load_field(csv_path: &Path) -> Result<ScalarField, FieldError> {
    let meta_file = meta_path(csv_path);
    let meta_text = std::fs::read_to_string(&meta_file)
        .map_err(|_| FieldError::MetaMissing(meta_file.clone()))?;
    let meta: FieldMeta =
        serde_json::from_str(&meta_text).map_err(|e| FieldError::MetaInvalid(e.to_string()))?;
    let (coords, values) = read_field_csv(csv_path)?;
    rebuild(meta, coords, values)
}

fn rebuild(
    meta: FieldMeta,
    coords: Vec<[f64; 2]>,
    values: Vec<f64>,
) -> Result<ScalarField, FieldError> {
    match meta {
        FieldMeta::Grid { rows, cols } => {
            if rows * cols != values.len() {
                return Err(FieldError::MetaInvalid(format!(
                    "grid {}x{} does not cover {} vertices",
                    rows,
                    cols,
                    values.len()
                )));
            }
            grid_field(rows, cols, values, coords)
        }
        FieldMeta::Knn { k } => build_knn_graph(&coords, &values, k),
    }
}

fn read_field_csv(path: &Path) -> Result<(Vec<[f64; 2]>, Vec<f64>), FieldError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut coords = Vec::new();
    let mut values = Vec::new();
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        None => return Err(FieldError::NoVertices),
        Some((_, line)) => {
            let line = line?;
            if line.trim() != CSV_HEADER {
                return Err(FieldError::Parse {
                    line: 1,
                    message: format!("expected header `{}`, found `{}`", CSV_HEADER, line.trim()),
                });
            }
        }
    }
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(FieldError::Parse {
                line: line_no,
                message: format!("expected 3 columns, found {}", cells.len()),
            });
        }
        let mut parsed = [0.0f64; 3];
        for (slot, cell) in parsed.iter_mut().zip(&cells) {
            *slot = cell.trim().parse::<f64>().map_err(|_| FieldError::Parse {
                line: line_no,
                message: format!("cannot parse `{}` as a number", cell.trim()),
            })?;
            if !slot.is_finite() {
                return Err(FieldError::Parse {
                    line: line_no,
                    message: format!("non-finite value `{}`", cell.trim()),
                });
            }
        }
        coords.push([parsed[0], parsed[1]]);
        values.push(parsed[2]);
    }
    if values.is_empty() {
        return Err(FieldError::NoVertices);
    }
    Ok((coords, values))
}
