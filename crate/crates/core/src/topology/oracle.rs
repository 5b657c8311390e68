//! Brute-force reference computations for the sub-level-set topology.
//!
//! Everything here recomputes connected components from scratch with
//! flood fill at every threshold, deliberately sharing no code with the
//! union-find sweep it cross-checks. Quadratic cost; intended for small
//! fields in self-checks (`oracle-check`) and test suites.
//!
//! Pair reconstruction assumes pairwise-distinct field values (components
//! are identified by their minimum vertex; on plateaus the sweep's
//! simulation of simplicity can legitimately produce zero-persistence
//! pairs this reconstruction does not see).

use crate::field::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraclePair {
    pub birth: f64,
    pub death: f64,
    pub essential: bool,
}

/// Ascending (value, index) vertex order — the same simulation of
/// simplicity the sweep uses.
fn sorted_vertices(field: &ScalarField) -> Vec<usize> {
    let mut order: Vec<usize> = (0..field.vertex_count()).collect();
    order.sort_unstable_by(|&a, &b| {
        field.value(a).total_cmp(&field.value(b)).then(a.cmp(&b))
    });
    order
}

/// Flood-fills the subgraph induced by the first `k` vertices of `order`,
/// returning for each component its identifying minimum vertex and its
/// maximum vertex (both under the tie-broken order).
fn components_of_prefix(field: &ScalarField, order: &[usize], k: usize) -> Vec<(usize, usize)> {
    let n = field.vertex_count();
    let mut active = vec![false; n];
    for &v in &order[..k] {
        active[v] = true;
    }
    let before = |a: usize, b: usize| (field.value(a), a) < (field.value(b), b);
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for &start in &order[..k] {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let (mut lo, mut hi) = (start, start);
        while let Some(v) = stack.pop() {
            if before(v, lo) {
                lo = v;
            }
            if before(hi, v) {
                hi = v;
            }
            for &nb in field.neighbors(v) {
                if active[nb] && !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        comps.push((lo, hi));
    }
    comps
}

/// Number of sub-level-set components once the first `k` vertices (in
/// tie-broken order) are present.
pub fn component_count_at_prefix(field: &ScalarField, k: usize) -> usize {
    let order = sorted_vertices(field);
    components_of_prefix(field, &order, k).len()
}

/// Reconstructs all persistence pairs by re-flood-filling the sub-level set
/// at every threshold in the sorted value list and tracking component
/// identities between consecutive thresholds.
pub fn floodfill_pairs(field: &ScalarField) -> Vec<OraclePair> {
    let order = sorted_vertices(field);
    let n = order.len();
    let mut pairs = Vec::new();
    let mut previous: Vec<(usize, usize)> = Vec::new();
    for k in 1..=n {
        let current = components_of_prefix(field, &order, k);
        let threshold_vertex = order[k - 1];
        for &(id, _) in &previous {
            if !current.iter().any(|&(c, _)| c == id) {
                // This component's identity vanished: it merged into an
                // elder one at the vertex just added.
                pairs.push(OraclePair {
                    birth: field.value(id),
                    death: field.value(threshold_vertex),
                    essential: false,
                });
            }
        }
        previous = current;
    }
    for &(id, hi) in &previous {
        pairs.push(OraclePair {
            birth: field.value(id),
            death: field.value(hi),
            essential: true,
        });
    }
    pairs
}

/// For every prefix threshold, the flood-fill component count paired with
/// the threshold vertex's value.
pub fn alive_counts(field: &ScalarField) -> Vec<(f64, usize)> {
    let order = sorted_vertices(field);
    (1..=order.len())
        .map(|k| {
            let v = field.value(order[k - 1]);
            (v, components_of_prefix(field, &order, k).len())
        })
        .collect()
}

/// Vertices that are local minima under the tie-broken order: no neighbor
/// compares lower by (value, index).
pub fn local_min_vertices(field: &ScalarField) -> Vec<usize> {
    let before = |a: usize, b: usize| (field.value(a), a) < (field.value(b), b);
    (0..field.vertex_count())
        .filter(|&v| field.neighbors(v).iter().all(|&nb| !before(nb, v)))
        .collect()
}
