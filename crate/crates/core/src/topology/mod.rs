//! Sub-level-set topology of a scalar field: the merge tree and the
//! 0-dimensional persistence diagram, computed in one union-find sweep over
//! the vertices in ascending value order.
//!
//! Sweeping the tie-broken order (value, then vertex index — a simulation of
//! simplicity, so plateaus are totally ordered), a vertex with no lower
//! processed neighbor opens a new component as a minimum; a vertex joining
//! two or more components closes all but one of them through a chain of
//! binary saddles at its value. The elder rule decides survival at each
//! saddle: the component with the lower tie-broken birth lives on, the
//! younger one contributes a finite (birth, death) pair. Each connected
//! component additionally yields one essential pair whose death is set to
//! the component's maximum value, which keeps persistence averages finite
//! for single-basin fields.

mod union_find;

pub mod export;
pub mod oracle;

use serde::Serialize;

use crate::field::ScalarField;
use union_find::UnionFind;

#[derive(Debug, thiserror::Error)]
pub enum TopologyError {
    #[error("cannot analyze an empty field")]
    EmptyField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    #[serde(rename = "min")]
    Minimum,
    Saddle,
    Root,
}

/// A merge-tree node. `parent` points toward higher scalar values; roots
/// have none. Several nodes may share a vertex (a component maximum that is
/// also a saddle, for example).
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTreeNode {
    pub id: usize,
    pub vertex: usize,
    pub value: f64,
    pub kind: NodeKind,
    pub parent: Option<usize>,
}

/// Record of one binary merge: which two component representatives (their
/// minimum vertices) met at this saddle and which of them survived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaddleMerge {
    pub saddle_node: usize,
    pub merged: [usize; 2],
    pub survivor: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeTree {
    pub nodes: Vec<MergeTreeNode>,
    pub merges: Vec<SaddleMerge>,
    pub n_components: usize,
}

impl MergeTree {
    pub fn n_minima(&self) -> usize {
        self.count_kind(NodeKind::Minimum)
    }

    pub fn n_saddles(&self) -> usize {
        self.count_kind(NodeKind::Saddle)
    }

    fn count_kind(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Tree edges as (child, parent) node-id pairs.
    pub fn edges(&self) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.nodes
            .iter()
            .filter_map(|n| n.parent.map(|p| [n.id, p]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
    pub birth_vertex: usize,
    pub death_vertex: usize,
    pub essential: bool,
}

impl PersistencePair {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pub pairs: Vec<PersistencePair>,
    pub field_min: f64,
    pub field_max: f64,
}

impl PersistenceDiagram {
    pub fn finite_pairs(&self) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(|p| !p.essential)
    }

    pub fn essential_pairs(&self) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(|p| p.essential)
    }
}

/// Merge tree of the field's sub-level sets.
pub fn merge_tree(field: &ScalarField) -> Result<MergeTree, TopologyError> {
    sublevel_analysis(field).map(|(t, _)| t)
}

/// 0-dimensional persistence diagram of the field's sub-level sets.
pub fn persistence_diagram(field: &ScalarField) -> Result<PersistenceDiagram, TopologyError> {
    sublevel_analysis(field).map(|(_, d)| d)
}

/// Computes merge tree and persistence diagram together in a single sweep.
pub fn sublevel_analysis(
    field: &ScalarField,
) -> Result<(MergeTree, PersistenceDiagram), TopologyError> {
    let n = field.vertex_count();
    if n == 0 {
        return Err(TopologyError::EmptyField);
    }
    let values = field.values();
    let before = |a: usize, b: usize| (values[a], a) < (values[b], b);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut position = vec![0usize; n];
    for (rank, &v) in order.iter().enumerate() {
        position[v] = rank;
    }

    let mut uf = UnionFind::new(n);
    // Component bookkeeping, valid at union-find roots only.
    let mut rep = vec![usize::MAX; n]; // minimum vertex (birth) of the component
    let mut node_of = vec![usize::MAX; n]; // current top node id of the component
    let mut high = vec![usize::MAX; n]; // latest (= highest) vertex so far

    let mut nodes: Vec<MergeTreeNode> = Vec::new();
    let mut merges: Vec<SaddleMerge> = Vec::new();
    let mut finite: Vec<PersistencePair> = Vec::new();

    let push_node = |nodes: &mut Vec<MergeTreeNode>, vertex: usize, value: f64, kind: NodeKind| {
        let id = nodes.len();
        nodes.push(MergeTreeNode {
            id,
            vertex,
            value,
            kind,
            parent: None,
        });
        id
    };

    for &u in &order {
        let mut roots: Vec<usize> = field
            .neighbors(u)
            .iter()
            .filter(|&&nb| position[nb] < position[u])
            .map(|&nb| uf.find(nb))
            .collect();
        roots.sort_unstable();
        roots.dedup();

        if roots.is_empty() {
            // No lower neighbor: a local minimum opens a component.
            let id = push_node(&mut nodes, u, values[u], NodeKind::Minimum);
            rep[u] = u;
            node_of[u] = id;
            high[u] = u;
            continue;
        }

        // Deterministic m-way merge: binary saddles chained in ascending
        // order of component representative.
        roots.sort_unstable_by_key(|&r| rep[r]);
        let mut acc = roots[0];
        for &r in &roots[1..] {
            let saddle = push_node(&mut nodes, u, values[u], NodeKind::Saddle);
            nodes[node_of[acc]].parent = Some(saddle);
            nodes[node_of[r]].parent = Some(saddle);
            let (survivor, dying) = if before(rep[acc], rep[r]) {
                (acc, r)
            } else {
                (r, acc)
            };
            finite.push(PersistencePair {
                birth: values[rep[dying]],
                death: values[u],
                birth_vertex: rep[dying],
                death_vertex: u,
                essential: false,
            });
            merges.push(SaddleMerge {
                saddle_node: saddle,
                merged: [rep[acc], rep[r]],
                survivor: rep[survivor],
            });
            let keep = rep[survivor];
            let root = uf.union(acc, r);
            rep[root] = keep;
            node_of[root] = saddle;
            acc = root;
        }
        let (keep_rep, keep_node) = (rep[acc], node_of[acc]);
        let root = uf.union(u, acc);
        rep[root] = keep_rep;
        node_of[root] = keep_node;
        high[root] = u;
    }

    // One root node per component, placed at the component maximum; the
    // surviving branch becomes the essential pair.
    let mut component_roots: Vec<usize> = order.iter().map(|&v| uf.find(v)).collect();
    component_roots.sort_unstable();
    component_roots.dedup();
    component_roots.sort_unstable_by_key(|&r| rep[r]);

    let mut essential: Vec<PersistencePair> = Vec::new();
    for &root in &component_roots {
        let top = high[root];
        let id = push_node(&mut nodes, top, values[top], NodeKind::Root);
        nodes[node_of[root]].parent = Some(id);
        essential.push(PersistencePair {
            birth: values[rep[root]],
            death: values[top],
            birth_vertex: rep[root],
            death_vertex: top,
            essential: true,
        });
    }

    let tree = MergeTree {
        nodes,
        merges,
        n_components: component_roots.len(),
    };
    let mut pairs = finite;
    pairs.extend(essential);
    let diagram = PersistenceDiagram {
        pairs,
        field_min: values[order[0]],
        field_max: values[order[n - 1]],
    };
    debug_assert_eq!(
        diagram.finite_pairs().count(),
        tree.n_minima() - tree.n_components
    );
    Ok((tree, diagram))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{build_image_grid, ScalarField};

    fn path_field(values: &[f64]) -> ScalarField {
        let coords: Vec<[f64; 2]> = (0..values.len()).map(|i| [i as f64, 0.0]).collect();
        let edges: Vec<[usize; 2]> = (1..values.len()).map(|i| [i - 1, i]).collect();
        ScalarField::from_parts(values.to_vec(), coords, edges).unwrap()
    }

    #[test]
    fn monotone_path_has_single_basin() {
        let (tree, diagram) = sublevel_analysis(&path_field(&[0.0, 1.0, 2.0, 3.0])).unwrap();
        assert_eq!(tree.n_minima(), 1);
        assert_eq!(tree.n_saddles(), 0);
        let root = tree.nodes.iter().find(|n| n.kind == NodeKind::Root).unwrap();
        assert_eq!(root.vertex, 3);
        assert_eq!(root.value, 3.0);
        assert_eq!(diagram.pairs.len(), 1);
        assert!(diagram.pairs[0].essential);
        assert_eq!((diagram.pairs[0].birth, diagram.pairs[0].death), (0.0, 3.0));
    }

    #[test]
    fn two_basin_path() {
        let (tree, diagram) = sublevel_analysis(&path_field(&[2.0, 1.0, 3.0, 0.0, 4.0])).unwrap();
        assert_eq!(tree.n_minima(), 2);
        assert_eq!(tree.n_saddles(), 1);
        let saddle = tree
            .nodes
            .iter()
            .find(|n| n.kind == NodeKind::Saddle)
            .unwrap();
        assert_eq!(saddle.value, 3.0);
        let mut finite: Vec<(f64, f64)> = diagram
            .finite_pairs()
            .map(|p| (p.birth, p.death))
            .collect();
        finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(finite, vec![(1.0, 3.0)]);
        let ess: Vec<(f64, f64)> = diagram
            .essential_pairs()
            .map(|p| (p.birth, p.death))
            .collect();
        assert_eq!(ess, vec![(0.0, 4.0)]);
        // Elder rule: the vertex-3 minimum (value 0) survives.
        assert_eq!(tree.merges[0].survivor, 3);
    }

    #[test]
    fn plateau_merge_splits_into_binary_saddles() {
        let rows = vec![
            vec![1.0, 9.0, 2.0],
            vec![9.0, 9.0, 9.0],
            vec![3.0, 9.0, 0.0],
        ];
        let field = build_image_grid(&rows).unwrap();
        let (tree, diagram) = sublevel_analysis(&field).unwrap();
        assert_eq!(tree.n_minima(), 4);
        assert_eq!(tree.n_saddles(), 3);
        assert_eq!(tree.n_components, 1);
        for node in tree.nodes.iter().filter(|n| n.kind == NodeKind::Saddle) {
            assert_eq!(node.value, 9.0);
        }
        let mut births: Vec<f64> = diagram.finite_pairs().map(|p| p.birth).collect();
        births.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(births, vec![1.0, 2.0, 3.0]); // global min 0 survives
        assert!(diagram.finite_pairs().all(|p| p.death == 9.0));
    }

    #[test]
    fn constant_field_single_zero_persistence_pair() {
        let field = build_image_grid(&[vec![5.0, 5.0], vec![5.0, 5.0]]).unwrap();
        let (tree, diagram) = sublevel_analysis(&field).unwrap();
        assert_eq!(tree.n_minima(), 1);
        assert_eq!(tree.n_saddles(), 0);
        assert_eq!(diagram.pairs.len(), 1);
        assert_eq!(diagram.pairs[0].persistence(), 0.0);
        assert!(diagram.pairs[0].essential);
    }

    #[test]
    fn shift_moves_births_and_deaths_rigidly() {
        let base = [2.0, 1.0, 3.0, 0.0, 4.0];
        let shifted: Vec<f64> = base.iter().map(|v| v + 10.0).collect();
        let (_, d0) = sublevel_analysis(&path_field(&base)).unwrap();
        let (_, d1) = sublevel_analysis(&path_field(&shifted)).unwrap();
        assert_eq!(d0.pairs.len(), d1.pairs.len());
        for (p0, p1) in d0.pairs.iter().zip(&d1.pairs) {
            assert_eq!(p0.birth + 10.0, p1.birth);
            assert_eq!(p0.death + 10.0, p1.death);
            assert_eq!(p0.persistence(), p1.persistence());
        }
    }

    #[test]
    fn saddle_nodes_have_two_children_and_a_parent() {
        let rows = vec![
            vec![0.5, 6.0, 1.5, 7.0, 0.7],
            vec![6.5, 8.0, 6.2, 8.5, 6.8],
            vec![1.2, 6.1, 0.9, 6.6, 1.8],
        ];
        let field = build_image_grid(&rows).unwrap();
        let (tree, _) = sublevel_analysis(&field).unwrap();
        let mut child_count = vec![0usize; tree.nodes.len()];
        for [_, parent] in tree.edges() {
            child_count[parent] += 1;
        }
        for node in &tree.nodes {
            match node.kind {
                NodeKind::Minimum => {
                    assert_eq!(child_count[node.id], 0);
                    assert!(node.parent.is_some());
                }
                NodeKind::Saddle => {
                    assert_eq!(child_count[node.id], 2);
                    assert!(node.parent.is_some());
                }
                NodeKind::Root => {
                    assert_eq!(child_count[node.id], 1);
                    assert!(node.parent.is_none());
                }
            }
            if let Some(p) = node.parent {
                assert!(tree.nodes[p].value >= node.value);
            }
        }
    }

    #[test]
    fn disconnected_field_gets_one_essential_class_per_component() {
        // Two disjoint path components.
        let values = vec![1.0, 0.5, 2.0, 4.0, 3.0];
        let coords: Vec<[f64; 2]> = (0..5).map(|i| [i as f64, 0.0]).collect();
        let edges = vec![[0, 1], [1, 2], [3, 4]];
        let field = ScalarField::from_parts(values, coords, edges).unwrap();
        let (tree, diagram) = sublevel_analysis(&field).unwrap();
        assert_eq!(tree.n_components, 2);
        assert_eq!(diagram.essential_pairs().count(), 2);
        assert_eq!(
            diagram.finite_pairs().count(),
            tree.n_minima() - tree.n_components
        );
    }
}
