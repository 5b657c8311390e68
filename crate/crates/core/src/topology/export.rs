//! Plain-text exports of topology results: merge-tree JSON, a DOT graph
//! description for standard graph-drawing tools, and the diagram CSV.
//! All exports are deterministic byte-for-byte given equal inputs.

use std::fmt::Write as _;

use serde::Serialize;

use super::{MergeTree, NodeKind, PersistenceDiagram};

#[derive(Serialize)]
struct NodeJson {
    id: usize,
    vertex: usize,
    value: f64,
    kind: NodeKind,
}

#[derive(Serialize)]
struct MergeTreeJson {
    nodes: Vec<NodeJson>,
    edges: Vec<[usize; 2]>,
}

/// Merge tree as JSON: `nodes` with `{"id","vertex","value","kind"}` and
/// `edges` as `[child, parent]` node-id pairs.
pub fn merge_tree_json(tree: &MergeTree) -> String {
    let doc = MergeTreeJson {
        nodes: tree
            .nodes
            .iter()
            .map(|n| NodeJson {
                id: n.id,
                vertex: n.vertex,
                value: n.value,
                kind: n.kind,
            })
            .collect(),
        edges: tree.edges().collect(),
    };
    serde_json::to_string_pretty(&doc).expect("merge tree serialization")
}

/// Merge tree as a DOT graph, node labels carrying kind and scalar value.
pub fn merge_tree_dot(tree: &MergeTree) -> String {
    let mut out = String::from("graph merge_tree {\n");
    for n in &tree.nodes {
        let shape = match n.kind {
            NodeKind::Minimum => "circle",
            NodeKind::Saddle => "diamond",
            NodeKind::Root => "square",
        };
        writeln!(
            out,
            "  n{} [shape={}, label=\"v{} @ {}\"];",
            n.id, shape, n.vertex, n.value
        )
        .expect("string write");
    }
    for [child, parent] in tree.edges() {
        writeln!(out, "  n{} -- n{};", child, parent).expect("string write");
    }
    out.push_str("}\n");
    out
}

/// Diagram CSV with header `birth,death,essential`, one row per pair.
pub fn diagram_csv(diagram: &PersistenceDiagram) -> String {
    let mut out = String::from("birth,death,essential\n");
    for p in &diagram.pairs {
        writeln!(out, "{},{},{}", p.birth, p.death, p.essential).expect("string write");
    }
    out
}
