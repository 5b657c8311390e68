//! Property-based invariants of the sub-level-set topology: agreement with
//! the flood-fill oracle, alive-count identities, and equivariance under
//! vertex relabeling, value shifts, and positive scaling.

mod common;

use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random_distinct_field;
use lossscape_core::field::ScalarField;
use lossscape_core::topology::{oracle, sublevel_analysis};

fn sorted_triples(pairs: impl Iterator<Item = (f64, f64, bool)>) -> Vec<(f64, f64, bool)> {
    let mut v: Vec<(f64, f64, bool)> = pairs.collect();
    v.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    v
}

#[test]
fn diagram_matches_floodfill_oracle_on_random_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for round in 0..300 {
        let field = random_distinct_field(&mut rng, 6, 6);
        let (tree, diagram) = sublevel_analysis(&field).unwrap();
        let got = sorted_triples(diagram.pairs.iter().map(|p| (p.birth, p.death, p.essential)));
        let want = sorted_triples(
            oracle::floodfill_pairs(&field)
                .into_iter()
                .map(|p| (p.birth, p.death, p.essential)),
        );
        assert_eq!(got, want, "round {round}");
        assert_eq!(
            tree.n_minima(),
            oracle::local_min_vertices(&field).len(),
            "round {round}"
        );
        assert_eq!(
            diagram.finite_pairs().count(),
            tree.n_minima() - tree.n_components,
            "round {round}"
        );
    }
}

#[test]
fn alive_counts_match_component_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for round in 0..60 {
        let field = random_distinct_field(&mut rng, 5, 7);
        let (_, diagram) = sublevel_analysis(&field).unwrap();
        let mut order: Vec<usize> = (0..field.vertex_count()).collect();
        order.sort_by(|&a, &b| field.value(a).total_cmp(&field.value(b)).then(a.cmp(&b)));
        for k in 1..=order.len() {
            let v = order[k - 1];
            let key = (field.value(v), v);
            let alive = diagram
                .pairs
                .iter()
                .filter(|p| {
                    let born = (p.birth, p.birth_vertex) <= key;
                    if p.essential {
                        born
                    } else {
                        born && (p.death, p.death_vertex) > key
                    }
                })
                .count();
            let flood = oracle::component_count_at_prefix(&field, k);
            assert_eq!(alive, flood, "round {round}, rank {k}");
        }
    }
}

/// Strategy: a 5x5 grid of distinct values built from a shuffled ramp.
fn distinct_grid_strategy() -> impl Strategy<Value = (Vec<f64>, u64)> {
    (any::<u64>()).prop_map(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = random_distinct_field(&mut rng, 5, 5);
        (field.values().to_vec(), seed)
    })
}

fn grid_field_from(values: &[f64]) -> ScalarField {
    let rows: Vec<Vec<f64>> = values.chunks(5).map(|c| c.to_vec()).collect();
    lossscape_core::build_image_grid(&rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn permutation_equivariance((values, seed) in distinct_grid_strategy()) {
        let field = grid_field_from(&values);
        let (tree, diagram) = sublevel_analysis(&field).unwrap();

        // Relabel vertices by a seeded permutation, carrying values, coords,
        // and edges along.
        let n = field.vertex_count();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
        for i in (1..n).rev() {
            let j = rand::Rng::gen_range(&mut rng, 0..=i);
            perm.swap(i, j);
        }
        let mut new_values = vec![0.0; n];
        let mut new_coords = vec![[0.0, 0.0]; n];
        for v in 0..n {
            new_values[perm[v]] = field.value(v);
            new_coords[perm[v]] = field.coord(v);
        }
        let new_edges: Vec<[usize; 2]> = field
            .edges()
            .iter()
            .map(|&[a, b]| [perm[a], perm[b]])
            .collect();
        let relabeled = ScalarField::from_parts(new_values, new_coords, new_edges).unwrap();
        let (tree2, diagram2) = sublevel_analysis(&relabeled).unwrap();

        prop_assert_eq!(tree.n_minima(), tree2.n_minima());
        prop_assert_eq!(tree.n_saddles(), tree2.n_saddles());
        prop_assert_eq!(tree.n_components, tree2.n_components);
        let got = sorted_triples(diagram.pairs.iter().map(|p| (p.birth, p.death, p.essential)));
        let want = sorted_triples(diagram2.pairs.iter().map(|p| (p.birth, p.death, p.essential)));
        prop_assert_eq!(got, want);
    }

    #[test]
    fn shift_invariance_of_persistence((values, _) in distinct_grid_strategy(), shift in -100.0f64..100.0) {
        let field = grid_field_from(&values);
        let shifted_values: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let shifted = grid_field_from(&shifted_values);
        let (_, d0) = sublevel_analysis(&field).unwrap();
        let (_, d1) = sublevel_analysis(&shifted).unwrap();
        prop_assert_eq!(d0.pairs.len(), d1.pairs.len());
        for (p0, p1) in d0.pairs.iter().zip(&d1.pairs) {
            prop_assert_eq!(p0.birth_vertex, p1.birth_vertex);
            // Persistence is shift-invariant up to roundoff of the shifted
            // births and deaths.
            let scale = 1.0 + p0.death.abs() + shift.abs();
            prop_assert!((p0.persistence() - p1.persistence()).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn positive_scaling_scales_persistence((values, _) in distinct_grid_strategy(), factor in 0.01f64..100.0) {
        let field = grid_field_from(&values);
        let scaled_values: Vec<f64> = values.iter().map(|v| v * factor).collect();
        let scaled = grid_field_from(&scaled_values);
        let (_, d0) = sublevel_analysis(&field).unwrap();
        let (_, d1) = sublevel_analysis(&scaled).unwrap();
        prop_assert_eq!(d0.pairs.len(), d1.pairs.len());
        // Scaling by a positive factor multiplies every persistence by the
        // factor exactly (IEEE multiplication is monotone, order preserved).
        let mut p0: Vec<f64> = d0.pairs.iter().map(|p| p.persistence()).collect();
        let mut p1: Vec<f64> = d1.pairs.iter().map(|p| p.persistence()).collect();
        p0.sort_by(f64::total_cmp);
        p1.sort_by(f64::total_cmp);
        for (a, b) in p0.iter().zip(&p1) {
            prop_assert!((a * factor - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        // The ranking of branch persistences is unchanged.
        let rank = |xs: &[f64]| {
            let mut idx: Vec<usize> = (0..xs.len()).collect();
            idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
            idx
        };
        let r0: Vec<usize> = rank(&d0.pairs.iter().map(|p| p.persistence()).collect::<Vec<_>>());
        let r1: Vec<usize> = rank(&d1.pairs.iter().map(|p| p.persistence()).collect::<Vec<_>>());
        prop_assert_eq!(r0, r1);
    }

    #[test]
    fn merge_tree_values_nondecreasing_toward_root((values, _) in distinct_grid_strategy()) {
        let field = grid_field_from(&values);
        let (tree, _) = sublevel_analysis(&field).unwrap();
        for node in &tree.nodes {
            if let Some(parent) = node.parent {
                prop_assert!(tree.nodes[parent].value >= node.value);
            }
        }
    }
}
