//! `oracle-check`: runs the brute-force equivalence suite against the fast
//! implementations and prints one line per check. Any mismatch is a numeric
//! failure (exit code 3).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lossscape_core::field::build_image_grid;
use lossscape_core::models::fd::central_grad;
use lossscape_core::models::{GradModel, MlpModel, MlpSpec, QuadraticModel};
use lossscape_core::topology::{oracle, sublevel_analysis};
use lossscape_core::{directions, ScalarField};

use crate::CliError;

fn random_grid_field(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ScalarField {
    // Distinct values: a shuffled integer base plus a small jitter.
    let n = rows * cols;
    let mut values: Vec<f64> = (0..n).map(|i| i as f64).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        values.swap(i, j);
    }
    for v in values.iter_mut() {
        *v += rng.gen_range(0.0..0.5);
    }
    let matrix: Vec<Vec<f64>> = values.chunks(cols).map(|c| c.to_vec()).collect();
    build_image_grid(&matrix).expect("valid grid")
}

fn sorted_pairs(mut pairs: Vec<(f64, f64, bool)>) -> Vec<(f64, f64, bool)> {
    pairs.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    pairs
}

fn check(name: &str, ok: bool, failures: &mut Vec<String>) {
    println!("[oracle-check] {name}: {}", if ok { "PASS" } else { "FAIL" });
    if !ok {
        failures.push(name.to_string());
    }
}

pub fn run_oracle_check() -> Result<(), CliError> {
    let mut failures = Vec::new();

    // Merge tree and diagram vs flood fill on random fields.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut topology_ok = true;
    let mut alive_ok = true;
    for round in 0..200 {
        let field = random_grid_field(&mut rng, 6, 6);
        let (tree, diagram) = sublevel_analysis(&field).expect("nonempty field");
        let expected = oracle::floodfill_pairs(&field);
        let got = sorted_pairs(
            diagram
                .pairs
                .iter()
                .map(|p| (p.birth, p.death, p.essential))
                .collect(),
        );
        let want = sorted_pairs(expected.iter().map(|p| (p.birth, p.death, p.essential)).collect());
        if got != want || tree.n_minima() != oracle::local_min_vertices(&field).len() {
            topology_ok = false;
            eprintln!("topology mismatch in round {round}");
            break;
        }
        if round < 50 {
            for k in 1..=field.vertex_count() {
                let flood = oracle::component_count_at_prefix(&field, k);
                let order_value = {
                    let mut vals: Vec<(f64, usize)> =
                        field.values().iter().copied().zip(0..).collect();
                    vals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    vals[k - 1]
                };
                let alive = diagram
                    .pairs
                    .iter()
                    .filter(|p| {
                        let born = (p.birth, p.birth_vertex) <= (order_value.0, order_value.1);
                        if p.essential {
                            born
                        } else {
                            born && (p.death, p.death_vertex) > (order_value.0, order_value.1)
                        }
                    })
                    .count();
                if alive != flood {
                    alive_ok = false;
                    eprintln!("alive-count mismatch in round {round} at rank {k}");
                    break;
                }
            }
        }
    }
    check("merge tree + diagram vs flood-fill oracle (200 fields)", topology_ok, &mut failures);
    check("alive counts vs component counts (50 fields)", alive_ok, &mut failures);

    // Classifier gradient vs central differences.
    let spec = MlpSpec {
        layer_widths: vec![2, 8, 1],
        n_points: 50,
        ..MlpSpec::default()
    };
    let model = MlpModel::new(&spec).expect("valid spec");
    let mut grad_ok = true;
    for seed in 0..2u64 {
        let theta = model.init_params(seed).values;
        let analytic = model.grad(&theta).expect("gradient");
        let numeric = central_grad(&model, &theta, 1e-5).expect("fd gradient");
        for (a, f) in analytic.iter().zip(&numeric) {
            if (a - f).abs() / a.abs().max(f.abs()).max(1e-8) > 1e-5 {
                grad_ok = false;
            }
        }
    }
    check("classifier gradient vs central differences", grad_ok, &mut failures);

    // Hessian-vector products on a known quadratic.
    let quad = QuadraticModel::diagonal((1..=6).map(f64::from).collect());
    let theta = vec![0.25; 6];
    let mut hvp_ok = true;
    for i in 0..6 {
        let mut e = vec![0.0; 6];
        e[i] = 1.0;
        let col = directions::hvp(&quad, &theta, &e, 1e-4).expect("hvp");
        for (j, c) in col.iter().enumerate() {
            let expected = if i == j { (i + 1) as f64 } else { 0.0 };
            if (c - expected).abs() > 1e-8 {
                hvp_ok = false;
            }
        }
    }
    check("hessian-vector products on diagonal quadratic", hvp_ok, &mut failures);

    if failures.is_empty() {
        println!("[oracle-check] all checks passed");
        Ok(())
    } else {
        Err(CliError::Numeric(format!(
            "oracle checks failed: {}",
            failures.join("; ")
        )))
    }
}
