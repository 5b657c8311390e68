//! Shared test oracles: a dense Jacobi eigensolver (independent of the
//! crate's tridiagonal QL and power-iteration paths) and random-field
//! helpers. Each integration-test target pulls in the subset it needs.
#![allow(dead_code)]
// The Jacobi sweep is deliberately written with explicit indices; it mirrors
// the textbook rotation formulas it is checked against.
#![allow(clippy::needless_range_loop)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use lossscape_core::field::build_image_grid;
use lossscape_core::ScalarField;

/// Cyclic Jacobi eigenvalue iteration for a dense symmetric matrix.
/// Returns eigenvalues ascending with matching unit eigenvectors.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p][q] * m[p][q];
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let values: Vec<f64> = idx.iter().map(|&i| m[i][i]).collect();
    let vectors: Vec<Vec<f64>> = idx
        .iter()
        .map(|&j| (0..n).map(|i| v[i][j]).collect())
        .collect();
    (values, vectors)
}

/// Random symmetric matrix with entries in [-1, 1].
pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let x: f64 = rng.gen_range(-1.0..1.0);
            a[i][j] = x;
            a[j][i] = x;
        }
    }
    a
}

/// Image-grid field with pairwise distinct values: a shuffled integer ramp
/// plus sub-unit jitter.
pub fn random_distinct_field(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ScalarField {
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
