//! Small dense-vector helpers and a symmetric tridiagonal eigensolver.
//! Everything here operates on plain `&[f64]` slices; the parameter spaces
//! involved are small enough that no BLAS backing is warranted.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(a: &mut [f64], s: f64) {
    for x in a.iter_mut() {
        *x *= s;
    }
}

/// Normalizes `a` to unit length and returns the original norm.
/// Leaves `a` untouched when its norm is zero.
pub fn normalize(a: &mut [f64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        scale(a, 1.0 / n);
    }
    n
}

/// Removes from `v` its projection onto the unit vector `u`.
pub fn orthogonalize_against(v: &mut [f64], u: &[f64]) {
    let d = dot(v, u);
    axpy(-d, u, v);
}

/// Eigendecomposition of a symmetric tridiagonal matrix via the implicit-shift
/// QL algorithm (the classic `tql2` routine), with eigenvector accumulation.
///
/// `diag` holds the n diagonal entries, `offdiag` the n-1 sub-diagonal ones.
/// Returns eigenvalues in ascending order together with the full eigenvector
/// matrix stored column-wise: `vectors[j]` is the unit eigenvector for
/// `values[j]`.
pub fn tridiagonal_eigen(
    diag: &[f64],
    offdiag: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>), TridiagonalError> {
    let n = diag.len();
    assert_eq!(
        offdiag.len(),
        n.saturating_sub(1),
        "offdiag must have n-1 entries"
    );
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(offdiag);

    // z[i][j]: i-th component of the j-th accumulated vector.
    let mut z = vec![vec![0.0; n]; n];
    for (i, row) in z.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Look for a single small off-diagonal element to split the matrix.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(TridiagonalError::NoConvergence { index: l });
            }
            // Wilkinson shift.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // Rotate the accumulated vectors.
                for row in z.iter_mut() {
                    f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // Sort ascending, carrying vectors along.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = idx.iter().map(|&j| d[j]).collect();
    let vectors: Vec<Vec<f64>> = idx
        .iter()
        .map(|&j| (0..n).map(|i| z[i][j]).collect())
        .collect();
    Ok((values, vectors))
}

#[derive(Debug, thiserror::Error)]
pub enum TridiagonalError {
    #[error("QL iteration failed to converge at index {index}")]
    NoConvergence { index: usize },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_is_its_own_decomposition() {
        let (vals, vecs) = tridiagonal_eigen(&[3.0, 1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
        // Eigenvector for value 1.0 is e_1.
        assert_eq!(vecs[0][1].abs(), 1.0);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let (vals, vecs) = tridiagonal_eigen(&[2.0, 2.0], &[1.0]).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        let s = 0.5_f64.sqrt();
        assert!((vecs[0][0].abs() - s).abs() < 1e-12);
        assert!((vecs[1][0].abs() - s).abs() < 1e-12);
    }

    #[test]
    fn residuals_vanish_on_random_tridiagonal() {
        // Deterministic pseudo-random entries.
        let n = 12;
        let mut state = 88172645463325252u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let diag: Vec<f64> = (0..n).map(|_| next() * 4.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|_| next() * 2.0).collect();
        let (vals, vecs) = tridiagonal_eigen(&diag, &off).unwrap();
        for (lam, v) in vals.iter().zip(&vecs) {
            // Check T v = lambda v row by row.
            for i in 0..n {
                let mut tv = diag[i] * v[i];
                if i > 0 {
                    tv += off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    tv += off[i] * v[i + 1];
                }
                assert!(
                    (tv - lam * v[i]).abs() < 1e-9,
                    "residual too large: {} vs {}",
                    tv,
                    lam * v[i]
                );
            }
            assert!((norm(v) - 1.0).abs() < 1e-9);
        }
        // Eigenvalues must be ascending.
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }
}
