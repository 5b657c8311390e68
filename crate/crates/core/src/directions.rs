//! The two orthonormal vectors spanning the sampling plane: either random
//! Gaussian draws made orthonormal by Gram-Schmidt, or the top two Hessian
//! eigenvectors obtained by power iteration on finite-difference
//! Hessian-vector products (no Hessian matrix is ever formed).

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{axpy, dot, norm, normalize, orthogonalize_against};
use crate::models::{GradModel, ModelError, Segment};

pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum DirectionsError {
    #[error("need dimension >= 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("cannot use a zero vector")]
    ZeroVector,
    #[error("gradient evaluation returned non-finite entries")]
    NonFiniteGradient,
    #[error(
        "power iteration did not converge within {max_iter} iterations \
         (residuals {res1:.3e}, {res2:.3e}); best iterate available via `best`"
    )]
    NoConvergence {
        max_iter: usize,
        res1: f64,
        res2: f64,
        best: Box<DirectionPair>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Where a direction pair came from, kept alongside the vectors so runs can
/// be reproduced and serialized next to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Random {
        seed: u64,
    },
    Hessian {
        eigenvalues: [f64; 2],
        iterations: [usize; 2],
        residuals: [f64; 2],
    },
}

/// Two unit-norm, mutually orthogonal directions in parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionPair {
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
    pub provenance: Provenance,
}

impl DirectionPair {
    /// Norms within 1e-12 of one, inner product below 1e-10.
    pub fn check_invariants(&self) -> bool {
        (norm(&self.delta1) - 1.0).abs() < 1e-12
            && (norm(&self.delta2) - 1.0).abs() < 1e-12
            && dot(&self.delta1, &self.delta2).abs() < 1e-10
    }

    pub fn dim(&self) -> usize {
        self.delta1.len()
    }
}

pub(crate) fn gaussian_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Seeded standard-normal draws followed by explicit Gram-Schmidt. High
/// dimension makes raw draws nearly orthogonal already; the projection step
/// makes it exact rather than relying on that.
pub fn random_pair(dim: usize, seed: u64) -> Result<DirectionPair, DirectionsError> {
    if dim < 2 {
        return Err(DirectionsError::DimensionTooSmall(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d1 = gaussian_vector(dim, &mut rng);
    let mut d2 = gaussian_vector(dim, &mut rng);
    if normalize(&mut d1) == 0.0 {
        return Err(DirectionsError::ZeroVector);
    }
    orthogonalize_against(&mut d2, &d1);
    if normalize(&mut d2) == 0.0 {
        return Err(DirectionsError::ZeroVector);
    }
    Ok(DirectionPair {
        delta1: d1,
        delta2: d2,
        provenance: Provenance::Random { seed },
    })
}

/// Central-difference Hessian-vector product:
/// `H v ~ (grad(theta + eps v_hat) - grad(theta - eps v_hat)) * |v| / (2 eps)`
/// with `v_hat = v / |v|` and `eps = step * (1 + |theta|)`.
pub fn hvp(
    model: &dyn GradModel,
    theta: &[f64],
    v: &[f64],
    step: f64,
) -> Result<Vec<f64>, DirectionsError> {
    let v_norm = norm(v);
    if v_norm == 0.0 {
        return Err(DirectionsError::ZeroVector);
    }
    let eps = step * (1.0 + norm(theta));
    let mut plus = theta.to_vec();
    let mut minus = theta.to_vec();
    let scale = eps / v_norm;
    for i in 0..theta.len() {
        plus[i] += scale * v[i];
        minus[i] -= scale * v[i];
    }
    let g_plus = model.grad(&plus)?;
    let g_minus = model.grad(&minus)?;
    let factor = v_norm / (2.0 * eps);
    let result: Vec<f64> = g_plus
        .iter()
        .zip(&g_minus)
        .map(|(p, m)| (p - m) * factor)
        .collect();
    if result.iter().any(|x| !x.is_finite()) {
        return Err(DirectionsError::NonFiniteGradient);
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerIterOptions {
    /// Relative tolerance on successive Rayleigh quotients.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed for the random start vectors.
    pub seed: u64,
    /// Relative step passed through to [`hvp`].
    pub fd_step: f64,
}

impl Default for PowerIterOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 100,
            seed: 0,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

struct PowerIterOutcome {
    eigenvalue: f64,
    vector: Vec<f64>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// Power iteration for the eigenvalue of largest magnitude, deflated against
/// `fixed` (re-orthogonalized every step) when provided. The sign of the
/// eigenvalue is recovered from the Rayleigh quotient.
fn power_iterate(
    model: &dyn GradModel,
    theta: &[f64],
    fixed: Option<&[f64]>,
    opts: &PowerIterOptions,
    rng: &mut ChaCha8Rng,
) -> Result<PowerIterOutcome, DirectionsError> {
    let dim = theta.len();
    let mut v = gaussian_vector(dim, rng);
    if let Some(f) = fixed {
        orthogonalize_against(&mut v, f);
    }
    if normalize(&mut v) == 0.0 {
        return Err(DirectionsError::ZeroVector);
    }
    let mut rayleigh = f64::NAN;
    let mut iterations = 0;
    let mut converged = false;
    let mut hv = hvp(model, theta, &v, opts.fd_step)?;
    loop {
        iterations += 1;
        if let Some(f) = fixed {
            orthogonalize_against(&mut hv, f);
        }
        let next_rayleigh = dot(&v, &hv);
        let step_norm = norm(&hv);
        if step_norm < 1e-300 {
            // Zero curvature along every remaining direction: eigenvalue 0,
            // current vector is as good as any.
            converged = true;
            break;
        }
        let mut next_v = hv.clone();
        crate::linalg::scale(&mut next_v, 1.0 / step_norm);
        // Flip so the iterate tracks a consistent orientation even for
        // negative eigenvalues.
        if dot(&next_v, &v) < 0.0 {
            crate::linalg::scale(&mut next_v, -1.0);
        }
        if let Some(f) = fixed {
            orthogonalize_against(&mut next_v, f);
            normalize(&mut next_v);
        }
        v = next_v;
        let delta = (next_rayleigh - rayleigh).abs();
        rayleigh = next_rayleigh;
        if delta <= opts.tol * rayleigh.abs().max(1.0) {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        hv = hvp(model, theta, &v, opts.fd_step)?;
    }
    // Residual |H v - lambda v| of the final iterate.
    let mut hv = hvp(model, theta, &v, opts.fd_step)?;
    if let Some(f) = fixed {
        orthogonalize_against(&mut hv, f);
    }
    rayleigh = dot(&v, &hv);
    axpy(-rayleigh, &v, &mut hv);
    let residual = norm(&hv);
    Ok(PowerIterOutcome {
        eigenvalue: rayleigh,
        vector: v,
        iterations,
        residual,
        converged,
    })
}

/// Top-two Hessian eigenpairs: plain power iteration for the first, deflated
/// power iteration for the second. Eigenvalues come back ordered by
/// magnitude. On non-convergence the error carries the best iterate so
/// callers can degrade gracefully.
pub fn top2_eigenvectors(
    model: &dyn GradModel,
    theta: &[f64],
    opts: &PowerIterOptions,
) -> Result<DirectionPair, DirectionsError> {
    if theta.len() < 2 {
        return Err(DirectionsError::DimensionTooSmall(theta.len()));
    }
    if opts.max_iter == 0 {
        return Err(DirectionsError::NoConvergence {
            max_iter: 0,
            res1: f64::INFINITY,
            res2: f64::INFINITY,
            best: Box::new(random_pair(theta.len(), opts.seed)?),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let first = power_iterate(model, theta, None, opts, &mut rng)?;
    let second = power_iterate(model, theta, Some(&first.vector), opts, &mut rng)?;
    let pair = DirectionPair {
        delta1: first.vector.clone(),
        delta2: second.vector.clone(),
        provenance: Provenance::Hessian {
            eigenvalues: [first.eigenvalue, second.eigenvalue],
            iterations: [first.iterations, second.iterations],
            residuals: [first.residual, second.residual],
        },
    };
    if !(first.converged && second.converged) {
        return Err(DirectionsError::NoConvergence {
            max_iter: opts.max_iter,
            res1: first.residual,
            res2: second.residual,
            best: Box::new(pair),
        });
    }
    Ok(pair)
}

/// Rescales each layout segment of `direction` to match the parameter norm
/// of the same segment in `theta` (the filter-normalization convention),
/// then renormalizes globally so the unit-norm invariant still holds.
pub fn per_layer_normalize(direction: &mut [f64], theta: &[f64], layout: &[Segment]) {
    let mut off = 0;
    for seg in layout {
        let len = seg.rows * seg.cols;
        let (d, t) = (&mut direction[off..off + len], &theta[off..off + len]);
        let dn = norm(d);
        let tn = norm(t);
        if dn > 0.0 && tn > 0.0 {
            let s = tn / dn;
            for x in d.iter_mut() {
                *x *= s;
            }
        }
        off += len;
    }
    normalize(direction);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::QuadraticModel;

    #[test]
    fn random_pair_invariants_and_determinism() {
        for seed in 0..20u64 {
            let pair = random_pair(64, seed).unwrap();
            assert!(pair.check_invariants(), "seed {seed}");
        }
        let a = random_pair(128, 9).unwrap();
        let b = random_pair(128, 9).unwrap();
        assert_eq!(a, b);
        assert!(random_pair(1, 0).is_err());
    }

    #[test]
    fn raw_draws_are_nearly_orthogonal_in_high_dimension() {
        // Monte Carlo check over 100 seeds at dim = 1000: the mean of
        // |<v1, v2>| / dim before orthogonalization stays well under 0.05.
        let dim = 1000;
        let mut total = 0.0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v1 = gaussian_vector(dim, &mut rng);
            let v2 = gaussian_vector(dim, &mut rng);
            total += dot(&v1, &v2).abs() / dim as f64;
        }
        let mean = total / 100.0;
        assert!(mean < 0.05, "mean normalized overlap {mean}");
    }

    #[test]
    fn hvp_recovers_matrix_columns_on_quadratic() {
        let model = QuadraticModel::diagonal(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let theta = [0.3, -0.1, 0.8, 0.0, -0.5];
        for i in 0..5 {
            let mut e = vec![0.0; 5];
            e[i] = 1.0;
            let col = hvp(&model, &theta, &e, DEFAULT_FD_STEP).unwrap();
            for (j, c) in col.iter().enumerate() {
                let expected = if i == j { (i + 1) as f64 } else { 0.0 };
                assert!((c - expected).abs() < 1e-8, "H[{j},{i}] = {c}");
            }
        }
    }

    #[test]
    fn hvp_is_linear_in_v() {
        let model = QuadraticModel::diagonal(vec![2.0, 7.0, 1.0]);
        let theta = [0.1, 0.2, 0.3];
        let v = [1.0, -2.0, 0.5];
        let v2: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        let a = hvp(&model, &theta, &v, DEFAULT_FD_STEP).unwrap();
        let b = hvp(&model, &theta, &v2, DEFAULT_FD_STEP).unwrap();
        for (ai, bi) in a.iter().zip(&b) {
            assert!((2.0 * ai - bi).abs() < 1e-8);
        }
    }

    #[test]
    fn hvp_rejects_zero_vector() {
        let model = QuadraticModel::diagonal(vec![1.0, 1.0]);
        assert!(matches!(
            hvp(&model, &[0.0, 0.0], &[0.0, 0.0], DEFAULT_FD_STEP),
            Err(DirectionsError::ZeroVector)
        ));
    }

    #[test]
    fn top2_on_known_spectrum() {
        let mut diag = vec![10.0, 3.0];
        diag.extend(vec![1.0; 8]);
        let model = QuadraticModel::diagonal(diag);
        let theta = vec![0.0; 10];
        let opts = PowerIterOptions {
            tol: 1e-10,
            max_iter: 500,
            ..PowerIterOptions::default()
        };
        let pair = top2_eigenvectors(&model, &theta, &opts).unwrap();
        let Provenance::Hessian { eigenvalues, .. } = &pair.provenance else {
            panic!("expected Hessian provenance");
        };
        assert!((eigenvalues[0] - 10.0).abs() < 1e-5);
        assert!((eigenvalues[1] - 3.0).abs() < 1e-5);
        // Eigenvector alignment: angle to the axis below 1e-4.
        assert!(pair.delta1[0].abs() > (1e-4_f64).cos());
        assert!(pair.delta2[1].abs() > (1e-4_f64).cos());
        assert!(pair.check_invariants());
    }

    #[test]
    fn degenerate_spectrum_still_returns_orthonormal_pair() {
        let model = QuadraticModel::diagonal(vec![10.0; 6]);
        let theta = vec![0.0; 6];
        let pair = top2_eigenvectors(&model, &theta, &PowerIterOptions::default()).unwrap();
        let Provenance::Hessian { eigenvalues, .. } = &pair.provenance else {
            panic!("expected Hessian provenance");
        };
        assert!((eigenvalues[0] - 10.0).abs() < 1e-6);
        assert!((eigenvalues[1] - 10.0).abs() < 1e-6);
        assert!(pair.check_invariants());
    }

    #[test]
    fn negative_dominant_eigenvalue_keeps_its_sign() {
        let model = QuadraticModel::diagonal(vec![-8.0, 2.0, 1.0]);
        let theta = vec![0.0; 3];
        let opts = PowerIterOptions {
            tol: 1e-9,
            max_iter: 300,
            ..PowerIterOptions::default()
        };
        let pair = top2_eigenvectors(&model, &theta, &opts).unwrap();
        let Provenance::Hessian { eigenvalues, .. } = &pair.provenance else {
            panic!("expected Hessian provenance");
        };
        assert!((eigenvalues[0] + 8.0).abs() < 1e-5, "{eigenvalues:?}");
        assert!((eigenvalues[1] - 2.0).abs() < 1e-5, "{eigenvalues:?}");
        assert!(eigenvalues[0].abs() >= eigenvalues[1].abs());
    }

    #[test]
    fn per_layer_normalize_keeps_unit_norm() {
        let layout = vec![
            Segment {
                label: "w1".into(),
                rows: 2,
                cols: 2,
            },
            Segment {
                label: "b1".into(),
                rows: 2,
                cols: 1,
            },
        ];
        let theta = vec![4.0, 0.0, 0.0, 3.0, 0.1, -0.1];
        let mut dir = vec![1.0, 1.0, -1.0, 1.0, 2.0, 2.0];
        per_layer_normalize(&mut dir, &theta, &layout);
        assert!((norm(&dir) - 1.0).abs() < 1e-12);
    }
}
