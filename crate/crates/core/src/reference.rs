//! High-accuracy reference optima for measuring suboptimality.

use crate::linalg;
use crate::local_sdca::local_sdca;
use crate::losses::{dual_objective, LossKind, ObjectiveError};
use crate::model::Dataset;
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReferenceError {
    #[error("normal equations were not positive definite")]
    NotPositiveDefinite,
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Closed-form ridge optimum `w* = (lambda I + X X^T / m)^{-1} X y / m`
/// for the squared loss.
pub fn ridge_primal_optimum(dataset: &Dataset) -> Result<Vec<f64>, ReferenceError> {
    let d = dataset.dim();
    let m = dataset.len();
    let mut normal = vec![0.0; d * d];
    let mut rhs = vec![0.0; d];
    let inv_m = 1.0 / m as f64;
    for i in 0..m {
        let x = dataset.column(i);
        for a in 0..d {
            for b in a..d {
                normal[a * d + b] += x[a] * x[b] * inv_m;
            }
        }
        linalg::axpy(&mut rhs, dataset.label(i) * inv_m, x);
    }
    for a in 0..d {
        normal[a * d + a] += dataset.lambda();
        for b in 0..a {
            normal[a * d + b] = normal[b * d + a];
        }
    }
    linalg::cholesky_solve(&normal, &rhs, d).ok_or(ReferenceError::NotPositiveDefinite)
}

/// Dual optimum for the squared loss via the closed form:
/// `alpha*_i = y_i - w* . x_i`.
pub fn ridge_dual_optimum(dataset: &Dataset) -> Result<Vec<f64>, ReferenceError> {
    let w = ridge_primal_optimum(dataset)?;
    Ok((0..dataset.len())
        .map(|i| dataset.label(i) - linalg::dot(&w, dataset.column(i)))
        .collect())
}

/// Reference optimal dual value `D(alpha*)`: the ridge closed form for the
/// squared loss, otherwise a long single-machine coordinate-ascent run
/// (`steps` exact coordinate maximizations over the whole dataset).
pub fn dual_optimum_value(dataset: &Dataset, steps: u32, seed: u64) -> Result<f64, ReferenceError> {
    match dataset.loss().kind() {
        LossKind::Squared => {
            let alpha = ridge_dual_optimum(dataset)?;
            Ok(dual_objective(dataset, &alpha)?)
        }
        LossKind::SmoothHinge => {
            let m = dataset.len();
            let block: Vec<usize> = (0..m).collect();
            let alpha = vec![0.0; m];
            let w = vec![0.0; dataset.dim()];
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let upd = local_sdca(dataset, &block, &alpha, &w, steps, &mut rng)
                .expect("whole-dataset block is nonempty");
            Ok(dual_objective(dataset, &upd.delta_alpha)?)
        }
    }
}
