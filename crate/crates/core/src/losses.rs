//! Loss functions, convex conjugates, primal/dual objectives, and the exact
//! single-coordinate dual maximization.
//!
//! The solved problem is ridge-style regularized loss minimization,
//!
//! ```text
//! P(w) = (lambda/2) ||w||^2 + (1/m) sum_i loss_i(w^T x_i)
//! D(a) = -(lambda/2) ||A a||^2 - (1/m) sum_i conj_i(-a_i),   A_i = x_i / (lambda m)
//! ```
//!
//! with `w(a) = A a` and duality gap `P(w(a)) - D(a)`.

use crate::linalg;
use crate::model::Dataset;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("smoothness parameter gamma must satisfy 0 < gamma <= 1, got {0}")]
    InvalidGamma(f64),
    #[error(
        "conjugate domain violation: label {label} with dual value {alpha} (need y*alpha in [0,1])"
    )]
    ConjugateDomainViolation { label: f64, alpha: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Loss(#[from] LossError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// `loss_i(a) = (a - y_i)^2 / 2`, the ridge-regression loss (1-smooth).
    Squared,
    /// The quadratically smoothed hinge with smoothing width `gamma`
    /// (the loss is `1/gamma`-smooth); labels must be -1 or +1.
    SmoothHinge,
}

/// A loss family together with its smoothness parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    kind: LossKind,
    gamma: f64,
}

impl LossSpec {
    pub fn squared() -> Self {
        Self {
            kind: LossKind::Squared,
            gamma: 1.0,
        }
    }

    pub fn smooth_hinge(gamma: f64) -> Result<Self, LossError> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(LossError::InvalidGamma(gamma));
        }
        Ok(Self {
            kind: LossKind::SmoothHinge,
            gamma,
        })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    /// The loss is `1/gamma`-smooth; its conjugate is `gamma`-strongly convex.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `loss_i(a)` for a datum with label `y`.
    pub fn value(&self, y: f64, a: f64) -> f64 {
        match self.kind {
            LossKind::Squared => {
                let r = a - y;
                0.5 * r * r
            }
            LossKind::SmoothHinge => {
                let z = y * a;
                let g = self.gamma;
                if z >= 1.0 {
                    0.0
                } else if z <= 1.0 - g {
                    1.0 - z - 0.5 * g
                } else {
                    let t = 1.0 - z;
                    t * t / (2.0 * g)
                }
            }
        }
    }

    /// The convex conjugate `conj_i(u)`, with its domain enforced.
    ///
    /// Squared: `conj(u) = u^2/2 + u*y` everywhere. Smooth hinge:
    /// `conj(u) = y*u + (gamma/2) u^2` on `u*y in [-1, 0]`, infinite outside;
    /// values outside the domain (beyond float-roundoff slack) are an error
    /// because the solver never produces them.
    pub fn conjugate(&self, y: f64, u: f64) -> Result<f64, LossError> {
        match self.kind {
            LossKind::Squared => Ok(0.5 * u * u + u * y),
            LossKind::SmoothHinge => {
                let t = u * y;
                if !(-1.0 - 1e-9..=1e-9).contains(&t) {
                    return Err(LossError::ConjugateDomainViolation {
                        label: y,
                        alpha: -u,
                    });
                }
                Ok(y * u + 0.5 * self.gamma * u * u)
            }
        }
    }
}

/// `P(w)` for the dataset's loss and regularizer.
pub fn primal_objective(dataset: &Dataset, w: &[f64]) -> Result<f64, ObjectiveError> {
    if w.len() != dataset.dim() {
        return Err(ObjectiveError::DimensionMismatch {
            expected: dataset.dim(),
            got: w.len(),
        });
    }
    let loss = dataset.loss();
    let mut sum = 0.0;
    for i in 0..dataset.len() {
        sum += loss.value(dataset.label(i), linalg::dot(w, dataset.column(i)));
    }
    Ok(0.5 * dataset.lambda() * linalg::norm_sq(w) + sum / dataset.len() as f64)
}

/// `D(alpha)` for the dataset's loss and regularizer.
pub fn dual_objective(dataset: &Dataset, alpha: &[f64]) -> Result<f64, ObjectiveError> {
    if alpha.len() != dataset.len() {
        return Err(ObjectiveError::DimensionMismatch {
            expected: dataset.len(),
            got: alpha.len(),
        });
    }
    let loss = dataset.loss();
    let w = dataset.map_dual(alpha);
    let mut sum = 0.0;
    for (i, &a) in alpha.iter().enumerate() {
        sum += loss.conjugate(dataset.label(i), -a)?;
    }
    Ok(-0.5 * dataset.lambda() * linalg::norm_sq(&w) - sum / dataset.len() as f64)
}

/// `P(w(alpha)) - D(alpha)`; nonnegative up to roundoff by weak duality.
pub fn duality_gap(dataset: &Dataset, alpha: &[f64]) -> Result<f64, ObjectiveError> {
    if alpha.len() != dataset.len() {
        return Err(ObjectiveError::DimensionMismatch {
            expected: dataset.len(),
            got: alpha.len(),
        });
    }
    let w = dataset.map_dual(alpha);
    Ok(primal_objective(dataset, &w)? - dual_objective(dataset, alpha)?)
}

/// Exact maximizer of the one-dimensional dual subproblem for coordinate `i`:
///
/// ```text
/// max_da  -(lambda m / 2) ||w + da x_i / (lambda m)||^2 - conj_i(-(alpha_i + da))
/// ```
///
/// `w` is the caller's current local primal iterate. Both loss families admit
/// a closed form; for the smooth hinge the maximizer is clipped to the
/// conjugate domain.
pub fn coordinate_max(
    loss: &LossSpec,
    dataset: &Dataset,
    w: &[f64],
    alpha_i: f64,
    i: usize,
) -> f64 {
    let x = dataset.column(i);
    let y = dataset.label(i);
    let xw = linalg::dot(x, w);
    let c = dataset.col_norm_sq(i) / dataset.lambda_m();
    match loss.kind() {
        LossKind::Squared => (y - xw - alpha_i) / (1.0 + c),
        LossKind::SmoothHinge => {
            let g = loss.gamma();
            let q = (1.0 - y * xw - g * alpha_i * y) / (c + g) + alpha_i * y;
            y * q.clamp(0.0, 1.0) - alpha_i
        }
    }
}

/// Value of the coordinate subproblem objective at step `da`, relative to the
/// value at `da = 0` (the `||w||^2` term is expanded analytically so small
/// improvements are not lost to cancellation). Used by ascent checks and the
/// test-side brute-force maximizer.
pub fn coordinate_objective_delta(
    loss: &LossSpec,
    dataset: &Dataset,
    w: &[f64],
    alpha_i: f64,
    i: usize,
    da: f64,
) -> Result<f64, LossError> {
    let x = dataset.column(i);
    let y = dataset.label(i);
    let xw = linalg::dot(x, w);
    let c = dataset.col_norm_sq(i) / dataset.lambda_m();
    let quad = -da * xw - 0.5 * da * da * c;
    let conj_new = loss.conjugate(y, -(alpha_i + da))?;
    let conj_old = loss.conjugate(y, -alpha_i)?;
    Ok(quad - (conj_new - conj_old))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dataset;
    use crate::rng::{uniform_index, NormalSampler};
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn toy_squared() -> Dataset {
        // 2 features, 3 points, columns already inside the unit ball.
        let cols = vec![vec![0.6, 0.0], vec![0.0, 0.8], vec![0.3, 0.4]];
        Dataset::from_columns(&cols, vec![1.0, -2.0, 0.5], 0.5, LossSpec::squared()).unwrap()
    }

    fn random_dataset(seed: u64, d: usize, m: usize, loss: LossSpec) -> Dataset {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut normal = NormalSampler::new();
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..d).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        let labels: Vec<f64> = match loss.kind() {
            LossKind::Squared => (0..m).map(|_| normal.sample(&mut rng)).collect(),
            LossKind::SmoothHinge => (0..m)
                .map(|_| {
                    if normal.sample(&mut rng) >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .collect(),
        };
        Dataset::from_columns(&cols, labels, 0.2, loss).unwrap()
    }

    /// Feasible random dual point for either loss family.
    fn random_alpha(rng: &mut ChaCha20Rng, dataset: &Dataset) -> Vec<f64> {
        let mut normal = NormalSampler::new();
        (0..dataset.len())
            .map(|i| match dataset.loss().kind() {
                LossKind::Squared => normal.sample(rng),
                LossKind::SmoothHinge => {
                    let u = (uniform_index(rng, 1_000_001) as f64) / 1_000_000.0;
                    dataset.label(i) * u
                }
            })
            .collect()
    }

    #[test]
    fn primal_at_zero_squared_is_mean_half_label_sq() {
        let ds = toy_squared();
        let expect = (1.0 + 4.0 + 0.25) / (2.0 * 3.0);
        let p = primal_objective(&ds, &[0.0, 0.0]).unwrap();
        assert!((p - expect).abs() < 1e-15);
    }

    #[test]
    fn primal_at_zero_smooth_hinge_is_half() {
        let cols = vec![vec![0.5, 0.1], vec![0.2, 0.3]];
        let ds = Dataset::from_columns(
            &cols,
            vec![1.0, 1.0],
            1.0,
            LossSpec::smooth_hinge(1.0).unwrap(),
        )
        .unwrap();
        let p = primal_objective(&ds, &[0.0, 0.0]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dual_at_zero_is_zero_for_both_losses() {
        let ds = toy_squared();
        assert_eq!(dual_objective(&ds, &[0.0; 3]).unwrap(), 0.0);
        let hinge = random_dataset(3, 4, 6, LossSpec::smooth_hinge(0.5).unwrap());
        assert_eq!(dual_objective(&hinge, &[0.0; 6]).unwrap(), 0.0);
    }

    #[test]
    fn gap_at_zero_equals_primal_at_zero_for_squared() {
        let ds = toy_squared();
        let gap = duality_gap(&ds, &[0.0; 3]).unwrap();
        let p0 = primal_objective(&ds, &[0.0, 0.0]).unwrap();
        assert!((gap - p0).abs() < 1e-15);
    }

    #[test]
    fn objectives_reject_wrong_dimensions() {
        let ds = toy_squared();
        assert!(matches!(
            primal_objective(&ds, &[0.0]),
            Err(ObjectiveError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            dual_objective(&ds, &[0.0; 5]),
            Err(ObjectiveError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn infeasible_hinge_alpha_is_an_error_not_a_clamp() {
        let ds = random_dataset(9, 3, 4, LossSpec::smooth_hinge(0.5).unwrap());
        let mut alpha = vec![0.0; 4];
        alpha[1] = -1.5 * ds.label(1); // y*alpha = -1.5, outside [0,1]
        assert!(matches!(
            dual_objective(&ds, &alpha),
            Err(ObjectiveError::Loss(
                LossError::ConjugateDomainViolation { .. }
            ))
        ));
    }

    /// Second, structurally different implementation of both objectives:
    /// the scaled matrix is materialized row-major, w(alpha) comes from row
    /// dot products, and the loss formulas are written out inline.
    #[allow(clippy::needless_range_loop)]
    fn objectives_by_hand(ds: &Dataset, alpha: &[f64]) -> (f64, f64) {
        let (d, m) = (ds.dim(), ds.len());
        let lm = ds.lambda() * m as f64;
        let mut a_rows = vec![vec![0.0; m]; d];
        for i in 0..m {
            for (j, &v) in ds.column(i).iter().enumerate() {
                a_rows[j][i] = v / lm;
            }
        }
        let w: Vec<f64> = a_rows
            .iter()
            .map(|row| row.iter().zip(alpha).map(|(a, b)| a * b).sum())
            .collect();
        let g = ds.loss().gamma();
        let mut primal = 0.0;
        let mut dual_conj = 0.0;
        for i in 0..m {
            let y = ds.label(i);
            let margin: f64 = ds.column(i).iter().zip(&w).map(|(a, b)| a * b).sum();
            match ds.loss().kind() {
                LossKind::Squared => {
                    primal += (margin - y) * (margin - y) / 2.0;
                    dual_conj += alpha[i] * alpha[i] / 2.0 - alpha[i] * y;
                }
                LossKind::SmoothHinge => {
                    let z = y * margin;
                    primal += if z >= 1.0 {
                        0.0
                    } else if z <= 1.0 - g {
                        1.0 - z - g / 2.0
                    } else {
                        (1.0 - z) * (1.0 - z) / (2.0 * g)
                    };
                    dual_conj += -y * alpha[i] + g * alpha[i] * alpha[i] / 2.0;
                }
            }
        }
        let w_norm_sq: f64 = w.iter().map(|v| v * v).sum();
        let p = ds.lambda() / 2.0 * w_norm_sq + primal / m as f64;
        let dual = -ds.lambda() / 2.0 * w_norm_sq - dual_conj / m as f64;
        (p, dual)
    }

    #[test]
    fn objectives_match_an_independent_reimplementation() {
        for (seed, loss) in [
            (51u64, LossSpec::squared()),
            (52, LossSpec::smooth_hinge(0.6).unwrap()),
        ] {
            let ds = random_dataset(seed, 5, 9, loss);
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x51);
            for _ in 0..50 {
                let alpha = random_alpha(&mut rng, &ds);
                let w = ds.map_dual(&alpha);
                let (p_hand, d_hand) = objectives_by_hand(&ds, &alpha);
                let p = primal_objective(&ds, &w).unwrap();
                let d = dual_objective(&ds, &alpha).unwrap();
                assert!(
                    (p - p_hand).abs() <= 1e-12 * p.abs().max(1.0),
                    "{p} vs {p_hand}"
                );
                assert!(
                    (d - d_hand).abs() <= 1e-12 * d.abs().max(1.0),
                    "{d} vs {d_hand}"
                );
            }
        }
    }

    #[test]
    fn weak_duality_holds_for_random_feasible_points() {
        for (seed, loss) in [
            (21u64, LossSpec::squared()),
            (22, LossSpec::smooth_hinge(0.7).unwrap()),
            (23, LossSpec::smooth_hinge(0.2).unwrap()),
        ] {
            let ds = random_dataset(seed, 5, 8, loss);
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xabcd);
            for _ in 0..200 {
                let alpha = random_alpha(&mut rng, &ds);
                let gap = duality_gap(&ds, &alpha).unwrap();
                assert!(gap >= -1e-9, "weak duality violated: gap = {gap}");
            }
        }
    }

    #[test]
    fn coordinate_max_unit_column_from_origin_is_half() {
        // x = e_1 (norm 1), w = 0, alpha = 0, y = 1, lambda*m = 1.
        let cols = vec![vec![1.0, 0.0]];
        let ds = Dataset::from_columns(&cols, vec![1.0], 1.0, LossSpec::squared()).unwrap();
        let da = coordinate_max(&LossSpec::squared(), &ds, &[0.0, 0.0], 0.0, 0);
        assert!((da - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coordinate_max_is_zero_at_the_per_coordinate_optimum() {
        let ds = toy_squared();
        let w = [0.3, -0.2];
        for i in 0..ds.len() {
            let opt = ds.label(i) - linalg::dot(&w, ds.column(i));
            let da = coordinate_max(&LossSpec::squared(), &ds, &w, opt, i);
            assert!(da.abs() < 1e-15);
        }
    }

    #[test]
    fn coordinate_max_never_decreases_the_subproblem_objective() {
        for (seed, loss) in [
            (31u64, LossSpec::squared()),
            (32, LossSpec::smooth_hinge(0.4).unwrap()),
        ] {
            let ds = random_dataset(seed, 4, 7, loss);
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x77);
            let mut normal = NormalSampler::new();
            for _ in 0..500 {
                let w: Vec<f64> = (0..4).map(|_| 0.5 * normal.sample(&mut rng)).collect();
                let i = uniform_index(&mut rng, 7);
                let alpha_i = match loss.kind() {
                    LossKind::Squared => normal.sample(&mut rng),
                    LossKind::SmoothHinge => {
                        ds.label(i) * (uniform_index(&mut rng, 1001) as f64) / 1000.0
                    }
                };
                let da = coordinate_max(&loss, &ds, &w, alpha_i, i);
                let gain = coordinate_objective_delta(&loss, &ds, &w, alpha_i, i, da).unwrap();
                assert!(gain >= -1e-12, "objective decreased by {gain}");
            }
        }
    }

    #[test]
    fn conjugacy_recovers_the_loss_on_a_grid() {
        // loss(a) = max_b (a*b - conj(b)) over a fine grid of b.
        for loss in [LossSpec::squared(), LossSpec::smooth_hinge(0.5).unwrap()] {
            for &y in &[1.0, -1.0] {
                for k in -20..=20 {
                    let a = 0.2 * k as f64;
                    let (lo, hi) = match loss.kind() {
                        LossKind::Squared => (a - y - 2.0, a - y + 2.0),
                        // domain of conj in b is y*b in [-1, 0]
                        LossKind::SmoothHinge => {
                            if y > 0.0 {
                                (-1.0, 0.0)
                            } else {
                                (0.0, 1.0)
                            }
                        }
                    };
                    let steps = 4000;
                    let mut best = f64::NEG_INFINITY;
                    for s in 0..=steps {
                        let b = lo + (hi - lo) * s as f64 / steps as f64;
                        let v = a * b - loss.conjugate(y, b).unwrap();
                        best = best.max(v);
                    }
                    let direct = loss.value(y, a);
                    assert!(
                        (best - direct).abs() < 1e-6,
                        "conjugacy off at a={a}, y={y}: {best} vs {direct}"
                    );
                }
            }
        }
    }

    #[test]
    fn second_differences_respect_the_smoothness_constant() {
        let h = 1e-4;
        for loss in [
            LossSpec::squared(),
            LossSpec::smooth_hinge(1.0).unwrap(),
            LossSpec::smooth_hinge(0.25).unwrap(),
        ] {
            let bound = 1.0 / loss.gamma() + 1e-4;
            for &y in &[1.0, -1.0] {
                for k in -300..=300 {
                    let a = 0.01 * k as f64;
                    let dd = (loss.value(y, a + h) - 2.0 * loss.value(y, a) + loss.value(y, a - h))
                        / (h * h);
                    assert!(
                        dd <= bound,
                        "second difference {dd} exceeds {bound} at a={a}"
                    );
                }
            }
        }
    }
}
