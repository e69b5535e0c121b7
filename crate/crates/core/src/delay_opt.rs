//! Tuning the number of local iterations H under a wall-clock budget.
//!
//! Under a total time budget the solver completes
//! `T = t_total / (t_lp*H + t_delay + t_cp)` outer rounds, each contracting
//! the dual suboptimality by `1 - (1 - (1-delta)^H) C / K`. The predicted
//! end-of-budget gap as a function of H is minimized by grid search, in log
//! space: realistic parameters underflow doubles in linear space.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DelayOptError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Communication/computation profile of a star round plus the bound
/// constants `C`, `K`, `delta = s / m_tilde`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayScenario {
    pub c: f64,
    pub k: usize,
    pub delta: f64,
    pub t_total: f64,
    pub t_lp: f64,
    pub t_cp: f64,
    pub t_delay: f64,
}

impl DelayScenario {
    pub fn new(
        c: f64,
        k: usize,
        delta: f64,
        t_total: f64,
        t_lp: f64,
        t_cp: f64,
        t_delay: f64,
    ) -> Result<Self, DelayOptError> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(DelayOptError::InvalidScenario(format!(
                "C = {c} not in (0,1]"
            )));
        }
        if k == 0 {
            return Err(DelayOptError::InvalidScenario("K must be >= 1".into()));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(DelayOptError::InvalidScenario(format!(
                "delta = {delta} not in (0,1]"
            )));
        }
        if !t_total.is_finite() || t_total <= 0.0 {
            return Err(DelayOptError::InvalidScenario(format!(
                "t_total = {t_total} must be > 0"
            )));
        }
        if t_lp < 0.0 || t_cp < 0.0 || t_delay < 0.0 {
            return Err(DelayOptError::InvalidScenario(
                "times must be nonnegative".into(),
            ));
        }
        Ok(Self {
            c,
            k,
            delta,
            t_total,
            t_lp,
            t_cp,
            t_delay,
        })
    }

    /// Same scenario with the delay expressed as `r * t_lp`.
    pub fn with_delay_ratio(mut self, r: f64) -> Result<Self, DelayOptError> {
        if r < 0.0 {
            return Err(DelayOptError::InvalidScenario(format!(
                "delay ratio {r} negative"
            )));
        }
        self.t_delay = r * self.t_lp;
        Ok(self)
    }
}

/// Natural log of the predicted end-of-budget gap factor:
///
/// ```text
/// ln f(H) = (t_total / (t_lp*H + t_delay + t_cp)) * ln(1 - (1 - (1-delta)^H) C/K)
/// ```
///
/// Always finite and <= 0 for valid scenarios (excluding the degenerate
/// corner C = 1, K = 1, delta = 1 where the base is exactly zero).
pub fn log_gap_objective(scenario: &DelayScenario, h: u32) -> f64 {
    debug_assert!(h >= 1);
    let base = 1.0 - (1.0 - (1.0 - scenario.delta).powi(h as i32)) * scenario.c / scenario.k as f64;
    let exponent = scenario.t_total / (scenario.t_lp * h as f64 + scenario.t_delay + scenario.t_cp);
    exponent * base.ln()
}

/// The gap factor itself, `exp(log_gap_objective)`; may underflow to zero in
/// extreme regimes, so comparisons should use the log form.
pub fn gap_objective(scenario: &DelayScenario, h: u32) -> f64 {
    log_gap_objective(scenario, h).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalH {
    pub h_star: u32,
    /// Log of the objective at `h_star`.
    pub log_value: f64,
}

/// Exhaustive search over `H = 1..=h_max`, smallest H winning ties.
pub fn optimal_h(scenario: &DelayScenario, h_max: u32) -> OptimalH {
    assert!(h_max >= 1, "h_max must be at least 1");
    let mut best = OptimalH {
        h_star: 1,
        log_value: log_gap_objective(scenario, 1),
    };
    for h in 2..=h_max {
        let v = log_gap_objective(scenario, h);
        if v < best.log_value {
            best = OptimalH {
                h_star: h,
                log_value: v,
            };
        }
    }
    best
}

/// The scenario measured for the star network experiments:
/// `(C, K, delta, t_total, t_lp, t_cp) = (0.5, 3, 1/300, 1, 4e-5, 3e-5)`.
pub fn measured_star_scenario() -> DelayScenario {
    DelayScenario::new(0.5, 3, 1.0 / 300.0, 1.0, 4e-5, 3e-5, 0.0).unwrap()
}
