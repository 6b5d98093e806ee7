//! Riccati diffusions whose zero and explosion counts encode the spiked
//! hard-edge and soft-edge eigenvalue laws.
//!
//! The rank-one engines split each step into an exact geometric (or additive)
//! noise step and the exact projective flow of `p' = s − p²`. The projective
//! flow passes through ±∞ on its own, so "explode to −∞ and restart at +∞"
//! needs no threshold there. The rank-r engines use an adaptive explicit step
//! with gap control and a finite restart value.

mod estimate;
mod matrix;
mod scalar;
mod vector;

pub use estimate::{estimate_f1, estimate_fk, estimate_fr, estimate_soft, hard_to_soft_cdf, FkEstimate, TransitionPoint};
pub use matrix::{simulate_matrix_riccati, MatrixRiccatiConfig, MatrixRiccatiPath};
pub use scalar::{simulate_p1, simulate_q1, RiccatiFlow};
pub use vector::{simulate_p, simulate_q_vector, simulate_q_vector_until};

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};

/// Default base step of the hard-edge engines.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Finite stand-in for `+∞` in the rank-r engines and explosion threshold.
pub const DEFAULT_Q_MAX: f64 = 1e6;
/// Per-path probability budget for stopping a path early once a further
/// event is practically impossible.
pub const DEFAULT_STOP_TOL: f64 = 1e-4;
/// Smallest step the adaptive integrators may take before a path is
/// excluded.
pub const STEP_FLOOR: f64 = 1e-12;

/// Which events define `F_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    Zeros,
    Explosions,
}

impl std::str::FromStr for CountMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zeros" => Ok(Self::Zeros),
            "explosions" => Ok(Self::Explosions),
            _ => domain(format!("unknown count mode {s:?} (expected zeros or explosions)")),
        }
    }
}

/// Hard-edge diffusion `dq_i = (2/√β) q_i db_i + (ψ(q_i) + q_i Σ_{j≠i}
/// (q_i+q_j)/(q_i−q_j)) dx` with `ψ(q) = (a + 2/β) q − q² − e^{−r x}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct HardDiffusionConfig {
    pub beta: f64,
    pub a: f64,
    pub r: usize,
    /// `μ` for r = 1 and `μ/r` for r > 1.
    pub start_time: f64,
    /// Descending start values; `+∞` allowed.
    pub start_values: Vec<f64>,
    /// Time at which an undecided path is stopped and flagged as censored.
    pub horizon: f64,
    pub base_step: f64,
    pub q_max: f64,
    pub stop_tol: f64,
}

impl HardDiffusionConfig {
    /// Configuration for `F_k(μ, c_1, …, c_r)`: the start values are sorted
    /// into descending order and the start time is `μ/r`.
    pub fn new(beta: f64, a: f64, mu: f64, c: &[f64]) -> Result<Self> {
        let r = c.len();
        if r == 0 {
            return domain("at least one start value is required");
        }
        let mut start_values = c.to_vec();
        if start_values.iter().any(|v| v.is_nan()) {
            return domain("start values must not be NaN");
        }
        start_values.sort_by(|x, y| y.total_cmp(x));
        let start_time = mu / r as f64;
        let cfg = Self {
            beta,
            a,
            r,
            start_time,
            start_values,
            horizon: default_horizon(start_time),
            base_step: DEFAULT_STEP,
            q_max: DEFAULT_Q_MAX,
            stop_tol: DEFAULT_STOP_TOL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    #[must_use]
    pub fn with_step(mut self, step: f64) -> Self {
        self.base_step = step;
        self
    }

    #[must_use]
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return domain(format!("beta must be positive, got {}", self.beta));
        }
        if self.r > 1 && ![1.0, 2.0, 4.0].contains(&self.beta) {
            return domain(format!("r > 1 needs beta in {{1, 2, 4}}, got {}", self.beta));
        }
        if !(self.a > -1.0) {
            return domain(format!("a must exceed -1, got {}", self.a));
        }
        if self.start_values.len() != self.r || self.r == 0 {
            return domain("need exactly r start values");
        }
        if self.start_values.windows(2).any(|w| !(w[0] >= w[1])) {
            return domain("start values must be descending");
        }
        if !self.start_time.is_finite() || !(self.horizon > self.start_time) {
            return domain("horizon must exceed a finite start time");
        }
        if !(self.base_step > 0.0) || !(self.q_max > 1.0) || !(self.stop_tol > 0.0 && self.stop_tol < 1.0) {
            return domain("step, q_max and stop_tol must be positive (q_max > 1, stop_tol < 1)");
        }
        Ok(())
    }

    /// Drift evaluator `ψ(c) = (a + 2/β) c − c² − e^{−r x}`.
    #[must_use]
    pub fn psi(&self, c: f64, x: f64) -> f64 {
        (self.a + 2.0 / self.beta) * c - c * c - (-(self.r as f64) * x).exp()
    }

    /// Level of `r x + min(ln q_min, 0)` beyond which a further zero has
    /// probability below `stop_tol`. Far from the origin `ln q + r x` moves
    /// like a Brownian motion with variance `4/β` and drift `a + 1`.
    #[must_use]
    pub fn safe_level(&self) -> f64 {
        3.0 + 2.0 * (1.0 / self.stop_tol).ln() / ((self.a + 1.0) * self.beta)
    }

    /// Start values with `+∞` replaced by `q_max` minus descending offsets.
    #[must_use]
    pub fn finite_start(&self) -> Vec<f64> {
        finite_start(&self.start_values, self.q_max)
    }
}

/// Soft-edge diffusion `dp_i = (2/√β) db_i + (r x − p_i² + Σ_{k≠i}
/// 2/(p_i − p_k)) dx`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SoftDiffusionConfig {
    pub beta: f64,
    pub r: usize,
    /// `λ` for r = 1 and `λ/r` for r > 1.
    pub start_time: f64,
    pub start_values: Vec<f64>,
    pub horizon: f64,
    pub base_step: f64,
    pub q_max: f64,
    pub stop_tol: f64,
}

impl SoftDiffusionConfig {
    /// Configuration for `P(λ_{r,k}(β, w) ≤ λ)`.
    pub fn new(beta: f64, lambda: f64, w: &[f64]) -> Result<Self> {
        let r = w.len();
        if r == 0 {
            return domain("at least one start value is required");
        }
        if w.iter().any(|v| v.is_nan()) {
            return domain("start values must not be NaN");
        }
        let mut start_values = w.to_vec();
        start_values.sort_by(|x, y| y.total_cmp(x));
        let start_time = lambda / r as f64;
        let cfg = Self {
            beta,
            r,
            start_time,
            start_values,
            horizon: start_time.max(0.0) + 10.0,
            base_step: DEFAULT_STEP,
            q_max: DEFAULT_Q_MAX,
            stop_tol: DEFAULT_STOP_TOL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    #[must_use]
    pub fn with_step(mut self, step: f64) -> Self {
        self.base_step = step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return domain(format!("beta must be positive, got {}", self.beta));
        }
        if self.r > 1 && self.beta < 1.0 {
            return domain("the rank-r soft diffusion needs beta >= 1");
        }
        if self.start_values.len() != self.r || self.r == 0 {
            return domain("need exactly r start values");
        }
        if self.start_values.windows(2).any(|w| !(w[0] >= w[1])) {
            return domain("start values must be descending");
        }
        if !self.start_time.is_finite() || !(self.horizon > self.start_time) {
            return domain("horizon must exceed a finite start time");
        }
        if !(self.base_step > 0.0) || !(self.q_max > 1.0) || !(self.stop_tol > 0.0 && self.stop_tol < 1.0) {
            return domain("step, q_max and stop_tol must be positive (q_max > 1, stop_tol < 1)");
        }
        Ok(())
    }

    /// A path with all particles positive is treated as settled once the
    /// barrier `(4/3)(r x)^{3/2}` makes an explosion less likely than
    /// `stop_tol`.
    #[must_use]
    pub fn is_settled(&self, x: f64, lowest: f64) -> bool {
        let y = self.r as f64 * x;
        lowest > 0.0 && y > 0.0 && (2.0 * self.beta / 3.0) * y.powf(1.5) >= (1.0 / self.stop_tol).ln() + 3.0
    }

    #[must_use]
    pub fn finite_start(&self) -> Vec<f64> {
        finite_start(&self.start_values, self.q_max)
    }
}

/// Default horizon `max(15, μ) + 10`.
#[must_use]
pub fn default_horizon(start_time: f64) -> f64 {
    start_time.max(15.0) + 10.0
}

fn finite_start(values: &[f64], q_max: f64) -> Vec<f64> {
    let mut k = 0.0;
    values
        .iter()
        .map(|&v| {
            if v.is_infinite() && v > 0.0 {
                let out = q_max - 1e-3 * q_max * k;
                k += 1.0;
                out
            } else {
                v
            }
        })
        .collect()
}

/// Zero hits, explosions and the stopping state of one path.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct EventRecord {
    pub zero_times: Vec<f64>,
    pub explosion_times: Vec<f64>,
    /// Horizon reached while a further event was still possible.
    pub censored: bool,
    /// Path abandoned because the adaptive step fell below [`STEP_FLOOR`].
    pub excluded: bool,
    pub end_time: f64,
    pub final_values: Vec<f64>,
    /// Hard-edge coordinates still below zero at a censored end. Each such
    /// zero is followed by an explosion when a ≥ r − 1; it may lie far past
    /// the horizon at a = r − 1, where `ln|q|` has no drift near 0.
    #[serde(default)]
    pub pending_explosions: usize,
}

impl EventRecord {
    #[must_use]
    pub fn zero_hit_count(&self) -> usize {
        self.zero_times.len()
    }

    #[must_use]
    pub fn explosion_count(&self) -> usize {
        self.explosion_times.len()
    }

    #[must_use]
    pub fn count(&self, mode: CountMode) -> usize {
        match mode {
            CountMode::Zeros => self.zero_hit_count(),
            CountMode::Explosions => self.explosion_count() + self.pending_explosions,
        }
    }
}

/// Optional early exit once more than `k` events of the given kind occurred.
#[derive(Clone, Copy, Debug)]
pub struct StopRule {
    pub mode: CountMode,
    pub k: usize,
}

impl StopRule {
    fn reached(rule: Option<Self>, rec: &EventRecord) -> bool {
        rule.is_some_and(|s| rec.count(s.mode) > s.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_sorts_and_validates() {
        let cfg = HardDiffusionConfig::new(2.0, 1.0, 0.0, &[1.0, 2.0]).unwrap();
        assert_eq!(cfg.start_values, vec![2.0, 1.0]);
        assert_eq!(cfg.start_time, 0.0);
        assert!(HardDiffusionConfig::new(3.0, 1.0, 0.0, &[1.0, 2.0]).is_err());
        assert!(HardDiffusionConfig::new(2.0, -1.0, 0.0, &[1.0]).is_err());
        let inf = HardDiffusionConfig::new(2.0, 0.0, 4.0, &[f64::INFINITY, f64::INFINITY]).unwrap();
        assert_eq!(inf.start_time, 2.0);
        let f = inf.finite_start();
        assert!(f[0] > f[1] && f[1] > 0.0);
    }

    #[test]
    fn psi_matches_definition() {
        let cfg = HardDiffusionConfig::new(2.0, 1.0, 0.0, &[1.0]).unwrap();
        assert!((cfg.psi(1.5, 0.3) - (2.0 * 1.5 - 2.25 - (-0.3f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn count_mode_parses() {
        assert_eq!("zeros".parse::<CountMode>().unwrap(), CountMode::Zeros);
        assert_eq!("EXPLOSIONS".parse::<CountMode>().unwrap(), CountMode::Explosions);
        assert!("both".parse::<CountMode>().is_err());
    }
}
