//! Monte Carlo estimators of `F_k` and the hard-to-soft comparison.

use super::scalar::{HardPlan, SoftPlan};
use super::vector::{run_hard, run_soft};
use super::{CountMode, EventRecord, HardDiffusionConfig, SoftDiffusionConfig, StopRule};
use crate::error::{domain, Result};
use crate::mc::par_map;
use crate::stats::proportion_and_se;
use crate::stochastic::sub_seed;
use serde::{Deserialize, Serialize};

/// Fraction of paths with at most `k` counted events.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FkEstimate {
    pub k: usize,
    pub mode: CountMode,
    pub estimate: f64,
    pub se: f64,
    pub n_paths: usize,
    /// Paths dropped by the adaptive integrator (not in `n_paths`).
    pub excluded: usize,
    /// Paths that reached the horizon undecided (kept, counted as is).
    pub censored: usize,
}

fn reduce(recs: &[EventRecord], k: usize, mode: CountMode) -> Result<FkEstimate> {
    let kept: Vec<&EventRecord> = recs.iter().filter(|r| !r.excluded).collect();
    if kept.is_empty() {
        return domain("every path was excluded");
    }
    let ok = kept.iter().filter(|r| r.count(mode) <= k).count();
    let (estimate, se) = proportion_and_se(ok, kept.len());
    Ok(FkEstimate {
        k,
        mode,
        estimate,
        se,
        n_paths: kept.len(),
        excluded: recs.len() - kept.len(),
        censored: kept.iter().filter(|r| r.censored).count(),
    })
}

fn check_mode(a: f64, r: usize, mode: CountMode) -> Result<()> {
    if mode == CountMode::Explosions && a < r as f64 - 1.0 {
        return domain(format!("explosion counting characterizes F_k only when a >= r - 1 (got a = {a}, r = {r}); use zeros mode"));
    }
    Ok(())
}

/// `F̂_k` for any configuration: rank one uses the exact-flow engine, rank
/// r the adaptive particle engine. Path i uses stream `(seed, i)`.
pub fn estimate_fk(cfg: &HardDiffusionConfig, k: usize, mode: CountMode, n_paths: usize, seed: u64) -> Result<FkEstimate> {
    cfg.validate()?;
    check_mode(cfg.a, cfg.r, mode)?;
    if n_paths == 0 {
        return domain("need at least one path");
    }
    let stop = Some(StopRule { mode, k });
    let recs: Vec<EventRecord> = if cfg.r == 1 {
        let plan = HardPlan::new(cfg)?;
        par_map(n_paths, seed, |_, rng| plan.run(cfg, stop, rng))
    } else {
        par_map(n_paths, seed, |_, rng| run_hard(cfg, stop, rng)).into_iter().collect::<Result<_>>()?
    };
    reduce(&recs, k, mode)
}

/// `F̂_k(μ, c)` for the rank-one process.
#[allow(clippy::too_many_arguments)]
pub fn estimate_f1(beta: f64, a: f64, k: usize, mu: f64, c: f64, n_paths: usize, mode: CountMode, seed: u64) -> Result<FkEstimate> {
    estimate_fk(&HardDiffusionConfig::new(beta, a, mu, &[c])?, k, mode, n_paths, seed)
}

/// `F̂_k(μ, c_1, …, c_r)`; the process starts at time `μ/r`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_fr(beta: f64, a: f64, k: usize, mu: f64, c: &[f64], n_paths: usize, mode: CountMode, seed: u64) -> Result<FkEstimate> {
    estimate_fk(&HardDiffusionConfig::new(beta, a, mu, c)?, k, mode, n_paths, seed)
}

/// `P(λ_{r,k}(β, w) ≤ λ)` as the fraction of soft paths with at most `k`
/// explosions.
pub fn estimate_soft(cfg: &SoftDiffusionConfig, k: usize, n_paths: usize, seed: u64) -> Result<FkEstimate> {
    cfg.validate()?;
    if n_paths == 0 {
        return domain("need at least one path");
    }
    let stop = Some(StopRule { mode: CountMode::Explosions, k });
    let recs: Vec<EventRecord> = if cfg.r == 1 {
        let plan = SoftPlan::new(cfg)?;
        par_map(n_paths, seed, |_, rng| plan.run(cfg, stop, rng))
    } else {
        par_map(n_paths, seed, |_, rng| run_soft(cfg, stop, rng)).into_iter().collect::<Result<_>>()?
    };
    reduce(&recs, k, CountMode::Explosions)
}

/// Paired CDF estimates at one grid point.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TransitionPoint {
    pub lambda: f64,
    /// Estimate of `P((a² − Λ_0(β, 2a, c(a)))/a^{4/3} ≤ λ)`.
    pub hard: FkEstimate,
    /// Estimate of `P(λ_0(β, w) ≤ λ)`.
    pub soft: FkEstimate,
}

/// Rescaled hard-edge CDF against the soft-edge CDF. The hard process uses
/// `(β, 2a, c(a) = a + a^{2/3} w)` started at `μ = −ln(a² − a^{4/3} λ)`, with
/// the base step scaled by `a^{−2/3}` so both engines resolve the same
/// dynamics. `soft_step` is the soft-edge base step.
pub fn hard_to_soft_cdf(
    beta: f64,
    a_large: f64,
    w: f64,
    lambda_grid: &[f64],
    n_paths: usize,
    soft_step: f64,
    seed: u64,
) -> Result<Vec<TransitionPoint>> {
    if !(a_large >= 10.0) {
        return domain(format!("hard-to-soft needs a >= 10, got {a_large}"));
    }
    if w.is_nan() {
        return domain("w must not be NaN");
    }
    let scale = a_large.powf(2.0 / 3.0);
    let c = if w == f64::INFINITY { f64::INFINITY } else { a_large + scale * w };
    if !(c > 0.0) {
        return domain(format!("spike c(a) = {c} must be positive"));
    }
    let mut out = Vec::with_capacity(lambda_grid.len());
    for (i, &lam) in lambda_grid.iter().enumerate() {
        let level = a_large * a_large - a_large.powf(4.0 / 3.0) * lam;
        if !(level > 0.0) {
            return domain(format!("grid point lambda = {lam} gives a non-positive spectral point"));
        }
        let mu = -level.ln();
        let hard_cfg = HardDiffusionConfig::new(beta, 2.0 * a_large, mu, &[c])?.with_step(soft_step / scale);
        let hard = estimate_fk(&hard_cfg, 0, CountMode::Explosions, n_paths, sub_seed(seed, &format!("hard/{i}")))?;
        let soft_cfg = SoftDiffusionConfig::new(beta, lam, &[w])?.with_step(soft_step);
        let soft = estimate_soft(&soft_cfg, 0, n_paths, sub_seed(seed, &format!("soft/{i}")))?;
        out.push(TransitionPoint { lambda: lam, hard, soft });
    }
    Ok(out)
}
