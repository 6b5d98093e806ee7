//! Supercritical checks: the Dufresne identity, the small-spike law of
//! `Λ_0/c` and its matrix analogue.
//!
//! Every check draws path `i` from stream `(seed, i)`, so results do not
//! depend on the worker count.

use super::{ks_one_sample, ks_two_sample, mean_and_se, EmpiricalDistribution, GofResult, ReferenceLaw};
use crate::error::{domain, Result};
use crate::field::FieldTag;
use crate::fredholm::wishart_min_eig_sampler;
use crate::limit_operators::{default_x_max, integrate_m, sample_lambda_r1, DEFAULT_CELLS, DEFAULT_SDE_STEP};
use crate::linalg::cmat::CMat;
use crate::mc::par_map;
use crate::stochastic::sub_seed;
use serde::{Deserialize, Serialize};

/// Paths whose forecast tail exceeds this fraction of the integral are
/// continued past `x_max`.
pub const TAIL_TOL: f64 = 1e-3;
/// Forecast tail mass targeted by the matrix truncation.
pub const MATRIX_TAIL: f64 = 1e-4;

/// Samples of `∫₀^∞ e^{2(b_x − μx)} dx`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DufresneSamples {
    pub mu: f64,
    pub samples: Vec<f64>,
    /// Paths continued past the requested `x_max`.
    pub extended: usize,
}

/// Simulate the exponential functional by the trapezoid rule on the exact
/// Brownian path. A path is continued past `x_max` in steps of `x_max/2`
/// while `e^{2(b_x − μx)}/(2μ)` exceeds [`TAIL_TOL`] times the running
/// integral.
pub fn dufresne_samples(mu: f64, n_paths: usize, x_max: f64, step: f64, seed: u64) -> Result<DufresneSamples> {
    if !(mu > 0.0) {
        return domain(format!("mu must be positive, got {mu}"));
    }
    if !(x_max >= 20.0 / mu) {
        return domain(format!("x_max must be at least 20/mu = {}, got {x_max}", 20.0 / mu));
    }
    if !(step > 0.0 && step < x_max) || n_paths == 0 {
        return domain("need 0 < step < x_max and at least one path");
    }
    let n_base = (x_max / step).ceil() as usize;
    let n_more = n_base.div_ceil(2);
    let sq = step.sqrt();
    let out = par_map(n_paths, seed, |_, rng| {
        let (mut log_f, mut prev, mut acc) = (0.0, 1.0, 0.0);
        let mut target = n_base;
        let mut k = 0;
        let mut extended = false;
        loop {
            while k < target {
                log_f += 2.0 * (sq * rng.normal() - mu * step);
                let f = log_f.exp();
                acc += 0.5 * step * (prev + f);
                prev = f;
                k += 1;
            }
            if prev / (2.0 * mu) <= TAIL_TOL * acc {
                break;
            }
            target += n_more;
            extended = true;
        }
        (acc, extended)
    });
    let extended = out.iter().filter(|o| o.1).count();
    Ok(DufresneSamples { mu, samples: out.into_iter().map(|o| o.0).collect(), extended })
}

/// KS distance of the exponential functional from `1/(2γ_μ)`, the inverse
/// gamma law with shape `μ` and scale `1/2`. Threshold 0.02.
pub fn dufresne_check(mu: f64, n_paths: usize, x_max: f64, step: f64, seed: u64) -> Result<GofResult> {
    let s = dufresne_samples(mu, n_paths, x_max, step, seed)?;
    let emp = EmpiricalDistribution::new(s.samples)?;
    let law = ReferenceLaw::InverseGamma { shape: mu, scale: 0.5 };
    Ok(GofResult::new(format!("dufresne mu={mu}"), ks_one_sample(&emp, &law), emp.n(), 0.02))
}

/// Sample mean of the exponential functional with its standard error.
pub fn dufresne_mean(mu: f64, n_paths: usize, x_max: f64, step: f64, seed: u64) -> Result<(f64, f64)> {
    Ok(mean_and_se(&dufresne_samples(mu, n_paths, x_max, step, seed)?.samples))
}

/// Samples of `Λ_0/c` from the rank-one operator discretization.
pub fn supercritical_scalar_samples(beta: f64, a: f64, c_small: f64, n_samples: usize, n_cells: usize, seed: u64) -> Result<Vec<f64>> {
    if !(c_small > 0.0 && c_small <= 1e-2) {
        return domain(format!("c_small must lie in (0, 1e-2], got {c_small}"));
    }
    if !(beta * (a + 1.0) > 0.0) {
        return domain(format!("need beta(a + 1) > 0, got beta={beta}, a={a}"));
    }
    if n_samples == 0 {
        return domain("need at least one sample");
    }
    let x_max = default_x_max(a);
    par_map(n_samples, seed, |_, rng| Ok(sample_lambda_r1(beta, a, c_small, x_max, n_cells, 1, rng)?[0] / c_small)).into_iter().collect()
}

/// KS distance of `Λ_0/c` from `χ²_{β(a+1)}/β`. Threshold 0.05.
pub fn supercritical_scalar_check(beta: f64, a: f64, c_small: f64, n_samples: usize, seed: u64) -> Result<GofResult> {
    let xs = supercritical_scalar_samples(beta, a, c_small, n_samples, DEFAULT_CELLS, seed)?;
    let emp = EmpiricalDistribution::new(xs)?;
    let law = ReferenceLaw::ScaledChiSquare { nu: beta * (a + 1.0), scale: 1.0 / beta };
    let label = format!("supercritical beta={beta} a={a} c={c_small}");
    Ok(GofResult::new(label, ks_one_sample(&emp, &law), emp.n(), 0.05))
}

/// Truncation point of `∫ℳ`: the integrand norm decays like
/// `e^{−(a+1−2/β)x}`, so the tail past `x` is forecast below
/// [`MATRIX_TAIL`] from this point on.
#[must_use]
pub fn matrix_x_max(field: FieldTag, a: f64) -> f64 {
    let rate = a + 1.0 - 2.0 / field.beta();
    if rate > 0.0 {
        ((1.0 / (MATRIX_TAIL * rate)).ln() / rate).max(10.0)
    } else {
        default_x_max(a)
    }
}

/// `λ_min((∫ℳ)^{−1})` samples together with a positive-definiteness count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixDufresneSamples {
    pub samples: Vec<f64>,
    pub wishart: Vec<f64>,
    /// Paths whose `∫ℳ` failed to be positive definite.
    pub not_pd: usize,
    /// Paths flagged by the condition monitor (kept).
    pub flagged: usize,
}

fn largest_logical_eig(m: &CMat) -> f64 {
    let ev = m.hermitian_eigenvalues();
    ev[ev.len() - 1]
}

/// Sample `λ_min((∫₀^{X} ℳ)^{−1}) = 1/λ_max(∫ℳ)` and reference Wishart
/// `λ_min` values, `n_paths` of each.
pub fn matrix_dufresne_samples(r: usize, field: FieldTag, a: usize, n_paths: usize, step: f64, seed: u64) -> Result<MatrixDufresneSamples> {
    if r == 0 || n_paths == 0 {
        return domain("need r >= 1 and at least one path");
    }
    let field = FieldTag::field_from_beta(field.beta())?;
    let x_max = matrix_x_max(field, a as f64);
    let n_steps = (x_max / step).ceil() as usize;
    let runs = par_map(n_paths, sub_seed(seed, "matrix"), |_, rng| -> Result<(f64, bool, bool)> {
        let (m, flagged) = integrate_m(r, field, a as f64, x_max, n_steps, rng)?;
        let ev = m.hermitian_eigenvalues();
        let pd = ev[0] > 0.0;
        Ok((1.0 / largest_logical_eig(&m), pd, flagged))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let wishart = par_map(n_paths, sub_seed(seed, "wishart"), |_, rng| wishart_min_eig_sampler(r, a, field, rng))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(MatrixDufresneSamples {
        not_pd: runs.iter().filter(|x| !x.1).count(),
        flagged: runs.iter().filter(|x| x.2).count(),
        samples: runs.into_iter().map(|x| x.0).collect(),
        wishart,
    })
}

/// Two-sample KS distance between `λ_min((∫ℳ)^{−1})` and the Wishart
/// `λ_min`. Threshold 0.05.
pub fn matrix_dufresne_check(r: usize, field: FieldTag, a: usize, n_paths: usize, seed: u64) -> Result<GofResult> {
    let s = matrix_dufresne_samples(r, field, a, n_paths, 2.0 * DEFAULT_SDE_STEP, seed)?;
    if s.not_pd > 0 {
        return domain(format!("{} integrals of M were not positive definite", s.not_pd));
    }
    let (x, y) = (EmpiricalDistribution::new(s.samples)?, EmpiricalDistribution::new(s.wishart)?);
    let label = format!("matrix dufresne r={r} beta={} a={a}", field.beta());
    Ok(GofResult::new(label, ks_two_sample(&x, &y), x.n(), 0.05))
}
