//! Empirical distributions, reference laws, Kolmogorov–Smirnov distances and
//! the supercritical / Dufresne verification checks.

mod ks;
mod laws;
pub mod supercritical;

pub use ks::{ks_one_sample, ks_two_sample, EmpiricalDistribution};
pub use laws::ReferenceLaw;

use serde::{Deserialize, Serialize};

/// Outcome of a goodness-of-fit comparison. The threshold travels with the
/// statistic so no pass/fail decision is hidden.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GofResult {
    pub label: String,
    pub statistic: f64,
    pub n: usize,
    pub threshold: f64,
    pub pass: bool,
}

impl GofResult {
    #[must_use]
    pub fn new(label: impl Into<String>, statistic: f64, n: usize, threshold: f64) -> Self {
        Self { label: label.into(), statistic, n, threshold, pass: statistic <= threshold }
    }
}

/// Sample mean and its standard error.
#[must_use]
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (v / n).sqrt())
}

/// Binomial proportion and its standard error.
#[must_use]
pub fn proportion_and_se(successes: usize, n: usize) -> (f64, f64) {
    let p = successes as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}
