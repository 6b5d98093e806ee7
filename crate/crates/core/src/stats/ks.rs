use super::laws::ReferenceLaw;
use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};

/// Sorted Monte Carlo samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Sorts `samples`; rejects empty input and NaN.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return domain("empirical distribution needs at least one sample");
        }
        if samples.iter().any(|x| x.is_nan()) {
            return domain("empirical distribution received NaN");
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.samples.len()
    }

    #[must_use]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Fraction of samples ≤ x.
    #[must_use]
    pub fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.n() as f64
    }

    /// Fraction of samples > x, with its binomial standard error.
    #[must_use]
    pub fn survival_with_se(&self, x: f64) -> (f64, f64) {
        let p = 1.0 - self.cdf(x);
        (p, (p * (1.0 - p) / self.n() as f64).sqrt())
    }

    #[must_use]
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.n() as f64
    }
}

/// Kolmogorov–Smirnov distance between the empirical CDF and a reference law.
#[must_use]
pub fn ks_one_sample(emp: &EmpiricalDistribution, law: &ReferenceLaw) -> f64 {
    let n = emp.n() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in emp.samples().iter().enumerate() {
        let f = law.cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance, exact for the step functions
/// (ties handled by advancing both samples past equal values).
#[must_use]
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (xa, xb) = (a.samples(), b.samples());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::derive_stream;

    fn exp_samples(seed: u64, n: usize, shift: f64) -> EmpiricalDistribution {
        let mut rng = derive_stream(seed, 0);
        EmpiricalDistribution::new((0..n).map(|_| -rng.uniform().ln() + shift).collect()).unwrap()
    }

    #[test]
    fn self_distance_is_zero() {
        let e = exp_samples(1, 500, 0.0);
        assert_eq!(ks_two_sample(&e, &e), 0.0);
    }

    #[test]
    fn null_ks_below_asymptotic_bound() {
        let n = 100_000;
        let bound = 1.36 / (n as f64).sqrt() * 1.5;
        let mut ok = 0;
        for seed in 0..20 {
            let e = exp_samples(100 + seed, n, 0.0);
            if ks_one_sample(&e, &ReferenceLaw::Exponential { rate: 1.0 }) <= bound {
                ok += 1;
            }
        }
        assert!(ok >= 19, "{ok}/20");
    }

    #[test]
    fn gross_shift_is_detected() {
        let e = exp_samples(2, 2000, 1.0);
        assert!(ks_one_sample(&e, &ReferenceLaw::Exponential { rate: 1.0 }) >= 0.3);
        let f = exp_samples(3, 2000, 0.0);
        assert!(ks_two_sample(&e, &f) >= 0.3);
    }

    #[test]
    fn two_sample_handles_ties() {
        let a = EmpiricalDistribution::new(vec![1.0, 1.0, 2.0, 3.0]).unwrap();
        let b = EmpiricalDistribution::new(vec![1.0, 2.0, 2.0, 3.0]).unwrap();
        assert!((ks_two_sample(&a, &b) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(EmpiricalDistribution::new(vec![]).is_err());
        assert!(EmpiricalDistribution::new(vec![1.0, f64::NAN]).is_err());
    }
}
