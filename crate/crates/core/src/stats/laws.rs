use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur};

/// Closed-form reference distributions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ReferenceLaw {
    /// Rate-λ exponential.
    Exponential { rate: f64 },
    /// χ² with ν degrees of freedom.
    ChiSquare { nu: f64 },
    /// `scale · χ²_ν`.
    ScaledChiSquare { nu: f64, scale: f64 },
    /// `scale / G` with `G ~ Gamma(shape, 1)`.
    InverseGamma { shape: f64, scale: f64 },
    /// `exp(−e^{−x})`.
    GumbelType,
}

impl ReferenceLaw {
    #[must_use]
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ReferenceLaw::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            ReferenceLaw::ChiSquare { nu } => chi_square_cdf(nu, x),
            ReferenceLaw::ScaledChiSquare { nu, scale } => chi_square_cdf(nu, x / scale),
            ReferenceLaw::InverseGamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_ur(shape, scale / x)
                }
            }
            ReferenceLaw::GumbelType => (-(-x).exp()).exp(),
        }
    }

    #[must_use]
    pub fn mean(&self) -> f64 {
        match *self {
            ReferenceLaw::Exponential { rate } => 1.0 / rate,
            ReferenceLaw::ChiSquare { nu } => nu,
            ReferenceLaw::ScaledChiSquare { nu, scale } => nu * scale,
            ReferenceLaw::InverseGamma { shape, scale } => {
                if shape > 1.0 {
                    scale / (shape - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            ReferenceLaw::GumbelType => 0.577_215_664_901_532_9,
        }
    }
}

fn chi_square_cdf(nu: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(0.5 * nu, 0.5 * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::derive_stream;

    fn laws() -> Vec<ReferenceLaw> {
        vec![
            ReferenceLaw::Exponential { rate: 1.5 },
            ReferenceLaw::ChiSquare { nu: 3.0 },
            ReferenceLaw::ScaledChiSquare { nu: 4.0, scale: 0.25 },
            ReferenceLaw::InverseGamma { shape: 2.0, scale: 0.5 },
            ReferenceLaw::GumbelType,
        ]
    }

    #[test]
    fn cdfs_monotone_and_bounded() {
        let mut rng = derive_stream(0, 0);
        for law in laws() {
            let mut xs: Vec<f64> = (0..1000).map(|_| 20.0 * rng.uniform() - 5.0).collect();
            xs.sort_by(f64::total_cmp);
            let mut prev = 0.0;
            for x in xs {
                let f = law.cdf(x);
                assert!((0.0..=1.0).contains(&f));
                assert!(f >= prev - 1e-15, "{law:?} at {x}");
                prev = f;
            }
            assert!(law.cdf(1e9) > 1.0 - 1e-9);
            assert!(law.cdf(-1e3) < 1e-9);
        }
    }

    #[test]
    fn known_values() {
        // chi^2_2 is Exp(1/2)
        let c = ReferenceLaw::ChiSquare { nu: 2.0 };
        assert!((c.cdf(3.0) - (1.0 - (-1.5f64).exp())).abs() < 1e-12);
        // inverse gamma, shape 1: P(scale/G <= x) = exp(-scale/x)
        let ig = ReferenceLaw::InverseGamma { shape: 1.0, scale: 0.5 };
        assert!((ig.cdf(2.0) - (-0.25f64).exp()).abs() < 1e-12);
        assert!((ReferenceLaw::GumbelType.cdf(0.0) - (-1f64).exp()).abs() < 1e-15);
    }
}
