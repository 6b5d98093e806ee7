//! Finite-n spiked ensembles in bidiagonal form and their smallest
//! eigenvalues.
//!
//! The one-spike model `B` is n×n upper bidiagonal with χ entries; the
//! multispike model is upper block bidiagonal with r×r blocks. Eigenvalues of
//! `n·BB^†` come from the structured solvers in [`crate::linalg`]; no dense
//! n×n matrix is formed.

use crate::error::{domain, Result};
use crate::field::{dedup_kramers, write_entry, FieldElement, FieldTag};
use crate::linalg::block_tridiag::FactoredBlockTridiagonal;
use crate::linalg::cmat::{CMat, C64};
use crate::linalg::tridiag::FactoredTridiagonal;
use crate::stochastic::{sample_chi, sample_unit_gaussian, RngStream};
use serde::{Deserialize, Serialize};

/// Relative accuracy of the bisection eigensolvers.
pub const EIG_REL_TOL: f64 = 1e-13;

/// One-spike upper bidiagonal model: `diag[i]` on the diagonal,
/// `offdiag[i]` at `(i, i+1)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BidiagonalModel {
    pub n: usize,
    pub a: f64,
    pub beta: f64,
    pub sigma: f64,
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

/// Ascending eigenvalues of `n·W`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectrumSample {
    pub eigenvalues: Vec<f64>,
    pub k: usize,
}

/// Draw the one-spike model: diagonal `χ_{β(n+a−i+1)}/√β` (first entry times
/// `√σ`), off-diagonal `χ_{β(n−i)}/√β`, i = 1, 2, ….
pub fn build_one_spike(n: usize, a: f64, beta: f64, sigma: f64, rng: &mut RngStream) -> Result<BidiagonalModel> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    if !(a > -1.0) {
        return domain(format!("a must exceed -1, got {a}"));
    }
    if !(beta > 0.0) {
        return domain(format!("beta must be positive, got {beta}"));
    }
    if !(sigma > 0.0) {
        return domain(format!("sigma must be positive, got {sigma}"));
    }
    let sb = beta.sqrt();
    let nf = n as f64;
    let mut diag = Vec::with_capacity(n);
    let mut offdiag = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..=n {
        diag.push(sample_chi(beta * (nf + a - i as f64 + 1.0), rng)? / sb);
        if i < n {
            offdiag.push(sample_chi(beta * (nf - i as f64), rng)? / sb);
        }
    }
    diag[0] *= sigma.sqrt();
    Ok(BidiagonalModel { n, a, beta, sigma, diag, offdiag })
}

impl BidiagonalModel {
    /// `n·BBᵀ` in factored form.
    pub fn factored(&self) -> Result<FactoredTridiagonal> {
        Ok(FactoredTridiagonal::from_lower_bidiagonal(&self.diag, &self.offdiag)?.scaled(self.n as f64))
    }
}

/// The `k` smallest eigenvalues of `n·BBᵀ`, ascending.
pub fn smallest_eigs_one_spike(model: &BidiagonalModel, k: usize) -> Result<SpectrumSample> {
    if k == 0 || k > model.n {
        return domain(format!("k must lie in 1..={}, got {k}", model.n));
    }
    let eigenvalues = model.factored()?.smallest(k, EIG_REL_TOL)?;
    Ok(SpectrumSample { eigenvalues, k })
}

/// Multispike upper block bidiagonal model in complex representation.
///
/// * `diag_blocks[k]` – `D_k` (upper triangular, χ diagonal, field Gaussians
///   above), with `D_1` already multiplied by `Σ_r^{1/2}`
/// * `offdiag_blocks[k]` – `O_k` at block position `(k, k+1)` (lower
///   triangular, χ diagonal, field Gaussians below)
#[derive(Clone, Debug)]
pub struct BlockBidiagonalModel {
    pub r: usize,
    pub n: usize,
    pub a: f64,
    pub field: FieldTag,
    pub sigma: Vec<f64>,
    pub block_sizes: Vec<usize>,
    pub diag_blocks: Vec<CMat>,
    pub offdiag_blocks: Vec<CMat>,
}

/// Draw the multispike model for spikes `sigma` (the diagonal of `Σ_r`).
pub fn build_multispike(n: usize, a: f64, field: FieldTag, sigma: &[f64], rng: &mut RngStream) -> Result<BlockBidiagonalModel> {
    let r = sigma.len();
    if r == 0 {
        return domain("at least one spike value is required");
    }
    if n < r {
        return domain(format!("n = {n} must be at least r = {r}"));
    }
    if sigma.iter().any(|&s| !(s > 0.0)) {
        return domain("spike values must be positive");
    }
    let beta = FieldTag::field_from_beta(field.beta())?.beta();
    if !(a > -1.0) {
        return domain(format!("a must exceed -1, got {a}"));
    }
    let e = field.embed_dim();
    let sb = beta.sqrt();
    let nf = n as f64;
    let nblocks = n.div_ceil(r);
    let sizes: Vec<usize> = (0..nblocks).map(|k| if k + 1 < nblocks { r } else { n - r * (nblocks - 1) }).collect();
    let chi = |dof: f64, what: &str, k: usize, i: usize, rng: &mut RngStream| -> Result<f64> {
        if !(dof > 0.0) {
            return domain(format!("nonpositive chi dof {dof} in {what}_{k} entry ({i},{i})"));
        }
        Ok(sample_chi(dof, rng)? / sb)
    };
    let mut diag_blocks = Vec::with_capacity(nblocks);
    let mut offdiag_blocks = Vec::with_capacity(nblocks - 1);
    for k in 1..=nblocks {
        let s = sizes[k - 1];
        let mut d = CMat::zeros(s * e, s * e);
        for i in 1..=s {
            for j in 1..=s {
                let q = if i == j {
                    let dof = beta * (nf + a - (r * (k - 1)) as f64 - i as f64 + 1.0);
                    FieldElement::real(chi(dof, "D", k, i, rng)?)
                } else if j > i {
                    sample_unit_gaussian(field, rng)?
                } else {
                    continue;
                };
                write_entry(&mut d, field, i - 1, j - 1, q);
            }
        }
        diag_blocks.push(d);
        if k < nblocks {
            let cols = sizes[k];
            let mut o = CMat::zeros(s * e, cols * e);
            for i in 1..=s {
                for j in 1..=cols {
                    let q = if i == j {
                        let dof = beta * (nf - (r * k) as f64 - i as f64 + 1.0);
                        FieldElement::real(chi(dof, "O", k, i, rng)?)
                    } else if j < i {
                        sample_unit_gaussian(field, rng)?
                    } else {
                        continue;
                    };
                    write_entry(&mut o, field, i - 1, j - 1, q);
                }
            }
            offdiag_blocks.push(o);
        }
    }
    // D_1 ← D_1 Σ_r^{1/2}: scale logical column j by √σ_j
    let d1 = &mut diag_blocks[0];
    for j in 0..r {
        let s = C64::new(sigma[j].sqrt(), 0.0);
        for row in 0..r * e {
            for c in 0..e {
                d1[(row, j * e + c)] *= s;
            }
        }
    }
    Ok(BlockBidiagonalModel { r, n, a, field, sigma: sigma.to_vec(), block_sizes: sizes, diag_blocks, offdiag_blocks })
}

impl BlockBidiagonalModel {
    /// `n·BB^†` in factored block form (`G = B^†` is lower block
    /// bidiagonal).
    pub fn factored(&self) -> Result<FactoredBlockTridiagonal> {
        let p: Vec<CMat> = self.diag_blocks.iter().map(CMat::adjoint).collect();
        let q: Vec<CMat> = self.offdiag_blocks.iter().map(CMat::adjoint).collect();
        Ok(FactoredBlockTridiagonal::from_lower_block_bidiagonal(&p, &q)?.scaled(self.n as f64))
    }

    /// The full `B` in complex representation, for reference solves.
    #[must_use]
    pub fn dense(&self) -> CMat {
        let e = self.field.embed_dim();
        let sizes: Vec<usize> = self.block_sizes.iter().map(|s| s * e).collect();
        crate::linalg::cmat::assemble_blocks(&sizes, |i, j| {
            if i == j {
                Some(self.diag_blocks[i].clone())
            } else if j == i + 1 {
                Some(self.offdiag_blocks[i].clone())
            } else {
                None
            }
        })
    }
}

/// The `k` smallest eigenvalues of `n·BB^†`, ascending. Quaternion spectra
/// are computed on the complex representation and Kramers pairs merged.
pub fn smallest_eigs_multispike(model: &BlockBidiagonalModel, k: usize) -> Result<SpectrumSample> {
    if k == 0 || k > model.n {
        return domain(format!("k must lie in 1..={}, got {k}", model.n));
    }
    let t = model.factored()?;
    let eigenvalues = if model.field == FieldTag::Quaternion {
        let doubled = t.smallest(2 * k, EIG_REL_TOL)?;
        dedup_kramers(&doubled, 1e-8)?
    } else {
        t.smallest(k, EIG_REL_TOL)?
    };
    Ok(SpectrumSample { eigenvalues, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_one_sample, ks_two_sample, mean_and_se, EmpiricalDistribution, ReferenceLaw};
    use crate::stochastic::derive_stream;

    fn dense_eigs(m: &BlockBidiagonalModel) -> Vec<f64> {
        let b = m.dense();
        b.mul_adj(&b).scale(m.n as f64).hermitian_eigenvalues()
    }

    #[test]
    fn top_left_entry_mean() {
        let n = 100;
        let xs: Vec<f64> = (0..20_000).map(|i| build_one_spike(n, 0.0, 2.0, 1.0, &mut derive_stream(1, i)).unwrap().diag[0]).collect();
        let (m, se) = mean_and_se(&xs);
        // E χ_200 / √2 from the exact gamma ratio
        let lg = statrs::function::gamma::ln_gamma;
        let want = 2f64.sqrt() * (lg(100.5) - lg(100.0)).exp() / 2f64.sqrt();
        assert!((m - want).abs() < 3.0 * se, "{m} vs {want}");
    }

    #[test]
    fn zeroed_offdiag_gives_sorted_squares() {
        let mut m = build_one_spike(6, 0.5, 1.0, 2.0, &mut derive_stream(2, 0)).unwrap();
        m.offdiag.iter_mut().for_each(|x| *x = 0.0);
        let got = smallest_eigs_one_spike(&m, 6).unwrap().eigenvalues;
        let mut want: Vec<f64> = m.diag.iter().map(|d| 6.0 * d * d).collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12 * w);
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        for i in 0..20 {
            let m = build_one_spike(2, 0.3, 2.0, 1.5, &mut derive_stream(3, i)).unwrap();
            let (a, b, c) = (m.diag[0], m.offdiag[0], m.diag[1]);
            // n·B Bᵀ with B = [[a, b], [0, c]]
            let (p, q, s) = (2.0 * (a * a + b * b), 2.0 * b * c, 2.0 * c * c);
            let disc = ((p - s).powi(2) + 4.0 * q * q).sqrt();
            let lo = 0.5 * (p + s - disc);
            let lo = if lo > 1e-3 * (p + s) { lo } else { (p * s - q * q) / (0.5 * (p + s + disc)) };
            let got = smallest_eigs_one_spike(&m, 1).unwrap().eigenvalues[0];
            assert!((got - lo).abs() <= 1e-12 * lo, "{got} vs {lo}");
        }
    }

    #[test]
    fn degenerate_n1_is_scaled_chi_square() {
        let (a, beta, sigma) = (0.5, 2.0, 1.0);
        let xs: Vec<f64> = (0..100_000)
            .map(|i| {
                let m = build_one_spike(1, a, beta, sigma, &mut derive_stream(4, i)).unwrap();
                smallest_eigs_one_spike(&m, 1).unwrap().eigenvalues[0]
            })
            .collect();
        let law = ReferenceLaw::ScaledChiSquare { nu: beta * (1.0 + a), scale: sigma / beta };
        let ks = ks_one_sample(&EmpiricalDistribution::new(xs).unwrap(), &law);
        assert!(ks <= 0.02, "ks {ks}");
    }

    #[test]
    fn null_hard_edge_is_exponential() {
        let n = 200;
        let xs: Vec<f64> = (0..10_000)
            .map(|i| {
                let m = build_one_spike(n, 0.0, 2.0, 1.0, &mut derive_stream(5, i)).unwrap();
                smallest_eigs_one_spike(&m, 1).unwrap().eigenvalues[0]
            })
            .collect();
        let ks = ks_one_sample(&EmpiricalDistribution::new(xs).unwrap(), &ReferenceLaw::Exponential { rate: 1.0 });
        assert!(ks <= 0.05, "ks {ks}");
    }

    #[test]
    fn null_law_is_exact_at_every_n() {
        let ks_at = |n: usize| {
            let xs: Vec<f64> = (0..20_000)
                .map(|i| {
                    let m = build_one_spike(n, 0.0, 2.0, 1.0, &mut derive_stream(6, i)).unwrap();
                    smallest_eigs_one_spike(&m, 1).unwrap().eigenvalues[0]
                })
                .collect();
            ks_one_sample(&EmpiricalDistribution::new(xs).unwrap(), &ReferenceLaw::Exponential { rate: 1.0 })
        };
        // exact at every n for β=2, a=0: the finite-n law is Exp(1), so both
        // distances are pure sampling noise; the smaller-n run must not be
        // materially better
        let (k50, k5) = (ks_at(50), ks_at(5));
        assert!(k50 < 0.02 && k5 < 0.02, "{k5} {k50}");
    }

    #[test]
    fn spike_monotone_on_coupled_draws() {
        for i in 0..200 {
            let base = build_one_spike(30, 1.0, 1.0, 1.0, &mut derive_stream(7, i)).unwrap();
            let mut prev = 0.0;
            for sigma in [0.01f64, 0.1, 1.0, 3.0, 10.0] {
                let mut m = base.clone();
                m.diag[0] *= sigma.sqrt();
                let l = smallest_eigs_one_spike(&m, 1).unwrap().eigenvalues[0];
                assert!(l >= prev * (1.0 - 1e-12));
                prev = l;
            }
        }
    }

    #[test]
    fn scale_equivariance() {
        let m = build_one_spike(40, 0.0, 2.0, 1.0, &mut derive_stream(8, 0)).unwrap();
        let mut s = m.clone();
        s.diag.iter_mut().chain(s.offdiag.iter_mut()).for_each(|x| *x *= 3.0);
        let a = smallest_eigs_one_spike(&m, 3).unwrap().eigenvalues;
        let b = smallest_eigs_one_spike(&s, 3).unwrap().eigenvalues;
        for (x, y) in a.iter().zip(&b) {
            assert!((9.0 * x - y).abs() < 1e-11 * y);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let rng = &mut derive_stream(0, 0);
        assert!(build_one_spike(5, -1.0, 2.0, 1.0, rng).is_err());
        assert!(build_one_spike(5, 0.0, 0.0, 1.0, rng).is_err());
        assert!(build_one_spike(5, 0.0, 2.0, 0.0, rng).is_err());
        let m = build_one_spike(5, 0.0, 2.0, 1.0, rng).unwrap();
        assert!(smallest_eigs_one_spike(&m, 0).is_err());
        assert!(smallest_eigs_one_spike(&m, 6).is_err());
        assert!(build_multispike(5, 0.0, FieldTag::GeneralBeta(3.0), &[1.0], rng).is_err());
        assert!(build_multispike(1, 0.0, FieldTag::Complex, &[1.0, 1.0], rng).is_err());
    }

    #[test]
    fn r1_block_model_matches_scalar_model() {
        let n = 50;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..3000 {
            let s = build_one_spike(n, 1.0, 1.0, 2.0, &mut derive_stream(9, i)).unwrap();
            xs.push(smallest_eigs_one_spike(&s, 1).unwrap().eigenvalues[0]);
            let b = build_multispike(n, 1.0, FieldTag::Real, &[2.0], &mut derive_stream(10, i)).unwrap();
            ys.push(smallest_eigs_multispike(&b, 1).unwrap().eigenvalues[0]);
        }
        let ks = ks_two_sample(&EmpiricalDistribution::new(xs).unwrap(), &EmpiricalDistribution::new(ys).unwrap());
        assert!(ks < 0.04, "ks {ks}");
    }

    #[test]
    fn block_entry_law() {
        let n = 10;
        let xs: Vec<f64> = (0..20_000)
            .map(|i| {
                let m = build_multispike(n, 0.0, FieldTag::Complex, &[1.0, 1.0], &mut derive_stream(11, i)).unwrap();
                m.diag_blocks[1][(0, 0)].re
            })
            .collect();
        let (mean, se) = mean_and_se(&xs);
        let lg = statrs::function::gamma::ln_gamma;
        let dof = 2.0 * (n as f64 - 2.0);
        let want = 2f64.sqrt() * (lg(0.5 * (dof + 1.0)) - lg(0.5 * dof)).exp() / 2f64.sqrt();
        assert!((mean - want).abs() < 3.0 * se, "{mean} vs {want}");
    }

    #[test]
    fn structured_matches_dense_small_instances() {
        let mut count = 0;
        for (field, tag) in [(FieldTag::Real, 0), (FieldTag::Complex, 1), (FieldTag::Quaternion, 2)] {
            for r in 1..=3 {
                for n in [r, 7, 8, 13] {
                    for rep in 0..3 {
                        let sig: Vec<f64> = (0..r).map(|j| 0.5 + j as f64).collect();
                        let rng = &mut derive_stream(12, (tag * 1000 + r * 100 + n * 3 + rep) as u64);
                        let m = build_multispike(n, 0.7, field, &sig, rng).unwrap();
                        let mut dense = dense_eigs(&m);
                        if field == FieldTag::Quaternion {
                            dense = dedup_kramers(&dense, 1e-8).unwrap();
                        }
                        let k = n.min(3);
                        let got = smallest_eigs_multispike(&m, k).unwrap().eigenvalues;
                        for (g, w) in got.iter().zip(&dense) {
                            assert!((g - w).abs() <= 1e-10 * w.max(1.0), "{field:?} r={r} n={n}: {g} vs {w}");
                        }
                        count += 1;
                    }
                }
            }
        }
        assert!(count >= 100);
    }

    #[test]
    fn quaternion_spectrum_is_doubled() {
        let m = build_multispike(6, 0.0, FieldTag::Quaternion, &[1.0, 2.0], &mut derive_stream(13, 0)).unwrap();
        let d = dense_eigs(&m);
        assert_eq!(d.len(), 12);
        for p in d.chunks(2) {
            assert!((p[0] - p[1]).abs() <= 1e-9 * p[1]);
        }
    }

    #[test]
    fn eigenvalues_positive() {
        for i in 0..1000 {
            let m = build_multispike(50, 0.0, FieldTag::Complex, &[1.0, 0.5], &mut derive_stream(14, i)).unwrap();
            let ev = smallest_eigs_multispike(&m, 2).unwrap().eigenvalues;
            assert!(ev[0] > 0.0 && ev[0] < ev[1]);
        }
    }

    #[test]
    fn identity_spike_matches_null_generator() {
        let n = 40;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..10_000 {
            let b = build_multispike(n, 1.0, FieldTag::Complex, &[1.0, 1.0], &mut derive_stream(15, i)).unwrap();
            xs.push(smallest_eigs_multispike(&b, 1).unwrap().eigenvalues[0]);
            let s = build_one_spike(n, 1.0, 2.0, 1.0, &mut derive_stream(16, i)).unwrap();
            ys.push(smallest_eigs_one_spike(&s, 1).unwrap().eigenvalues[0]);
        }
        let ks = ks_two_sample(&EmpiricalDistribution::new(xs).unwrap(), &EmpiricalDistribution::new(ys).unwrap());
        assert!(ks <= 0.03, "ks {ks}");
    }
}
