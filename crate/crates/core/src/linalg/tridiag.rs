//! Smallest eigenvalues of `G Gᵀ` for a lower bidiagonal `G`, to high
//! relative accuracy.
//!
//! The tridiagonal matrix is never formed. It is kept as `L D Lᵀ` with `L`
//! unit lower bidiagonal, and inertia of `L D Lᵀ − σI` is read off the
//! stationary qds transform. Graded matrices whose entries span many orders of
//! magnitude (the operator discretizations) keep full relative accuracy in
//! every eigenvalue this way, which a Sturm count on the explicit tridiagonal
//! does not.

use crate::error::{domain, Error, Result};

/// Symmetric positive definite tridiagonal `T = L D Lᵀ`.
///
/// * `d[i]` – pivots
/// * `dl2[i] = d[i]·l[i]²` – the products that enter the recurrences,
///   `i < n − 1`
#[derive(Clone, Debug)]
pub struct FactoredTridiagonal {
    d: Vec<f64>,
    dl2: Vec<f64>,
}

impl FactoredTridiagonal {
    pub fn new(d: Vec<f64>, dl2: Vec<f64>) -> Result<Self> {
        if d.is_empty() || dl2.len() + 1 != d.len() {
            return domain("factored tridiagonal needs n pivots and n-1 products");
        }
        if d.iter().chain(&dl2).any(|x| !(x.is_finite() && *x >= 0.0)) || d.iter().any(|&x| x <= 0.0) {
            return Err(Error::Internal("factored tridiagonal has a non-positive or non-finite entry".into()));
        }
        Ok(Self { d, dl2 })
    }

    /// `G Gᵀ` for `G` with diagonal `p` and subdiagonal `q` (`q[i]` at row
    /// `i+1`, column `i`).
    pub fn from_lower_bidiagonal(p: &[f64], q: &[f64]) -> Result<Self> {
        Self::new(p.iter().map(|x| x * x).collect(), q.iter().map(|x| x * x).collect())
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.d.len()
    }

    /// Multiply the matrix by `s > 0`.
    #[must_use]
    pub fn scaled(mut self, s: f64) -> Self {
        for x in self.d.iter_mut().chain(self.dl2.iter_mut()) {
            *x *= s;
        }
        self
    }

    /// Diagonal and off-diagonal of the explicit tridiagonal.
    #[must_use]
    pub fn to_tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let diag = (0..n).map(|i| self.d[i] + if i > 0 { self.dl2[i - 1] } else { 0.0 }).collect();
        let off = (0..n - 1).map(|i| (self.d[i] * self.dl2[i]).sqrt()).collect();
        (diag, off)
    }

    /// Number of eigenvalues strictly below `sigma`.
    #[must_use]
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.n();
        let mut count = 0;
        let mut s = -sigma;
        for i in 0..n {
            let mut dp = self.d[i] + s;
            if dp == 0.0 {
                dp = -f64::MIN_POSITIVE;
            }
            if dp < 0.0 {
                count += 1;
            }
            if i + 1 < n {
                let t = if dp.is_infinite() { 1.0 } else { s / dp };
                s = self.dl2[i] * t - sigma;
            }
        }
        count
    }

    /// Gershgorin upper bound on the spectrum.
    #[must_use]
    pub fn upper_bound(&self) -> f64 {
        let (diag, off) = self.to_tridiagonal();
        let n = diag.len();
        (0..n).map(|i| diag[i] + if i > 0 { off[i - 1] } else { 0.0 } + if i + 1 < n { off[i] } else { 0.0 }).fold(0.0, f64::max)
    }

    /// The `k` smallest eigenvalues, ascending, each to relative accuracy
    /// `rel_tol`.
    pub fn smallest(&self, k: usize, rel_tol: f64) -> Result<Vec<f64>> {
        if k == 0 || k > self.n() {
            return domain(format!("requested {k} eigenvalues of a {}x{} matrix", self.n(), self.n()));
        }
        Ok(smallest_by_bisection(|s| self.count_below(s), self.upper_bound(), k, rel_tol))
    }
}

/// Geometric bisection on a monotone eigenvalue count for a positive
/// definite matrix whose spectrum lies in `(0, upper]`.
pub(crate) fn smallest_by_bisection(count: impl Fn(f64) -> usize, upper: f64, k: usize, rel_tol: f64) -> Vec<f64> {
    let upper = upper * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    let mut out = Vec::with_capacity(k);
    // positive lower bracket with count ≤ j, carried over between indices
    let mut lo = upper;
    while lo > 1e-300 && count(lo) > 0 {
        lo *= 0.5;
    }
    for j in 0..k {
        let mut hi = upper;
        // tighten the upper bracket quickly when eigenvalues are far below it
        let mut probe = lo * 2.0;
        while probe < hi {
            if count(probe) > j {
                hi = probe;
                break;
            }
            lo = probe;
            probe *= 2.0;
        }
        while hi / lo - 1.0 > rel_tol {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if count(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.push((lo * hi).sqrt());
    }
    out
}
