//! Block analogue of [`super::tridiag`]: smallest eigenvalues of `G G^†`
//! for a lower block bidiagonal `G`, through the block stationary qds
//! transform of `L D L^†`.
//!
//! Block sizes may vary (the last block of a truncated model is smaller).
//! Inertia of each shifted pivot block comes from an unpivoted `LDL^†`
//! factorization, which by Sylvester's law has the same sign pattern.

use super::cmat::{mul_adj_into, mul_into, CMat, C64};
use super::tridiag::smallest_by_bisection;
use crate::error::{domain, Error, Result};

/// Hermitian positive definite block tridiagonal `T = L D L^†`.
///
/// * `d[i]` – Hermitian pivot blocks, `sizes[i]` square
/// * `l[i]` – block of `L` at block position `(i+1, i)`,
///   `sizes[i+1] × sizes[i]`
#[derive(Clone, Debug)]
pub struct FactoredBlockTridiagonal {
    sizes: Vec<usize>,
    d: Vec<CMat>,
    l: Vec<CMat>,
}

impl FactoredBlockTridiagonal {
    pub fn new(d: Vec<CMat>, l: Vec<CMat>) -> Result<Self> {
        if d.is_empty() || l.len() + 1 != d.len() {
            return domain("factored block tridiagonal needs n pivot blocks and n-1 multiplier blocks");
        }
        let sizes: Vec<usize> = d.iter().map(|b| b.rows).collect();
        for (i, b) in d.iter().enumerate() {
            if !b.is_square() || b.data.iter().any(|z| !z.is_finite()) {
                return Err(Error::Internal(format!("pivot block {i} is not square and finite")));
            }
        }
        for (i, b) in l.iter().enumerate() {
            if b.rows != sizes[i + 1] || b.cols != sizes[i] || b.data.iter().any(|z| !z.is_finite()) {
                return Err(Error::Internal(format!("multiplier block {i} has the wrong shape or is not finite")));
            }
        }
        Ok(Self { sizes, d, l })
    }

    /// `G G^†` for `G` with diagonal blocks `p` and subdiagonal blocks `q`
    /// (`q[i]` at block position `(i+1, i)`).
    pub fn from_lower_block_bidiagonal(p: &[CMat], q: &[CMat]) -> Result<Self> {
        if p.is_empty() || q.len() + 1 != p.len() {
            return domain("lower block bidiagonal needs n diagonal and n-1 subdiagonal blocks");
        }
        let d: Vec<CMat> = p
            .iter()
            .map(|b| {
                let mut x = b.mul_adj(b);
                x.hermitianize();
                x
            })
            .collect();
        let mut l = Vec::with_capacity(q.len());
        for (i, qi) in q.iter().enumerate() {
            let inv = p[i].inverse().ok_or_else(|| Error::Internal(format!("singular diagonal block {i}")))?;
            l.push(qi.mul(&inv));
        }
        Self::new(d, l)
    }

    #[must_use]
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    #[must_use]
    pub fn scaled(mut self, s: f64) -> Self {
        for b in &mut self.d {
            *b = b.scale(s);
        }
        self
    }

    /// Diagonal block `i` and subdiagonal block `(i+1, i)` of the explicit
    /// matrix.
    fn explicit_blocks(&self) -> (Vec<CMat>, Vec<CMat>) {
        let n = self.d.len();
        let mut diag = Vec::with_capacity(n);
        let mut sub = Vec::with_capacity(n - 1);
        for i in 0..n {
            let mut t = self.d[i].clone();
            if i > 0 {
                let ld = self.l[i - 1].mul(&self.d[i - 1]);
                t = t.add(&ld.mul_adj(&self.l[i - 1]));
            }
            diag.push(t);
            if i + 1 < n {
                sub.push(self.l[i].mul(&self.d[i]));
            }
        }
        (diag, sub)
    }

    /// The explicit Hermitian matrix, for reference solves on small sizes.
    #[must_use]
    pub fn to_dense(&self) -> CMat {
        let (diag, sub) = self.explicit_blocks();
        super::cmat::assemble_blocks(&self.sizes, |i, j| {
            if i == j {
                Some(diag[i].clone())
            } else if i == j + 1 {
                Some(sub[j].clone())
            } else if j == i + 1 {
                Some(sub[i].adjoint())
            } else {
                None
            }
        })
    }

    /// Gershgorin upper bound on the spectrum.
    #[must_use]
    pub fn upper_bound(&self) -> f64 {
        let (diag, sub) = self.explicit_blocks();
        let n = diag.len();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for r in 0..self.sizes[i] {
                let mut s: f64 = (0..self.sizes[i]).map(|c| diag[i][(r, c)].norm()).sum();
                if i > 0 {
                    s += (0..self.sizes[i - 1]).map(|c| sub[i - 1][(r, c)].norm()).sum::<f64>();
                }
                if i + 1 < n {
                    s += (0..self.sizes[i + 1]).map(|c| sub[i][(c, r)].norm()).sum::<f64>();
                }
                best = best.max(s);
            }
        }
        best
    }

    /// Number of eigenvalues strictly below `sigma`.
    #[must_use]
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.d.len();
        let mut s = CMat::scalar(self.sizes[0], -sigma);
        let mut dp = CMat::zeros(0, 0);
        let mut y = CMat::zeros(0, 0);
        let mut z = CMat::zeros(0, 0);
        let mut count = 0;
        for i in 0..n {
            let di = &self.d[i];
            if self.sizes[i] == 1 {
                let mut p = di.data[0].re + s.data[0].re;
                if p == 0.0 {
                    p = -f64::MIN_POSITIVE;
                }
                if p < 0.0 {
                    count += 1;
                }
                if i + 1 < n {
                    let t = if p.is_infinite() { 1.0 } else { s.data[0].re / p };
                    // S_{i+1} = l d t l^† − σ
                    let li = &self.l[i];
                    let g = di.data[0].re * t;
                    let m = li.rows;
                    let mut next = CMat::zeros(m, m);
                    for r in 0..m {
                        for c in 0..m {
                            next[(r, c)] = li.data[r] * g * li.data[c].conj();
                        }
                    }
                    next.add_scaled_identity(-sigma);
                    next.hermitianize();
                    s = next;
                }
                continue;
            }
            dp.clone_from(di);
            for (a, b) in dp.data.iter_mut().zip(&s.data) {
                *a += b;
            }
            let mut x = s.clone();
            count += ldl_inertia_solve(&mut dp, &mut x);
            if i + 1 < n {
                mul_into(di, &x, &mut y);
                mul_into(&self.l[i], &y, &mut z);
                let mut next = CMat::zeros(self.l[i].rows, self.l[i].rows);
                mul_adj_into(&z, &self.l[i], &mut next);
                next.add_scaled_identity(-sigma);
                next.hermitianize();
                s = next;
            }
        }
        count
    }

    /// The `k` smallest eigenvalues, ascending, each to relative accuracy
    /// `rel_tol`.
    pub fn smallest(&self, k: usize, rel_tol: f64) -> Result<Vec<f64>> {
        if k == 0 || k > self.dim() {
            return domain(format!("requested {k} eigenvalues of a matrix of dimension {}", self.dim()));
        }
        Ok(smallest_by_bisection(|s| self.count_below(s), self.upper_bound(), k, rel_tol))
    }
}

/// In-place unpivoted `LDL^†` of Hermitian `a`; returns the number of
/// negative pivots and overwrites `b` with `a⁻¹ b`.
fn ldl_inertia_solve(a: &mut CMat, b: &mut CMat) -> usize {
    let n = a.rows;
    let mut neg = 0;
    let mut piv = [0.0f64; 64];
    let mut pivots = Vec::new();
    let piv: &mut [f64] = if n <= 64 {
        &mut piv[..n]
    } else {
        pivots.resize(n, 0.0);
        &mut pivots
    };
    for j in 0..n {
        let mut dj = a[(j, j)].re;
        for k in 0..j {
            dj -= a[(j, k)].norm_sqr() * piv[k];
        }
        if dj == 0.0 {
            dj = -f64::MIN_POSITIVE;
        }
        if dj < 0.0 {
            neg += 1;
        }
        piv[j] = dj;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= a[(i, k)] * piv[k] * a[(j, k)].conj();
            }
            a[(i, j)] = v / dj;
        }
    }
    let m = b.cols;
    for c in 0..m {
        for i in 0..n {
            let mut v = b[(i, c)];
            for k in 0..i {
                v -= a[(i, k)] * b[(k, c)];
            }
            b[(i, c)] = v;
        }
        for i in 0..n {
            b[(i, c)] /= C64::new(piv[i], 0.0);
        }
        for i in (0..n).rev() {
            let mut v = b[(i, c)];
            for k in (i + 1)..n {
                v -= a[(k, i)].conj() * b[(k, c)];
            }
            b[(i, c)] = v;
        }
    }
    neg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::derive_stream;

    fn random_block(rng: &mut crate::stochastic::RngStream, rows: usize, cols: usize, diag_boost: f64) -> CMat {
        let mut m = CMat::from_fn(rows, cols, |_, _| C64::new(rng.normal(), rng.normal()));
        if rows == cols {
            m.add_scaled_identity(diag_boost);
        }
        m
    }

    fn dense_reference(p: &[CMat], q: &[CMat]) -> Vec<f64> {
        let sizes: Vec<usize> = p.iter().map(|b| b.rows).collect();
        let g = crate::linalg::cmat::assemble_blocks(&sizes, |i, j| {
            if i == j {
                Some(p[i].clone())
            } else if i == j + 1 {
                Some(q[j].clone())
            } else {
                None
            }
        });
        g.mul_adj(&g).hermitian_eigenvalues()
    }

    #[test]
    fn matches_dense_with_variable_block_sizes() {
        let mut rng = derive_stream(21, 0);
        for sizes in [vec![2, 2, 2, 1], vec![3, 3, 2], vec![1, 1, 1], vec![2; 8]] {
            for _ in 0..10 {
                let p: Vec<CMat> = sizes.iter().map(|&s| random_block(&mut rng, s, s, 3.0)).collect();
                let q: Vec<CMat> = sizes.windows(2).map(|w| random_block(&mut rng, w[1], w[0], 0.0)).collect();
                let t = FactoredBlockTridiagonal::from_lower_block_bidiagonal(&p, &q).unwrap();
                let want = dense_reference(&p, &q);
                let k = want.len().min(5);
                let got = t.smallest(k, 1e-14).unwrap();
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() <= 1e-10 * w.max(1.0), "{sizes:?}: {g} vs {w}");
                }
                let dense = t.to_dense();
                assert!(dense.hermiticity_defect() < 1e-10);
            }
        }
    }

    #[test]
    fn scalar_blocks_agree_with_scalar_solver() {
        let mut rng = derive_stream(22, 0);
        let n = 40;
        let p: Vec<f64> = (0..n).map(|_| 0.2 + rng.uniform()).collect();
        let q: Vec<f64> = (0..n - 1).map(|_| rng.uniform()).collect();
        let scalar = crate::linalg::tridiag::FactoredTridiagonal::from_lower_bidiagonal(&p, &q).unwrap().smallest(3, 1e-14).unwrap();
        let pb: Vec<CMat> = p.iter().map(|&x| CMat::scalar(1, x)).collect();
        let qb: Vec<CMat> = q.iter().map(|&x| CMat::scalar(1, x)).collect();
        let block = FactoredBlockTridiagonal::from_lower_block_bidiagonal(&pb, &qb).unwrap().smallest(3, 1e-14).unwrap();
        for (a, b) in scalar.iter().zip(&block) {
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn ldl_counts_negative_eigenvalues() {
        let mut a = CMat::from_real_diag(&[2.0, -1.0, 3.0]);
        a[(0, 1)] = C64::new(0.5, 0.2);
        a[(1, 0)] = C64::new(0.5, -0.2);
        let want = a.hermitian_eigenvalues().iter().filter(|&&x| x < 0.0).count();
        let mut b = CMat::identity(3);
        let mut f = a.clone();
        assert_eq!(ldl_inertia_solve(&mut f, &mut b), want);
        assert!(a.mul(&b).sub(&CMat::identity(3)).max_abs() < 1e-12);
    }
}
