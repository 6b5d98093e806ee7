//! Random hard-edge limit operators sampled from their driving noise and
//! discretized by Nyström quadrature.
//!
//! For r = 1 the operator is `f ↦ ∫ (S(x∧y) + 1/c) f(y) m(dy)` with speed
//! density `m = e^{−(a+1)x − (2/√β)b}` and scale density
//! `s = e^{ax + (2/√β)b}`; for r > 1 the densities become the matrix
//! processes `M = e^{−rx}AA^†` and `(AA^†)^{−1}` built from the SDE for `A`.
//!
//! The discretized kernel `H` factors as `W K W` with `K` a cumulative sum,
//! so `H⁻¹ = G^†G` for an explicit lower (block) bidiagonal `G`. The
//! inverse eigenvalues `Λ_k` are then the smallest eigenvalues of `GG^†`,
//! obtained to full relative accuracy by the factored solvers. A dense
//! eigensolve of `H` is hopeless here: its entries are graded over ~e^40.

use crate::error::{domain, Error, Result};
use crate::field::{dedup_kramers, FieldTag};
use crate::linalg::block_tridiag::FactoredBlockTridiagonal;
use crate::linalg::cmat::{mul_adj_into, mul_into, CMat, C64};
use crate::linalg::tridiag::FactoredTridiagonal;
use crate::matrix_models::EIG_REL_TOL;
use crate::stochastic::{fill_matrix_bm_increment, sample_brownian, BrownianRecord, RngStream};
use serde::{Deserialize, Serialize};

/// Default truncation of the half line.
#[must_use]
pub fn default_x_max(a: f64) -> f64 {
    if a < 0.0 {
        60.0
    } else {
        40.0
    }
}

/// Default number of Nyström cells.
pub const DEFAULT_CELLS: usize = 2000;
/// Default Brownian sub-steps per Nyström cell for r = 1 paths.
pub const DEFAULT_REFINE: usize = 16;
/// Default Euler–Maruyama step for the matrix SDE.
pub const DEFAULT_SDE_STEP: f64 = 5e-4;
/// Paths whose `A` has Frobenius condition number above this are flagged.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Scalar speed and scale data on a fine uniform grid over `[0, x_max]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpeedScalePath {
    pub beta: f64,
    pub a: f64,
    pub x_max: f64,
    pub brownian: BrownianRecord,
    pub m_density: Vec<f64>,
    pub s_density: Vec<f64>,
    /// `∫₀^x s` by the trapezoid rule, at every grid node.
    pub s_cum: Vec<f64>,
}

impl SpeedScalePath {
    /// Build the densities from a given Brownian record.
    pub fn from_brownian(beta: f64, a: f64, brownian: BrownianRecord) -> Result<Self> {
        if !(beta > 0.0) {
            return domain(format!("beta must be positive, got {beta}"));
        }
        if !(a > -1.0) {
            return domain(format!("a must exceed -1, got {a}"));
        }
        let kappa = 2.0 / beta.sqrt();
        let x = &brownian.grid;
        let m_density: Vec<f64> = x.iter().zip(&brownian.values).map(|(&x, &b)| (-(a + 1.0) * x - kappa * b).exp()).collect();
        // s = e^{−x}/m keeps the product identity exact to rounding
        let s_density: Vec<f64> = x.iter().zip(&m_density).map(|(&x, &m)| (-x).exp() / m).collect();
        let s_cum = cumulative_trapezoid(x, &s_density);
        Ok(Self { beta, a, x_max: *x.last().unwrap(), brownian, m_density, s_density, s_cum })
    }

    #[must_use]
    pub fn grid(&self) -> &[f64] {
        &self.brownian.grid
    }
}

fn cumulative_trapezoid(x: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    out.push(0.0);
    let mut acc = 0.0;
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}

/// Sample a speed/scale path resolved for `n_cells` Nyström cells with
/// [`DEFAULT_REFINE`] Brownian steps per cell.
pub fn build_speed_scale(beta: f64, a: f64, x_max: f64, n_cells: usize, rng: &mut RngStream) -> Result<SpeedScalePath> {
    build_speed_scale_refined(beta, a, x_max, n_cells, DEFAULT_REFINE, rng)
}

/// As [`build_speed_scale`] with an explicit number of Brownian steps per
/// cell (rounded up to even so cell midpoints are grid nodes).
pub fn build_speed_scale_refined(
    beta: f64,
    a: f64,
    x_max: f64,
    n_cells: usize,
    refine: usize,
    rng: &mut RngStream,
) -> Result<SpeedScalePath> {
    if n_cells < 2 {
        return domain("at least two cells are required");
    }
    if !(x_max > 0.0) {
        return domain(format!("x_max must be positive, got {x_max}"));
    }
    let refine = refine.max(2).div_ceil(2) * 2;
    let b = sample_brownian(x_max, n_cells * refine, rng)?;
    SpeedScalePath::from_brownian(beta, a, b)
}

/// Matrix SDE data on a uniform grid: `A` and `∫₀^x (AA^†)^{−1}` at every
/// node, in complex representation (`dim = r·embed`).
#[derive(Clone, Debug)]
pub struct MatrixSdePath {
    pub r: usize,
    pub field: FieldTag,
    pub a: f64,
    pub x_max: f64,
    pub n_steps: usize,
    dim: usize,
    a_nodes: Vec<C64>,
    s_cum: Vec<C64>,
    /// Largest Frobenius condition number of `A` along the path.
    pub max_condition: f64,
    /// Set when the condition number exceeded [`CONDITION_LIMIT`].
    pub flagged: bool,
}

impl MatrixSdePath {
    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[must_use]
    pub fn node_x(&self, i: usize) -> f64 {
        self.x_max * i as f64 / self.n_steps as f64
    }

    fn block(&self, store: &[C64], i: usize) -> CMat {
        let d2 = self.dim * self.dim;
        CMat { rows: self.dim, cols: self.dim, data: store[i * d2..(i + 1) * d2].to_vec() }
    }

    #[must_use]
    pub fn a_at(&self, i: usize) -> CMat {
        self.block(&self.a_nodes, i)
    }

    /// `M = e^{−rx} A A^†` at node `i`.
    #[must_use]
    pub fn m_at(&self, i: usize) -> CMat {
        let a = self.a_at(i);
        let mut m = a.mul_adj(&a).scale((-(self.r as f64) * self.node_x(i)).exp());
        m.hermitianize();
        m
    }

    #[must_use]
    pub fn s_cum_at(&self, i: usize) -> CMat {
        self.block(&self.s_cum, i)
    }

    /// `∫₀^{x_max} M dx` by the trapezoid rule.
    #[must_use]
    pub fn integral_of_m(&self) -> CMat {
        let h = self.x_max / self.n_steps as f64;
        let mut acc = CMat::zeros(self.dim, self.dim);
        for i in 0..=self.n_steps {
            let f = if i == 0 || i == self.n_steps { 0.5 * h } else { h };
            acc = acc.add(&self.m_at(i).scale(f));
        }
        acc.hermitianize();
        acc
    }

    /// The r = 1 path carrying exactly the densities of a speed/scale path:
    /// `A = (e^x m)^{1/2}` and the same cumulative scale.
    #[must_use]
    pub fn lift_scalar(path: &SpeedScalePath) -> Self {
        let x = path.grid();
        let n_steps = x.len() - 1;
        let a_nodes = x.iter().zip(&path.m_density).map(|(&x, &m)| C64::new((x.exp() * m).sqrt(), 0.0)).collect();
        let s_cum = path.s_cum.iter().map(|&s| C64::new(s, 0.0)).collect();
        Self {
            r: 1,
            field: FieldTag::from_beta(path.beta).unwrap_or(FieldTag::GeneralBeta(path.beta)),
            a: path.a,
            x_max: path.x_max,
            n_steps,
            dim: 1,
            a_nodes,
            s_cum,
            max_condition: 1.0,
            flagged: false,
        }
    }
}

/// Euler–Maruyama for `dA = A dB + (−a/2 + 1/(2β)) A dx`, `A(0) = I`, with
/// right-multiplied matrix Brownian increments.
pub fn simulate_a(r: usize, field: FieldTag, a: f64, x_max: f64, n_steps: usize, rng: &mut RngStream) -> Result<MatrixSdePath> {
    simulate_a_inner(r, field, a, x_max, n_steps, rng, true)
}

/// As [`simulate_a`] but keeps only what is needed for `∫M`: cheaper when the
/// operator itself is not required.
pub fn integrate_m(r: usize, field: FieldTag, a: f64, x_max: f64, n_steps: usize, rng: &mut RngStream) -> Result<(CMat, bool)> {
    let p = simulate_a_inner(r, field, a, x_max, n_steps, rng, false)?;
    let d = p.dim;
    Ok((CMat { rows: d, cols: d, data: p.s_cum }, p.flagged))
}

fn simulate_a_inner(
    r: usize,
    field: FieldTag,
    a: f64,
    x_max: f64,
    n_steps: usize,
    rng: &mut RngStream,
    store: bool,
) -> Result<MatrixSdePath> {
    if r == 0 || n_steps == 0 || !(x_max > 0.0) {
        return domain("simulate_a needs r >= 1, n_steps >= 1 and x_max > 0");
    }
    if !(a > -1.0) {
        return domain(format!("a must exceed -1, got {a}"));
    }
    let field = if r == 1 { FieldTag::from_beta(field.beta())? } else { FieldTag::field_from_beta(field.beta())? };
    let beta = field.beta();
    // scalar general-β paths use a real representation
    let (noise_field, dim) = if field.is_field() { (field, r * field.embed_dim()) } else { (FieldTag::Real, 1) };
    let h = x_max / n_steps as f64;
    let kappa = -0.5 * a + 0.5 / beta;
    let d2 = dim * dim;
    let rf = r as f64;

    let mut a_cur = CMat::identity(dim);
    let mut a_next = CMat::zeros(dim, dim);
    let mut step = CMat::zeros(dim, dim);
    let mut prev_f = CMat::identity(dim); // integrand at the previous node
    let mut acc = CMat::zeros(dim, dim);
    let mut tmp = CMat::zeros(dim, dim);
    let mut a_nodes = Vec::new();
    let mut s_cum = Vec::new();
    if store {
        a_nodes.reserve((n_steps + 1) * d2);
        s_cum.reserve((n_steps + 1) * d2);
        a_nodes.extend_from_slice(&a_cur.data);
        s_cum.extend_from_slice(&acc.data);
    } else {
        // integrate M = e^{−rx} AA^† instead of (AA^†)^{−1}
        prev_f = CMat::identity(dim);
    }
    let mut max_cond: f64 = 1.0;
    for k in 0..n_steps {
        fill_matrix_bm_increment(&mut step, r, noise_field, beta, h, rng);
        if !field.is_field() {
            // general β scalar: real increment of variance h/β
            step.data[0] = C64::new(step.data[0].re, 0.0);
        }
        step.add_scaled_identity(1.0 + kappa * h);
        mul_into(&a_cur, &step, &mut a_next);
        std::mem::swap(&mut a_cur, &mut a_next);
        let f = if store {
            match a_cur.inverse() {
                Some(inv) => {
                    let cond = frob(&a_cur) * frob(&inv);
                    max_cond = max_cond.max(cond);
                    let mut f = CMat::zeros(dim, dim);
                    // (AA^†)^{-1} = A^{-†} A^{-1}
                    let inv_adj = inv.adjoint();
                    mul_into(&inv_adj, &inv, &mut f);
                    f
                }
                // singular A: keep the shape of the path, flag it
                None => {
                    max_cond = f64::INFINITY;
                    prev_f.clone()
                }
            }
        } else {
            mul_adj_into(&a_cur, &a_cur, &mut tmp);
            let e = (-rf * h * (k + 1) as f64).exp();
            tmp.scale(e)
        };
        for ((s, x), y) in acc.data.iter_mut().zip(&f.data).zip(&prev_f.data) {
            *s += 0.5 * h * (x + y);
        }
        prev_f = f;
        if store {
            a_nodes.extend_from_slice(&a_cur.data);
            s_cum.extend_from_slice(&acc.data);
        }
    }
    if !store {
        acc.hermitianize();
        s_cum = acc.data;
        // condition monitoring on the final A only
        if let Some(inv) = a_cur.inverse() {
            max_cond = frob(&a_cur) * frob(&inv);
        } else {
            max_cond = f64::INFINITY;
        }
    }
    Ok(MatrixSdePath { r, field, a, x_max, n_steps, dim, a_nodes, s_cum, max_condition: max_cond, flagged: !(max_cond <= CONDITION_LIMIT) })
}

fn frob(m: &CMat) -> f64 {
    m.data.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
}

/// Descriptive parameters carried by a discretization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscretizationMeta {
    pub beta: f64,
    pub a: f64,
    pub r: usize,
    pub x_max: f64,
    pub n_cells: usize,
    /// Eigenvalues of the spike matrix `C⁻¹` (for r = 1 just `1/c`).
    pub c_inv_eigenvalues: Vec<f64>,
}

/// Nyström discretization on `n_cells` cells.
///
/// * `mass[i]` – `∫_{cell i} m` (matrix valued for r > 1), with a factor
///   `mass_factor[i]·mass_factor[i]^† = mass[i]`
/// * `s_mid[i]` – cumulative scale at the cell midpoint
/// * `inc_factor[i]` – factor of the kernel increment `d_0 = S_0 + C⁻¹`,
///   `d_i = S_i − S_{i−1}`
/// * `c_inv` – the spike term (zero for Dirichlet)
///
/// The Hermitian matrix is
/// `H_ij = mass_i^{1/2} (S(x_i∧x_j) + C⁻¹) mass_j^{1/2}`. The factors are
/// computed directly from `A` (by QR of stacked samples) so that the weak
/// directions of an ill-conditioned `A` survive.
#[derive(Clone, Debug)]
pub struct OperatorDiscretization {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub mass: Vec<CMat>,
    pub mass_factor: Vec<CMat>,
    pub s_mid: Vec<CMat>,
    pub inc_factor: Vec<CMat>,
    pub c_inv: CMat,
    pub field: FieldTag,
    pub meta: DiscretizationMeta,
}

/// Ascending inverse eigenvalues `Λ_0 < Λ_1 < …`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectrumResult {
    pub lambda: Vec<f64>,
}

/// Cell boundaries on a fine uniform grid of `n_fine` cells, as node indices.
fn cell_bounds(n_fine: usize, n_cells: usize) -> Result<Vec<usize>> {
    if n_cells < 2 || n_cells > n_fine / 2 {
        return domain(format!("need 2 <= N <= {} cells on this path, got {n_cells}", n_fine / 2));
    }
    Ok((0..=n_cells).map(|i| ((i as f64) * n_fine as f64 / n_cells as f64).round() as usize).collect())
}

/// Trapezoid weights for nodes `lo..=hi` on a uniform grid of spacing `h`.
fn trapezoid_weights(lo: usize, hi: usize, h: f64) -> impl Iterator<Item = (usize, f64)> {
    (lo..=hi).map(move |j| (j, if j == lo || j == hi { 0.5 * h } else { h }))
}

/// Discretize the r = 1 operator with spike `c` (`f64::INFINITY` for the
/// Dirichlet case).
pub fn discretize_g1(path: &SpeedScalePath, c: f64, n_cells: usize) -> Result<OperatorDiscretization> {
    if !(c > 0.0) {
        return domain(format!("spike c must be positive or +inf, got {c}"));
    }
    let x = path.grid();
    let n_fine = x.len() - 1;
    let h = path.x_max / n_fine as f64;
    let bounds = cell_bounds(n_fine, n_cells)?;
    let ci = if c.is_infinite() { 0.0 } else { 1.0 / c };
    let mut nodes = Vec::with_capacity(n_cells);
    let mut weights = Vec::with_capacity(n_cells);
    let mut mass = Vec::with_capacity(n_cells);
    let mut mass_factor = Vec::with_capacity(n_cells);
    let mut s_mid = Vec::with_capacity(n_cells);
    let mut inc_factor = Vec::with_capacity(n_cells);
    let mut prev_mid = 0;
    for (i, w) in bounds.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        let mid = (lo + hi) / 2;
        let mu: f64 = trapezoid_weights(lo, hi, h).map(|(j, c)| c * path.m_density[j]).sum();
        let mut inc: f64 = trapezoid_weights(prev_mid, mid, h).map(|(j, c)| c * path.s_density[j]).sum();
        if i == 0 {
            inc += ci;
        }
        prev_mid = mid;
        nodes.push(x[mid]);
        weights.push(x[hi] - x[lo]);
        mass.push(CMat::scalar(1, mu));
        mass_factor.push(CMat::scalar(1, mu.sqrt()));
        s_mid.push(CMat::scalar(1, path.s_cum[mid]));
        inc_factor.push(CMat::scalar(1, inc.sqrt()));
    }
    Ok(OperatorDiscretization {
        nodes,
        weights,
        mass,
        mass_factor,
        s_mid,
        inc_factor,
        c_inv: CMat::scalar(1, ci),
        field: FieldTag::from_beta(path.beta)?,
        meta: DiscretizationMeta { beta: path.beta, a: path.a, r: 1, x_max: path.x_max, n_cells, c_inv_eigenvalues: vec![ci] },
    })
}

/// Lower factor `L` with `L L^† = Σ_k Y_k^† Y_k`, from a QR factorization
/// of the stacked `Y_k` (no Gram matrix is formed).
fn gram_factor(stack: &[CMat]) -> CMat {
    let d = stack[0].cols;
    let rows: usize = stack.iter().map(|b| b.rows).sum();
    let mut y = nalgebra::DMatrix::<C64>::zeros(rows, d);
    let mut off = 0;
    for b in stack {
        for i in 0..b.rows {
            for j in 0..d {
                y[(off + i, j)] = b[(i, j)];
            }
        }
        off += b.rows;
    }
    let r = nalgebra::linalg::QR::new(y).r();
    CMat::from_fn(d, d, |i, j| r[(j, i)].conj())
}

/// Discretize the r-spiked operator with spike matrix `c_inv` (Hermitian
/// positive semidefinite, complex representation of size `path.dim()`).
pub fn discretize_gr(path: &MatrixSdePath, c_inv: &CMat, n_cells: usize) -> Result<OperatorDiscretization> {
    let d = path.dim;
    if c_inv.rows != d || c_inv.cols != d {
        return domain(format!("C_inv must be {d}x{d} in complex representation"));
    }
    let scale = c_inv.max_abs().max(1.0);
    if c_inv.hermiticity_defect() > 1e-12 * scale {
        return domain("C_inv is not Hermitian");
    }
    let mut ci = c_inv.clone();
    ci.hermitianize();
    let ev = ci.hermitian_eigenvalues();
    if ev.iter().any(|&e| e < -1e-12 * scale) {
        return domain(format!("C_inv is not positive semidefinite (eigenvalues {ev:?})"));
    }
    let ci_root = ci.hermitian_map(|v| v.max(0.0).sqrt());
    let bounds = cell_bounds(path.n_steps, n_cells)?;
    let h = path.x_max / path.n_steps as f64;
    let rf = path.r as f64;
    let a_nodes: Vec<CMat> = (0..=path.n_steps).map(|j| path.a_at(j)).collect();
    let a_inv: Vec<CMat> =
        a_nodes.iter().map(|a| a.inverse().ok_or_else(|| Error::Solver("singular A on the path".into()))).collect::<Result<_>>()?;
    let mut nodes = Vec::with_capacity(n_cells);
    let mut weights = Vec::with_capacity(n_cells);
    let mut mass = Vec::with_capacity(n_cells);
    let mut mass_factor = Vec::with_capacity(n_cells);
    let mut s_mid = Vec::with_capacity(n_cells);
    let mut inc_factor = Vec::with_capacity(n_cells);
    let mut prev_mid = 0;
    for (i, w) in bounds.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        let mid = (lo + hi) / 2;
        // mass = Σ c_j e^{−r x_j} A_j A_j^†: stack √(c_j e^{−r x_j}) A_j^†
        let m_stack: Vec<CMat> =
            trapezoid_weights(lo, hi, h).map(|(j, c)| a_nodes[j].adjoint().scale((c * (-rf * path.node_x(j)).exp()).sqrt())).collect();
        let mf = gram_factor(&m_stack);
        // increment = Σ c_j A_j^{−†} A_j^{−1}: stack √c_j A_j^{−1}
        let mut s_stack: Vec<CMat> =
            if mid > prev_mid { trapezoid_weights(prev_mid, mid, h).map(|(j, c)| a_inv[j].scale(c.sqrt())).collect() } else { Vec::new() };
        if i == 0 {
            s_stack.push(ci_root.clone());
        }
        prev_mid = mid;
        let kf = gram_factor(&s_stack);
        let mut mu = mf.mul_adj(&mf);
        mu.hermitianize();
        nodes.push(path.node_x(mid));
        weights.push(path.node_x(hi) - path.node_x(lo));
        mass.push(mu);
        mass_factor.push(mf);
        s_mid.push(path.s_cum_at(mid));
        inc_factor.push(kf);
    }
    let beta = path.field.beta();
    let ev_logical = if path.field == FieldTag::Quaternion { dedup_kramers(&ev, 1e-8)? } else { ev };
    Ok(OperatorDiscretization {
        nodes,
        weights,
        mass,
        mass_factor,
        s_mid,
        inc_factor,
        c_inv: ci,
        field: path.field,
        meta: DiscretizationMeta { beta, a: path.a, r: path.r, x_max: path.x_max, n_cells, c_inv_eigenvalues: ev_logical },
    })
}

impl OperatorDiscretization {
    fn block_dim(&self) -> usize {
        self.c_inv.rows
    }

    /// The dense Hermitian matrix `H` (N·dim square). Intended for small N.
    #[must_use]
    pub fn hermitian_matrix(&self) -> CMat {
        let n = self.mass.len();
        let d = self.block_dim();
        let roots: Vec<CMat> = self.mass.iter().map(|m| m.hermitian_map(|v| v.max(0.0).sqrt())).collect();
        let sizes = vec![d; n];
        let mut h = crate::linalg::cmat::assemble_blocks(&sizes, |i, j| {
            let k = self.s_mid[i.min(j)].add(&self.c_inv);
            Some(roots[i].mul(&k).mul(&roots[j]))
        });
        h.hermitianize();
        h
    }

    /// `GG^†` with `G^†G = H⁻¹`, as a factored scalar tridiagonal (dim 1):
    /// pivots `1/(d_i μ_i)`, products `1/(d_{i+1} μ_i)`.
    fn factored_scalar(&self) -> Result<FactoredTridiagonal> {
        let dk: Vec<f64> = self.inc_factor.iter().map(|b| b.data[0].norm_sqr()).collect();
        let mu: Vec<f64> = self.mass_factor.iter().map(|b| b.data[0].norm_sqr()).collect();
        if dk.iter().chain(&mu).any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Internal("discretized operator is numerically indefinite".into()));
        }
        let n = dk.len();
        let d: Vec<f64> = (0..n).map(|i| 1.0 / (dk[i] * mu[i])).collect();
        let dl2: Vec<f64> = (0..n - 1).map(|i| 1.0 / (dk[i + 1] * mu[i])).collect();
        FactoredTridiagonal::new(d, dl2)
    }

    /// Block version: with `d_i = K_i K_i^†` and `mass_i = F_i F_i^†`,
    /// pivots `(K_i⁻¹ F_i^{−†})(K_i⁻¹ F_i^{−†})^†` and multipliers
    /// `−K_{i+1}⁻¹ K_i`.
    fn factored_block(&self) -> Result<FactoredBlockTridiagonal> {
        let indefinite = || Error::Internal("discretized operator is numerically indefinite".into());
        let k_inv: Vec<CMat> = self.inc_factor.iter().map(|k| k.inverse().ok_or_else(indefinite)).collect::<Result<_>>()?;
        let mut dblocks = Vec::with_capacity(k_inv.len());
        for (i, f) in self.mass_factor.iter().enumerate() {
            let f_inv_adj = f.inverse().ok_or_else(indefinite)?.adjoint();
            let g = k_inv[i].mul(&f_inv_adj);
            let mut p = g.mul_adj(&g);
            p.hermitianize();
            dblocks.push(p);
        }
        let lblocks: Vec<CMat> = (0..k_inv.len() - 1).map(|i| k_inv[i + 1].mul(&self.inc_factor[i]).scale(-1.0)).collect();
        FactoredBlockTridiagonal::new(dblocks, lblocks)
    }

    /// Inverse eigenvalues via a dense Hermitian eigensolve of `H`; only
    /// reliable for mild grading, kept as a reference for small N.
    pub fn spectrum_dense(&self, k: usize) -> Result<SpectrumResult> {
        let ev = self.hermitian_matrix().hermitian_eigenvalues();
        let mut lambda: Vec<f64> = ev.iter().rev().map(|&e| 1.0 / e).collect();
        if self.field == FieldTag::Quaternion {
            lambda = dedup_kramers(&lambda, 1e-6)?;
        }
        lambda.truncate(k);
        Ok(SpectrumResult { lambda })
    }
}

/// The `k` smallest inverse eigenvalues `Λ_0 < … < Λ_{k−1}`.
pub fn spectrum(disc: &OperatorDiscretization, k: usize) -> Result<SpectrumResult> {
    let n = disc.mass.len();
    let logical = n * disc.meta.r;
    if k == 0 || k > logical {
        return domain(format!("k must lie in 1..={logical}, got {k}"));
    }
    let lambda = if disc.block_dim() == 1 {
        disc.factored_scalar()?.smallest(k, EIG_REL_TOL)?
    } else {
        let t = disc.factored_block()?;
        if disc.field == FieldTag::Quaternion {
            dedup_kramers(&t.smallest(2 * k, EIG_REL_TOL)?, 1e-8)?
        } else {
            t.smallest(k, EIG_REL_TOL)?
        }
    };
    if lambda.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::Internal(format!("non-finite or non-positive inverse eigenvalue in {lambda:?}")));
    }
    Ok(SpectrumResult { lambda })
}

/// Convenience: one sample of `Λ_0..Λ_{k−1}` for r = 1 at spike `c`.
pub fn sample_lambda_r1(beta: f64, a: f64, c: f64, x_max: f64, n_cells: usize, k: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let path = build_speed_scale(beta, a, x_max, n_cells, rng)?;
    Ok(spectrum(&discretize_g1(&path, c, n_cells)?, k)?.lambda)
}

/// Convenience: one sample of `Λ_0..Λ_{k−1}` for the r-spiked operator with
/// diagonal spike `C = diag(c)` (entries may be `+inf`). Returns `None` for
/// a flagged (ill-conditioned) path.
pub fn sample_lambda_rr(
    field: FieldTag,
    a: f64,
    c: &[f64],
    x_max: f64,
    step: f64,
    n_cells: usize,
    k: usize,
    rng: &mut RngStream,
) -> Result<Option<Vec<f64>>> {
    let r = c.len();
    let n_steps = ((x_max / step).ceil() as usize).div_ceil(n_cells) * n_cells;
    let path = simulate_a(r, field, a, x_max, n_steps, rng)?;
    if path.flagged {
        return Ok(None);
    }
    let e = path.dim() / r;
    let diag: Vec<f64> = c.iter().flat_map(|&ck| std::iter::repeat_n(if ck.is_infinite() { 0.0 } else { 1.0 / ck }, e)).collect();
    let disc = discretize_gr(&path, &CMat::from_real_diag(&diag), n_cells)?;
    Ok(Some(spectrum(&disc, k)?.lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::derive_stream;

    /// Zeros of J₀ from the integral representation
    /// `J₀(x) = (1/π)∫₀^π cos(x sin θ) dθ` and bisection.
    fn bessel_j0_zero(k: usize) -> f64 {
        let j0 = |x: f64| {
            let n = 400;
            let h = std::f64::consts::PI / n as f64;
            // trapezoid is spectrally accurate for this periodic integrand
            (0..n).map(|i| (x * (i as f64 * h).sin()).cos()).sum::<f64>() * h / std::f64::consts::PI
        };
        let mut found = 0;
        let mut x = 0.1;
        loop {
            let (lo, hi) = (x, x + 0.1);
            if j0(lo) * j0(hi) < 0.0 {
                found += 1;
                if found == k {
                    let (mut a, mut b) = (lo, hi);
                    for _ in 0..100 {
                        let m = 0.5 * (a + b);
                        if j0(a) * j0(m) <= 0.0 {
                            b = m;
                        } else {
                            a = m;
                        }
                    }
                    return 0.5 * (a + b);
                }
            }
            x = hi;
        }
    }

    fn deterministic_path(a: f64, x_max: f64, n_cells: usize, refine: usize) -> SpeedScalePath {
        SpeedScalePath::from_brownian(2.0, a, BrownianRecord::zero(x_max, n_cells * refine)).unwrap()
    }

    #[test]
    fn bessel_zero_oracle_values() {
        assert!((bessel_j0_zero(1) - 2.404_825_557_695_773).abs() < 1e-12);
        assert!((bessel_j0_zero(2) - 5.520_078_110_286_311).abs() < 1e-12);
    }

    #[test]
    fn bessel_case_lowest_two() {
        let path = deterministic_path(0.0, 40.0, DEFAULT_CELLS, 2);
        let disc = discretize_g1(&path, f64::INFINITY, DEFAULT_CELLS).unwrap();
        let l = spectrum(&disc, 2).unwrap().lambda;
        let want0 = (bessel_j0_zero(1) / 2.0).powi(2);
        let want1 = (bessel_j0_zero(2) / 2.0).powi(2);
        assert!((l[0] - want0).abs() < 1e-3, "{} vs {want0}", l[0]);
        assert!((l[1] - want1).abs() < 2e-3, "{} vs {want1}", l[1]);
    }

    #[test]
    fn deterministic_mass_integral() {
        for a in [0.0, 1.5, -0.5] {
            let path = deterministic_path(a, 10.0, 500, 4);
            let disc = discretize_g1(&path, 1.0, 500).unwrap();
            let total: f64 = disc.mass.iter().map(|m| m.data[0].re).sum();
            let want = (1.0 - (-(a + 1.0) * 10.0).exp()) / (a + 1.0);
            assert!((total - want).abs() < 1e-4 * want, "{total} vs {want}");
        }
    }

    #[test]
    fn product_identity_holds() {
        let path = build_speed_scale(1.3, 0.4, 40.0, 500, &mut derive_stream(1, 0)).unwrap();
        for ((&x, &m), &s) in path.grid().iter().zip(&path.m_density).zip(&path.s_density) {
            assert!((m * s / (-x).exp() - 1.0).abs() < 1e-14);
        }
        assert_eq!(path.s_cum[0], 0.0);
        assert!(path.s_cum.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn mean_speed_integral_matches_dufresne() {
        // β(a+1) > 2: E ∫m = β/(β(a+1) − 2)
        let (beta, a) = (2.0, 1.5);
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let p = build_speed_scale_refined(beta, a, 40.0, 2000, 2, &mut derive_stream(2, i)).unwrap();
                discretize_g1(&p, 1.0, 2000).unwrap().mass.iter().map(|m| m.data[0].re).sum::<f64>()
            })
            .collect();
        let (m, se) = crate::stats::mean_and_se(&xs);
        let want = beta / (beta * (a + 1.0) - 2.0);
        assert!((m - want).abs() < 3.0 * se, "{m} ± {se} vs {want}");
    }

    #[test]
    fn spike_is_rank_one_and_infinite_c_is_dirichlet() {
        let path = build_speed_scale(2.0, 0.0, 10.0, 60, &mut derive_stream(3, 0)).unwrap();
        let h_inf = discretize_g1(&path, f64::INFINITY, 60).unwrap().hermitian_matrix();
        let h_c = discretize_g1(&path, 0.7, 60).unwrap().hermitian_matrix();
        let diff = h_c.sub(&h_inf);
        let mut sv = diff.hermitian_eigenvalues();
        sv.iter_mut().for_each(|v| *v = v.abs());
        sv.sort_by(|a, b| b.total_cmp(a));
        assert!(sv[1] <= 1e-10 * sv[0]);
        assert!(h_inf.hermiticity_defect() <= 1e-12 * h_inf.max_abs());
    }

    #[test]
    fn factored_spectrum_matches_dense_on_mild_instance() {
        let path = build_speed_scale(2.0, 0.5, 6.0, 80, &mut derive_stream(4, 0)).unwrap();
        for c in [0.3, 2.0, f64::INFINITY] {
            let disc = discretize_g1(&path, c, 80).unwrap();
            let fast = spectrum(&disc, 3).unwrap().lambda;
            let dense = disc.spectrum_dense(3).unwrap().lambda;
            for (f, d) in fast.iter().zip(&dense) {
                assert!((f - d).abs() < 1e-8 * d, "{f} vs {d}");
            }
        }
    }

    #[test]
    fn spike_lowers_ground_state_on_coupled_noise() {
        for i in 0..50 {
            let path = build_speed_scale(2.0, 1.0, 40.0, 400, &mut derive_stream(5, i)).unwrap();
            let l = |c: f64| spectrum(&discretize_g1(&path, c, 400).unwrap(), 2).unwrap().lambda;
            let (a, b, c) = (l(0.5), l(1.0), l(f64::INFINITY));
            assert!(a[0] <= b[0] && b[0] <= c[0]);
            assert!(a[1] <= b[1] && b[1] <= c[1]);
            assert!(a[0] > 0.0 && a[0] < a[1]);
        }
    }

    #[test]
    fn matrix_path_starts_at_identity() {
        let p = simulate_a(2, FieldTag::Complex, 1.0, 1.0, 100, &mut derive_stream(6, 0)).unwrap();
        assert_eq!(p.a_at(0), CMat::identity(2));
        assert!(p.s_cum_at(0).max_abs() == 0.0);
        assert!(p.m_at(50).hermiticity_defect() < 1e-14);
    }

    #[test]
    fn scalar_sde_matches_closed_form() {
        // same noise: A_x ≈ exp(b(x)/√β − a x/2), strong error ≤ 5√h on [0,5]
        let (beta, a, h) = (2.0f64, 0.5, 1e-3f64);
        let n = (5.0 / h) as usize;
        let mut good = 0;
        let total = 200;
        for p in 0..total {
            let path = simulate_a(1, FieldTag::Complex, a, 5.0, n, &mut derive_stream(7, p)).unwrap();
            // replay the diagonal increments: for r = 1 the only draw per
            // step is the diagonal normal with variance h/β
            let mut rng = derive_stream(7, p);
            let mut b = 0.0;
            let mut worst: f64 = 0.0;
            for k in 1..=n {
                b += (h / beta).sqrt() * rng.normal();
                let exact = (b - 0.5 * a * k as f64 * h).exp();
                worst = worst.max((path.a_at(k).data[0].re - exact).abs());
            }
            if worst <= 5.0 * h.sqrt() {
                good += 1;
            }
        }
        assert!(good as f64 >= 0.95 * total as f64, "{good}/{total}");
    }

    #[test]
    fn second_moment_growth_rate() {
        // E[A A^†] at x=1 equals e^{r−1−a+2/β} I
        let (r, a, beta) = (2usize, 0.5, 2.0);
        let n = 10_000;
        let samples: Vec<CMat> = (0..n)
            .map(|i| {
                let p = simulate_a(r, FieldTag::Complex, a, 1.0, 1000, &mut derive_stream(8, i)).unwrap();
                let x = p.a_at(1000);
                x.mul_adj(&x)
            })
            .collect();
        let want = ((r as f64) - 1.0 - a + 2.0 / beta).exp();
        for (i, j) in [(0, 0), (1, 1)] {
            let v: Vec<f64> = samples.iter().map(|m| m[(i, j)].re).collect();
            let (m, se) = crate::stats::mean_and_se(&v);
            assert!((m - want).abs() < 3.0 * se, "({i},{j}) {m} ± {se} vs {want}");
        }
        let off: Vec<f64> = samples.iter().map(|m| m[(0, 1)].re).collect();
        let (m, se) = crate::stats::mean_and_se(&off);
        assert!(m.abs() < 3.0 * se);
    }

    #[test]
    fn lifted_scalar_path_agrees_with_scalar_discretization() {
        let path = build_speed_scale(2.0, 1.0, 40.0, 500, &mut derive_stream(9, 0)).unwrap();
        let lifted = MatrixSdePath::lift_scalar(&path);
        for c in [0.5, f64::INFINITY] {
            let s = spectrum(&discretize_g1(&path, c, 500).unwrap(), 3).unwrap().lambda;
            let ci = if c.is_infinite() { 0.0 } else { 1.0 / c };
            let m = spectrum(&discretize_gr(&lifted, &CMat::scalar(1, ci), 500).unwrap(), 3).unwrap().lambda;
            for (x, y) in s.iter().zip(&m) {
                assert!((x - y).abs() <= 1e-10 * x, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn block_discretization_matches_dense_on_small_instance() {
        for field in [FieldTag::Real, FieldTag::Complex, FieldTag::Quaternion] {
            let p = simulate_a(2, field, 1.0, 4.0, 4000, &mut derive_stream(10, 0)).unwrap();
            let e = p.dim() / 2;
            let ci = CMat::from_real_diag(&[vec![0.5; e], vec![1.0; e]].concat());
            let disc = discretize_gr(&p, &ci, 40).unwrap();
            let h = disc.hermitian_matrix();
            assert!(h.hermiticity_defect() <= 1e-12 * h.max_abs());
            let fast = spectrum(&disc, 3).unwrap().lambda;
            let dense = disc.spectrum_dense(3).unwrap().lambda;
            for (f, d) in fast.iter().zip(&dense) {
                assert!((f - d).abs() < 1e-7 * d, "{field:?}: {f} vs {d}");
            }
        }
    }

    #[test]
    fn richardson_consistency_on_fixed_path() {
        let p = simulate_a(2, FieldTag::Complex, 1.0, 20.0, 40_960, &mut derive_stream(11, 0)).unwrap();
        let ci = CMat::from_real_diag(&[0.5, 1.0]);
        let l0 = |n: usize| spectrum(&discretize_gr(&p, &ci, n).unwrap(), 1).unwrap().lambda[0];
        let (a, b, c) = (l0(128), l0(512), l0(1024));
        assert!((a - c).abs() >= (b - c).abs(), "{a} {b} {c}");
    }

    #[test]
    fn spike_matrix_monotonicity() {
        let p = simulate_a(2, FieldTag::Complex, 1.0, 30.0, 30_000, &mut derive_stream(12, 0)).unwrap();
        let l = |d: [f64; 2]| spectrum(&discretize_gr(&p, &CMat::from_real_diag(&d), 500).unwrap(), 2).unwrap().lambda;
        let (x, y, z) = (l([0.0, 0.0]), l([0.5, 0.0]), l([0.5, 1.0]));
        for k in 0..2 {
            assert!(z[k] <= y[k] && y[k] <= x[k]);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let path = build_speed_scale(2.0, 0.0, 5.0, 50, &mut derive_stream(13, 0)).unwrap();
        assert!(discretize_g1(&path, 0.0, 50).is_err());
        assert!(discretize_g1(&path, -1.0, 50).is_err());
        let p = simulate_a(2, FieldTag::Complex, 0.0, 1.0, 200, &mut derive_stream(13, 1)).unwrap();
        assert!(discretize_gr(&p, &CMat::from_real_diag(&[1.0, -1.0]), 10).is_err());
        assert!(simulate_a(2, FieldTag::GeneralBeta(3.0), 0.0, 1.0, 10, &mut derive_stream(0, 0)).is_err());
    }
}
