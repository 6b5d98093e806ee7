//! β = 2 distribution functions as Fredholm determinants of double contour
//! integral kernels, discretized by the Nyström method.
//!
//! Every kernel here has the form
//! `K(x, y) = ∮∮ e^{−xz + yw} h(z, w) dz/(2πi) dw/(2πi)`, so on trapezoid
//! nodes it factors as `K = E_x G E_yᵀ` with `E_x[i, p] = e^{−x_i z_p}`,
//! `E_y[j, q] = e^{y_j w_q}` and `G[p, q] = h(z_p, w_q)` times the weights.
//! Building the m×m Nyström matrix is then two small matrix products.

use crate::error::{domain, Error, Result};
use crate::field::{dedup_kramers, write_entry, FieldTag};
use crate::linalg::cmat::{CMat, C64};
use crate::linalg::quadrature::gauss_legendre;
use crate::stochastic::{sample_unit_gaussian, RngStream};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Default number of trapezoid nodes per circle.
pub const DEFAULT_CONTOUR_NODES: usize = 256;
/// Default Gauss–Legendre node count; the determinant is also computed at a
/// quarter and a half of it as a convergence check.
pub const DEFAULT_GL_NODES: usize = 80;
/// Relative change across the node sequence above which a determinant is
/// flagged as unconverged.
pub const CONVERGENCE_TOL: f64 = 1e-6;
/// Smallest admissible distance from a pole to a contour.
pub const POLE_MARGIN: f64 = 1e-6;

/// Radius of the main z circle around the origin for the spiked kernels.
const MAIN_Z_RADIUS: f64 = 1.37;
/// Radius of the w circle around the origin for the spiked kernels.
const MAIN_W_RADIUS: f64 = 0.7;
/// Largest tolerated imaginary residue relative to the kernel scale.
const IMAG_LIMIT: f64 = 1e-8;

/// Counter-clockwise circle with equispaced trapezoid nodes, starting at
/// angle 0 so nodes are closed under conjugation for a real center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourQuadrature {
    pub center: f64,
    pub radius: f64,
    pub n_nodes: usize,
}

impl ContourQuadrature {
    pub fn new(center: f64, radius: f64, n_nodes: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || !center.is_finite() {
            return domain(format!("contour needs a finite center and positive radius, got ({center}, {radius})"));
        }
        if n_nodes < 8 {
            return domain(format!("contour needs at least 8 nodes, got {n_nodes}"));
        }
        Ok(Self { center, radius, n_nodes })
    }

    /// Nodes `z_p` and weights `dz/(2πi)` at each node.
    #[must_use]
    pub fn nodes(&self) -> (Vec<C64>, Vec<C64>) {
        let m = self.n_nodes as f64;
        (0..self.n_nodes)
            .map(|p| {
                let e = C64::from_polar(1.0, std::f64::consts::TAU * p as f64 / m);
                (C64::new(self.center, 0.0) + self.radius * e, self.radius * e / m)
            })
            .unzip()
    }

    fn encloses(&self, p: f64) -> bool {
        (p - self.center).abs() < self.radius - POLE_MARGIN
    }

    fn clear_of(&self, p: f64) -> bool {
        ((p - self.center).abs() - self.radius).abs() >= POLE_MARGIN
    }

    fn disjoint(&self, o: &Self) -> bool {
        (self.center - o.center).abs() > self.radius + o.radius + POLE_MARGIN
    }

    fn contains_circle(&self, o: &Self) -> bool {
        (self.center - o.center).abs() + o.radius < self.radius - POLE_MARGIN
    }
}

/// The z contours (a union of circles) and the w contours of a kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourPlan {
    pub z: Vec<ContourQuadrature>,
    pub w: Vec<ContourQuadrature>,
}

impl ContourPlan {
    /// Plan for the spiked kernels with poles `p_k = 1/c_k`: a z circle
    /// around the origin enclosing the w circle and every pole it can reach,
    /// plus one small z circle per cluster of far poles. Poles too close to
    /// the main circle push its radius out.
    pub fn spiked_auto(c: &[f64], n_nodes: usize) -> Result<Self> {
        Self::spiked_with(c, MAIN_Z_RADIUS, MAIN_W_RADIUS, n_nodes)
    }

    /// As [`ContourPlan::spiked_auto`] with explicit starting radii.
    pub fn spiked_with(c: &[f64], z_radius: f64, w_radius: f64, n_nodes: usize) -> Result<Self> {
        if !(w_radius < z_radius) {
            return domain(format!("w radius {w_radius} must be below z radius {z_radius}"));
        }
        let mut poles: Vec<f64> = c.iter().filter(|c| c.is_finite()).map(|&c| 1.0 / c).collect();
        poles.sort_by(f64::total_cmp);
        let mut r = z_radius;
        while let Some(&p) = poles.iter().find(|&&p| p > r / 1.2 && p < 1.2 * r) {
            r = 1.25 * p;
        }
        let mut z = vec![ContourQuadrature::new(0.0, r, n_nodes)?];
        let far: Vec<f64> = poles.into_iter().filter(|&p| p >= 1.2 * r).collect();
        let mut i = 0;
        while i < far.len() {
            let lo = far[i];
            let mut hi = lo;
            while i + 1 < far.len() && far[i + 1] < 1.2 * hi {
                i += 1;
                hi = far[i];
            }
            z.push(ContourQuadrature::new(0.5 * (lo + hi), 0.5 * (hi - lo) + 0.05 * lo, n_nodes)?);
            i += 1;
        }
        Ok(Self { z, w: vec![ContourQuadrature::new(0.0, w_radius, n_nodes)?] })
    }

    /// Plan for the Laguerre kernel: z around 1, w around 0, disjoint.
    pub fn laguerre_default(n_nodes: usize) -> Result<Self> {
        Ok(Self { z: vec![ContourQuadrature::new(1.0, 0.5, n_nodes)?], w: vec![ContourQuadrature::new(0.0, 0.4, n_nodes)?] })
    }

    fn flat_z(&self) -> (Vec<C64>, Vec<C64>) {
        flatten(&self.z)
    }

    fn flat_w(&self) -> (Vec<C64>, Vec<C64>) {
        flatten(&self.w)
    }

    /// Enclosure rules of the spiked kernels: one z circle encloses the
    /// origin and every w circle; each pole sits inside exactly one z circle;
    /// the other z circles avoid the w circles and each other.
    fn check_spiked(&self, poles: &[f64]) -> Result<()> {
        for w in &self.w {
            if !w.encloses(0.0) {
                return domain("every w contour must enclose the origin");
            }
        }
        let around: Vec<&ContourQuadrature> = self.z.iter().filter(|z| z.encloses(0.0)).collect();
        if around.len() != 1 {
            return domain("exactly one z contour must enclose the origin");
        }
        for w in &self.w {
            if !around[0].contains_circle(w) {
                return domain("the z contour around the origin must contain the w contours");
            }
        }
        for (i, a) in self.z.iter().enumerate() {
            for b in &self.z[i + 1..] {
                if !a.disjoint(b) {
                    return domain("z contours must be disjoint");
                }
            }
            if !a.encloses(0.0) && self.w.iter().any(|w| !a.disjoint(w)) {
                return domain("pole contours must avoid the w contours");
            }
        }
        for &p in poles {
            if self.z.iter().any(|z| !z.clear_of(p)) {
                return domain(format!("pole {p} lies within {POLE_MARGIN} of a contour"));
            }
            if self.z.iter().filter(|z| z.encloses(p)).count() != 1 {
                return domain(format!("pole {p} must be enclosed by exactly one z contour"));
            }
        }
        Ok(())
    }

    fn check_laguerre(&self) -> Result<()> {
        if self.z.iter().any(|z| z.encloses(0.0) || !z.clear_of(0.0)) || !self.z.iter().any(|z| z.encloses(1.0)) {
            return domain("the z contour must enclose 1 and not 0");
        }
        if self.w.iter().any(|w| !w.encloses(0.0) || w.encloses(1.0) || !w.clear_of(1.0)) {
            return domain("the w contour must enclose 0 and not 1");
        }
        if self.z.iter().any(|z| self.w.iter().any(|w| !z.disjoint(w))) {
            return domain("z and w contours must be disjoint");
        }
        Ok(())
    }
}

fn flatten(circles: &[ContourQuadrature]) -> (Vec<C64>, Vec<C64>) {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for c in circles {
        let (n, w) = c.nodes();
        nodes.extend(n);
        weights.extend(w);
    }
    (nodes, weights)
}

/// Parameters of the spiked kernels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikedKernelParams {
    pub a: u32,
    /// Spike parameters `c_k = lim n σ_k`; `+∞` means no spike.
    pub c: Vec<f64>,
}

impl SpikedKernelParams {
    pub fn new(a: u32, c: &[f64]) -> Result<Self> {
        if c.is_empty() {
            return domain("at least one spike parameter is required");
        }
        if c.iter().any(|&c| !(c > 0.0)) {
            return domain(format!("spike parameters must be positive, got {c:?}"));
        }
        Ok(Self { a, c: c.to_vec() })
    }

    #[must_use]
    pub fn r(&self) -> usize {
        self.c.len()
    }

    fn poles(&self) -> Vec<f64> {
        self.c.iter().filter(|c| c.is_finite()).map(|&c| 1.0 / c).collect()
    }
}

/// A kernel sampled on its contour nodes.
#[derive(Clone, Debug)]
pub struct ContourKernel {
    z: Vec<C64>,
    w: Vec<C64>,
    g: DMatrix<C64>,
}

impl ContourKernel {
    fn build(plan_z: (Vec<C64>, Vec<C64>), plan_w: (Vec<C64>, Vec<C64>), h: impl Fn(C64, C64) -> C64) -> Self {
        let (z, zw) = plan_z;
        let (w, ww) = plan_w;
        let g = DMatrix::from_fn(z.len(), w.len(), |p, q| zw[p] * ww[q] * h(z[p], w[q]));
        Self { z, w, g }
    }

    /// The limiting spiked kernel
    /// `e^{−xz + yw + 1/z − 1/w}/(w − z) · (z/w)^{r+a} · Π (1 − c_k w)/(1 − c_k z)`.
    pub fn limit(params: &SpikedKernelParams, plan: &ContourPlan) -> Result<Self> {
        plan.check_spiked(&params.poles())?;
        let power = (params.r() as i32) + params.a as i32;
        let c = params.c.clone();
        Ok(Self::build(plan.flat_z(), plan.flat_w(), move |z, w| {
            let mut v = (z.inv() - w.inv()).exp() / (w - z) * (z / w).powi(power);
            for &ck in &c {
                if ck.is_finite() {
                    v *= (1.0 - ck * w) / (1.0 - ck * z);
                }
            }
            v
        }))
    }

    /// The finite-n kernel in scaled variables, spikes `σ_k = c_k/n`:
    /// `e^{−xz + yw}/(w − z) · (z/w)^{r+a} · ((1 − 1/(nw))/(1 − 1/(nz)))^{n−r}
    /// · Π (1/c_k − w)/(1/c_k − z)`.
    pub fn finite_n(params: &SpikedKernelParams, n: usize, plan: &ContourPlan) -> Result<Self> {
        let r = params.r();
        if n < r {
            return domain(format!("n = {n} must be at least r = {r}"));
        }
        let mut poles = params.poles();
        poles.push(1.0 / n as f64);
        plan.check_spiked(&poles)?;
        let power = r as i32 + params.a as i32;
        let nf = n as f64;
        let e = (n - r) as f64;
        let inv_c: Vec<f64> = params.c.iter().map(|&c| 1.0 / c).collect();
        Ok(Self::build(plan.flat_z(), plan.flat_w(), move |z, w| {
            let lw = (1.0 - (nf * w).inv()).ln();
            let lz = (1.0 - (nf * z).inv()).ln();
            let mut v = (e * (lw - lz)).exp() / (w - z) * (z / w).powi(power);
            for &p in &inv_c {
                if p > 0.0 {
                    v *= (p - w) / (p - z);
                }
            }
            v
        }))
    }

    /// The Laguerre kernel `e^{−xz + yw}/(w − z) · (z/w)^{r+a} ·
    /// ((1 − w)/(1 − z))^r`, z around 1 and w around 0.
    pub fn laguerre(r: usize, a: u32, plan: &ContourPlan) -> Result<Self> {
        if r == 0 {
            return domain("r must be at least 1");
        }
        plan.check_laguerre()?;
        let power = r as i32 + a as i32;
        let ri = r as i32;
        Ok(Self::build(plan.flat_z(), plan.flat_w(), move |z, w| (z / w).powi(power) * ((1.0 - w) / (1.0 - z)).powi(ri) / (w - z)))
    }

    /// Complex value at one point; the imaginary part is quadrature residue.
    #[must_use]
    pub fn eval_complex(&self, x: f64, y: f64) -> C64 {
        let ex: Vec<C64> = self.z.iter().map(|&z| (-x * z).exp()).collect();
        let ey: Vec<C64> = self.w.iter().map(|&w| (y * w).exp()).collect();
        let mut acc = C64::new(0.0, 0.0);
        for (p, &e) in ex.iter().enumerate() {
            let row: C64 = self.g.row(p).iter().zip(&ey).map(|(g, f)| g * f).sum();
            acc += e * row;
        }
        acc
    }

    /// Real value at one point, after checking the imaginary residue.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let v = self.eval_complex(x, y);
        if v.im.abs() > IMAG_LIMIT * v.re.abs().max(1.0) {
            return Err(Error::Solver(format!("kernel imaginary residue {} at ({x}, {y})", v.im)));
        }
        Ok(v.re)
    }

    /// Complex kernel matrix `K[i, j] = K(x_i, y_j)`.
    #[must_use]
    pub fn matrix_complex(&self, x: &[f64], y: &[f64]) -> DMatrix<C64> {
        let ex = DMatrix::from_fn(x.len(), self.z.len(), |i, p| (-x[i] * self.z[p]).exp());
        let ey = DMatrix::from_fn(self.w.len(), y.len(), |q, j| (y[j] * self.w[q]).exp());
        ex * &self.g * ey
    }
}

/// Anything that can fill a Nyström matrix.
pub trait KernelMatrix: Sync {
    /// `K[i, j] = K(x_i, x_j)`.
    fn matrix(&self, x: &[f64]) -> Result<DMatrix<f64>>;
}

impl KernelMatrix for ContourKernel {
    fn matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let k = self.matrix_complex(x, x);
        let scale = k.iter().map(|v| v.re.abs()).fold(1.0, f64::max);
        let imag = k.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        if imag > IMAG_LIMIT * scale {
            return Err(Error::Solver(format!("kernel imaginary residue {imag} against scale {scale}")));
        }
        Ok(k.map(|v| v.re))
    }
}

/// A real kernel given pointwise.
pub struct FnKernel<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> KernelMatrix for FnKernel<F> {
    fn matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_fn(x.len(), x.len(), |i, j| (self.0)(x[i], x[j])))
    }
}

/// Value of `det(I − K)` on `[0, t]` with its convergence record.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FredholmDet {
    pub t: f64,
    pub det: f64,
    pub m: usize,
    /// `(m, det)` for each node count tried, ascending.
    pub m_sequence: Vec<(usize, f64)>,
    pub converged: bool,
    pub warning: Option<String>,
}

/// `det(I − A)` with `A_ij = √w_i K(x_i, x_j) √w_j` on the m-point
/// Gauss–Legendre rule on `[0, t]`.
pub fn nystrom_det(t: f64, kernel: &dyn KernelMatrix, m: usize) -> Result<f64> {
    let (x, w) = gauss_legendre(m, 0.0, t);
    let k = kernel.matrix(&x)?;
    let sw: Vec<f64> = w.iter().map(|w| w.sqrt()).collect();
    let a = DMatrix::from_fn(m, m, |i, j| f64::from(u8::from(i == j)) - sw[i] * k[(i, j)] * sw[j]);
    let det = a.full_piv_lu().determinant();
    if !det.is_finite() {
        return Err(Error::Solver(format!("non-finite determinant at t = {t}, m = {m}")));
    }
    Ok(det)
}

/// `det(I − K)` on `[0, t]` at `m` nodes, also evaluated at `m/4` and `m/2`
/// (when at least 10) to flag slow convergence.
pub fn fredholm_det(t: f64, kernel: &dyn KernelMatrix, m: usize) -> Result<FredholmDet> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("t must be positive and finite, got {t}"));
    }
    if m < 10 {
        return domain(format!("need at least 10 quadrature nodes, got {m}"));
    }
    let mut ms: Vec<usize> = [m / 4, m / 2].into_iter().filter(|&k| k >= 10).collect();
    ms.push(m);
    let m_sequence: Vec<(usize, f64)> = ms.iter().map(|&k| nystrom_det(t, kernel, k).map(|d| (k, d))).collect::<Result<_>>()?;
    let det = m_sequence.last().unwrap().1;
    let (converged, warning) = if m_sequence.len() < 2 {
        (false, Some("no coarser node count to compare against".to_string()))
    } else {
        let prev = m_sequence[m_sequence.len() - 2].1;
        let change = (det - prev).abs() / det.abs().max(f64::MIN_POSITIVE);
        if change <= CONVERGENCE_TOL {
            (true, None)
        } else {
            (false, Some(format!("relative change {change:.2e} between the last two node counts")))
        }
    };
    Ok(FredholmDet { t, det, m, m_sequence, converged, warning })
}

/// `P(Λ_0 > t)` for the limiting β = 2 spiked hard edge.
pub fn limit_det(t: f64, params: &SpikedKernelParams, m: usize) -> Result<FredholmDet> {
    if t == 0.0 {
        return Ok(trivial(m));
    }
    let kernel = ContourKernel::limit(params, &ContourPlan::spiked_auto(&params.c, DEFAULT_CONTOUR_NODES)?)?;
    fredholm_det(t, &kernel, m)
}

/// `P(n λ_min > t)` for the n×(n+a) complex ensemble with spikes
/// `σ_k = c_k/n`.
pub fn finite_n_det(t: f64, params: &SpikedKernelParams, n: usize, m: usize) -> Result<FredholmDet> {
    if t == 0.0 {
        return Ok(trivial(m));
    }
    let kernel = ContourKernel::finite_n(params, n, &ContourPlan::spiked_auto(&params.c, DEFAULT_CONTOUR_NODES)?)?;
    fredholm_det(t, &kernel, m)
}

/// `det(I − L)` on `[0, t]`: the law of the smallest eigenvalue of an
/// r×(r+a) complex Wishart matrix.
pub fn laguerre_det(t: f64, r: usize, a: u32) -> Result<FredholmDet> {
    if !(t >= 0.0) {
        return domain(format!("t must be non-negative, got {t}"));
    }
    if t == 0.0 {
        return Ok(trivial(DEFAULT_GL_NODES));
    }
    let kernel = ContourKernel::laguerre(r, a, &ContourPlan::laguerre_default(DEFAULT_CONTOUR_NODES)?)?;
    fredholm_det(t, &kernel, DEFAULT_GL_NODES)
}

fn trivial(m: usize) -> FredholmDet {
    FredholmDet { t: 0.0, det: 1.0, m, m_sequence: vec![(m, 1.0)], converged: true, warning: None }
}

/// Generalized Laguerre polynomial `L_k^a(x)` by the three-term recurrence.
#[must_use]
pub fn laguerre_poly(k: usize, a: f64, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 + a - x);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + a - x) * cur - (jf + a) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Orthogonal projection onto the first r Laguerre functions
/// `(k!/Γ(k+a+1))^{1/2} x^{a/2} e^{−x/2} L_k^a(x)`.
#[must_use]
pub fn laguerre_projection_kernel(x: f64, y: f64, r: usize, a: u32) -> f64 {
    let af = f64::from(a);
    let mut norm = 1.0 / statrs::function::gamma::gamma(af + 1.0);
    let mut s = 0.0;
    for k in 0..r {
        if k > 0 {
            norm *= k as f64 / (k as f64 + af);
        }
        s += norm * laguerre_poly(k, af, x) * laguerre_poly(k, af, y);
    }
    (x * y).powf(0.5 * af) * (-0.5 * (x + y)).exp() * s
}

/// The sum `e^{−x/2} e^{−y/2} Σ_{k<r} L_k^a(x) L_k^a(y)` without weight or
/// normalization.
#[must_use]
pub fn laguerre_plain_sum_kernel(x: f64, y: f64, r: usize, a: u32) -> f64 {
    let af = f64::from(a);
    let s: f64 = (0..r).map(|k| laguerre_poly(k, af, x) * laguerre_poly(k, af, y)).sum();
    (-0.5 * (x + y)).exp() * s
}

/// How the contour Laguerre kernel relates to the two sum forms.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LaguerreFormReport {
    pub r: usize,
    pub a: u32,
    pub t: f64,
    /// Largest `|L(x,y) − (y/x)^{a/2} e^{(y−x)/2} P(x,y)|` on the probe grid,
    /// `P` the orthogonal projection.
    pub conjugation_defect: f64,
    /// Largest diagonal difference between the contour kernel and the plain
    /// sum (unchanged by any conjugation).
    pub plain_sum_diagonal_gap: f64,
    pub det_contour: f64,
    pub det_projection: f64,
    pub det_plain_sum: f64,
}

/// Compare the contour kernel with the orthogonal projection and with the
/// plain sum on a probe grid in `(0, t]` and through their determinants.
pub fn compare_laguerre_forms(t: f64, r: usize, a: u32, m: usize) -> Result<LaguerreFormReport> {
    let kernel = ContourKernel::laguerre(r, a, &ContourPlan::laguerre_default(DEFAULT_CONTOUR_NODES)?)?;
    let probes: Vec<f64> = (1..=8).map(|i| t * i as f64 / 8.0).collect();
    let mut conjugation_defect: f64 = 0.0;
    let mut plain_sum_diagonal_gap: f64 = 0.0;
    let ha = 0.5 * f64::from(a);
    for &x in &probes {
        for &y in &probes {
            let l = kernel.eval(x, y)?;
            let p = laguerre_projection_kernel(x, y, r, a);
            conjugation_defect = conjugation_defect.max((l - (y / x).powf(ha) * (0.5 * (y - x)).exp() * p).abs());
        }
        let gap = (kernel.eval(x, x)? - laguerre_plain_sum_kernel(x, x, r, a)).abs();
        plain_sum_diagonal_gap = plain_sum_diagonal_gap.max(gap);
    }
    Ok(LaguerreFormReport {
        r,
        a,
        t,
        conjugation_defect,
        plain_sum_diagonal_gap,
        det_contour: nystrom_det(t, &kernel, m)?,
        det_projection: nystrom_det(t, &FnKernel(|x, y| laguerre_projection_kernel(x, y, r, a)), m)?,
        det_plain_sum: nystrom_det(t, &FnKernel(|x, y| laguerre_plain_sum_kernel(x, y, r, a)), m)?,
    })
}

/// `λ_min(Y Y^†)` for an r×(r+a) matrix `Y` of unit field Gaussians.
pub fn wishart_min_eig_sampler(r: usize, a: usize, field: FieldTag, rng: &mut RngStream) -> Result<f64> {
    Ok(wishart_matrix(r, a, field, rng)?.1)
}

/// `Y Y^†` in complex representation together with its smallest logical
/// eigenvalue.
pub fn wishart_matrix(r: usize, a: usize, field: FieldTag, rng: &mut RngStream) -> Result<(CMat, f64)> {
    if r == 0 {
        return domain("r must be at least 1");
    }
    if !field.is_field() {
        return domain("Wishart sampling needs beta in {1, 2, 4}");
    }
    let d = field.embed_dim();
    let cols = r + a;
    let mut y = CMat::zeros(r * d, cols * d);
    for i in 0..r {
        for j in 0..cols {
            write_entry(&mut y, field, i, j, sample_unit_gaussian(field, rng)?);
        }
    }
    let mut w = y.mul_adj(&y);
    w.hermitianize();
    let mut ev = w.hermitian_eigenvalues();
    if field == FieldTag::Quaternion {
        ev = dedup_kramers(&ev, 1e-8)?;
    }
    Ok((w, ev[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::par_map;
    use crate::stats::{ks_one_sample, EmpiricalDistribution, ReferenceLaw};

    fn limit_kernel(a: u32, c: &[f64]) -> ContourKernel {
        let p = SpikedKernelParams::new(a, c).unwrap();
        ContourKernel::limit(&p, &ContourPlan::spiked_auto(c, DEFAULT_CONTOUR_NODES).unwrap()).unwrap()
    }

    #[test]
    fn limit_kernel_is_real_on_probe_grid() {
        let k = limit_kernel(1, &[0.7, 2.0]);
        let x: Vec<f64> = (0..10).map(|i| 0.2 * i as f64).collect();
        let m = k.matrix_complex(&x, &x);
        let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(m.iter().all(|v| v.im.abs() <= 1e-10 * scale));
    }

    #[test]
    fn limit_kernel_contour_independent() {
        let p = SpikedKernelParams::new(0, &[1.0]).unwrap();
        let base = ContourKernel::limit(&p, &ContourPlan::spiked_with(&[1.0], 1.37, 0.7, 256).unwrap()).unwrap();
        for (rz, rw) in [(1.5, 0.7), (1.37, 0.6), (1.6, 0.8)] {
            let k = ContourKernel::limit(&p, &ContourPlan::spiked_with(&[1.0], rz, rw, 256).unwrap()).unwrap();
            for (x, y) in [(0.5, 0.5), (0.1, 1.3), (2.0, 0.3)] {
                let (u, v) = (base.eval(x, y).unwrap(), k.eval(x, y).unwrap());
                assert!((u - v).abs() <= 1e-9 * u.abs(), "{rz} {rw} ({x},{y}): {u} {v}");
            }
        }
    }

    #[test]
    fn node_refinement_converges() {
        let p = SpikedKernelParams::new(1, &[1.0]).unwrap();
        let k = |n| ContourKernel::limit(&p, &ContourPlan::spiked_auto(&[1.0], n).unwrap()).unwrap();
        let (a, b) = (k(128), k(256));
        for (x, y) in [(0.5, 0.5), (1.0, 0.2)] {
            let (u, v) = (a.eval(x, y).unwrap(), b.eval(x, y).unwrap());
            assert!((u - v).abs() <= 1e-10 * v.abs());
        }
    }

    #[test]
    fn bad_contours_rejected() {
        let p = SpikedKernelParams::new(0, &[1.0]).unwrap();
        // pole 1/c = 1 outside every z contour
        let plan =
            ContourPlan { z: vec![ContourQuadrature::new(0.0, 0.9, 64).unwrap()], w: vec![ContourQuadrature::new(0.0, 0.5, 64).unwrap()] };
        assert!(ContourKernel::limit(&p, &plan).is_err());
        // w contour not nested inside the z contour
        let plan =
            ContourPlan { z: vec![ContourQuadrature::new(0.0, 1.5, 64).unwrap()], w: vec![ContourQuadrature::new(0.0, 1.6, 64).unwrap()] };
        assert!(ContourKernel::limit(&p, &plan).is_err());
        let plan =
            ContourPlan { z: vec![ContourQuadrature::new(0.0, 1.0, 64).unwrap()], w: vec![ContourQuadrature::new(0.0, 0.5, 64).unwrap()] };
        assert!(ContourKernel::limit(&p, &plan).is_err());
    }

    #[test]
    fn auto_plan_separates_far_and_near_poles() {
        let plan = ContourPlan::spiked_auto(&[1e-3, 1.1e-3, 1e-2, 0.8, 1e4], 64).unwrap();
        plan.check_spiked(&[1e3, 1.0 / 1.1e-3, 1e2, 1.25, 1e-4]).unwrap();
        assert_eq!(plan.z.len(), 3);
    }

    #[test]
    fn a0_determinant_matches_closed_form() {
        // β = 2, a = 0: P(Λ_0 > t) = exp(−t(1 + 1/c))
        for c in [0.5, 1.0, 3.0, 1e4] {
            let p = SpikedKernelParams::new(0, &[c]).unwrap();
            for t in [0.25, 1.0, 2.0] {
                let d = limit_det(t, &p, 40).unwrap();
                let want = (-t * (1.0 + 1.0 / c)).exp();
                assert!((d.det - want).abs() <= 1e-9, "c={c} t={t}: {} vs {want}", d.det);
                assert!(d.converged);
            }
        }
    }

    #[test]
    fn determinant_near_zero_interval_is_one() {
        let p = SpikedKernelParams::new(1, &[1.0]).unwrap();
        let d = limit_det(1e-8, &p, 20).unwrap();
        assert!((d.det - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn determinant_monotone_in_t_and_c() {
        let at = |c: f64, t: f64| limit_det(t, &SpikedKernelParams::new(1, &[c]).unwrap(), 40).unwrap().det;
        let ts = [0.1, 0.3, 0.6, 1.0, 1.5, 2.5];
        for c in [0.5, 1.0, 2.0, 10.0] {
            for w in ts.windows(2) {
                assert!(at(c, w[1]) <= at(c, w[0]));
            }
        }
        for t in [0.5, 1.0] {
            let v: Vec<f64> = [0.5, 1.0, 2.0, 10.0].iter().map(|&c| at(c, t)).collect();
            assert!(v.windows(2).all(|w| w[0] <= w[1]), "{v:?}");
        }
    }

    #[test]
    fn finite_n_kernel_approaches_limit() {
        let p = SpikedKernelParams::new(0, &[1.0]).unwrap();
        let plan = ContourPlan::spiked_auto(&[1.0], 256).unwrap();
        let kn = ContourKernel::finite_n(&p, 400, &plan).unwrap().eval(0.5, 0.5).unwrap();
        let kl = ContourKernel::limit(&p, &plan).unwrap().eval(0.5, 0.5).unwrap();
        assert!((kn - kl).abs() <= 1e-2 * kl.abs(), "{kn} {kl}");
    }

    #[test]
    fn finite_n_a0_is_exponential() {
        // a = 0, σ = c/n: P(nλ_min > t) = exp(−t(1 − 1/n + 1/c)); at n = 1
        // this is σ|g|² with σ = c
        for n in [1usize, 3, 10, 50] {
            for c in [0.5, 4.0] {
                let d = finite_n_det(1.5, &SpikedKernelParams::new(0, &[c]).unwrap(), n, 40).unwrap();
                let want = (-1.5 * (1.0 - 1.0 / n as f64 + 1.0 / c)).exp();
                assert!((d.det - want).abs() <= 1e-10, "n={n} c={c}: {} vs {want}", d.det);
            }
        }
    }

    #[test]
    fn laguerre_matches_gamma_survival() {
        // r = 1: λ_min = |g|² summed over a+1 entries, Gamma(a+1, 1)
        for a in [0u32, 1, 3] {
            for t in [0.25f64, 1.0, 3.0] {
                let want: f64 =
                    (-t).exp() * (0..=a).map(|k| t.powi(k as i32) / statrs::function::factorial::factorial(u64::from(k))).sum::<f64>();
                let got = laguerre_det(t, 1, a).unwrap().det;
                assert!((got - want).abs() <= 1e-8, "a={a} t={t}: {got} vs {want}");
            }
        }
        assert_eq!(laguerre_det(0.0, 2, 1).unwrap().det, 1.0);
    }

    #[test]
    fn laguerre_contour_is_conjugated_projection() {
        let rep = compare_laguerre_forms(1.0, 3, 2, 40).unwrap();
        assert!(rep.conjugation_defect <= 1e-10, "{rep:?}");
        assert!((rep.det_contour - rep.det_projection).abs() <= 1e-10);
        // the plain sum misses the weight and normalization once a > 0
        assert!(rep.plain_sum_diagonal_gap > 0.1);
        assert!((rep.det_contour - rep.det_plain_sum).abs() > 1e-3);
        let rep0 = compare_laguerre_forms(1.0, 2, 0, 40).unwrap();
        assert!(rep0.plain_sum_diagonal_gap <= 1e-10);
    }

    #[test]
    fn laguerre_polynomials_known_values() {
        // L_2^a(x) = ((x − a − 2)² − a − 2)/2
        for (a, x) in [(0.0, 0.7), (1.5, 2.0)] {
            let want = ((x - a - 2.0) * (x - a - 2.0) - a - 2.0) / 2.0;
            assert!((laguerre_poly(2, a, x) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn wishart_rank_one_is_scaled_chi_square() {
        for field in [FieldTag::Real, FieldTag::Complex, FieldTag::Quaternion] {
            for a in [0usize, 2] {
                let xs = par_map(100_000, 3, |_, rng| wishart_min_eig_sampler(1, a, field, rng).unwrap());
                let beta = field.beta();
                let law = ReferenceLaw::ScaledChiSquare { nu: beta * (a as f64 + 1.0), scale: 1.0 / beta };
                let ks = ks_one_sample(&EmpiricalDistribution::new(xs).unwrap(), &law);
                assert!(ks <= 0.01, "{field:?} a={a}: {ks}");
            }
        }
    }

    #[test]
    fn wishart_min_below_mean_eigenvalue() {
        let mut rng = RngStream::new(4, 0);
        for field in [FieldTag::Real, FieldTag::Complex, FieldTag::Quaternion] {
            for _ in 0..50 {
                let (w, l) = wishart_matrix(3, 1, field, &mut rng).unwrap();
                let trace = w.trace().re / field.embed_dim() as f64;
                assert!(l > 0.0 && l <= trace / 3.0 + 1e-12);
            }
        }
    }

    #[test]
    fn laguerre_matches_wishart_monte_carlo() {
        let n = 100_000;
        let xs = par_map(n, 8, |_, rng| wishart_min_eig_sampler(2, 1, FieldTag::Complex, rng).unwrap());
        let emp = EmpiricalDistribution::new(xs).unwrap();
        for t in [0.25, 0.5] {
            let (p, se) = emp.survival_with_se(t);
            let d = laguerre_det(t, 2, 1).unwrap().det;
            assert!((p - d).abs() <= 3.0 * se, "t={t}: {p} ± {se} vs {d}");
        }
    }
}
