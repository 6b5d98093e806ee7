//! Finite differences for the rank-one hard-edge distribution functions
//! `F_k(μ, c) = P(Λ_k > e^{−μ})`, which solve
//! `∂_μ F + (2/β) c² ∂²_c F + ((a + 2/β) c − c² − e^{−μ}) ∂_c F = 0`.
//!
//! The equation is marched backward in μ from `F(μ_max, ·) = 1`. Space is a
//! uniform grid in a mapped coordinate `u` (`c = e^u` for `F_0`, `c = c_0
//! sinh u` on the whole line for `F_k`). Advection is exponentially fitted
//! (upwind where the cell Péclet number is large, central where it is
//! small), so every implicit step matrix is an M-matrix and the scheme is
//! monotone.

use crate::error::{domain, Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;
use std::io::{Read, Write};
use std::path::Path;

/// Time discretization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "implicit-euler" | "implicit" | "euler" => Ok(Self::ImplicitEuler),
            "crank-nicolson" | "cn" => Ok(Self::CrankNicolson),
            _ => domain(format!("unknown scheme {s:?} (expected implicit-euler or crank-nicolson)")),
        }
    }
}

/// Grid description shared by `F_0` and the chained `F_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeGrid {
    pub mu_min: f64,
    pub mu_max: f64,
    /// Number of μ steps; the grid has `n_mu + 1` levels.
    pub n_mu: usize,
    pub c_max: f64,
    /// Nodes of the logarithmic `F_0` grid on `[c_min, c_max]`; the extended
    /// `F_k` grid on `[−c_max, c_max]` has `2 n_c` nodes.
    pub n_c: usize,
    /// Smallest node of the `F_0` grid; the Dirichlet condition sits one
    /// step below it.
    pub c_min: f64,
    /// Width of the linear core of the symmetric-log grid.
    pub c_lin: f64,
    pub scheme: Scheme,
}

impl Default for PdeGrid {
    fn default() -> Self {
        Self { mu_min: -4.0, mu_max: 10.0, n_mu: 2000, c_max: 1e3, n_c: 400, c_min: 1e-8, c_lin: 1e-6, scheme: Scheme::ImplicitEuler }
    }
}

impl PdeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_max >= 8.0) || !(self.mu_min < self.mu_max) {
            return domain(format!("need mu_min < mu_max and mu_max >= 8, got [{}, {}]", self.mu_min, self.mu_max));
        }
        if self.n_mu < 2 || self.n_c < 8 {
            return domain("need n_mu >= 2 and n_c >= 8");
        }
        if !(self.c_min > 0.0 && self.c_min < self.c_max && self.c_lin > 0.0 && self.c_lin < self.c_max) {
            return domain("need 0 < c_min < c_max and 0 < c_lin < c_max");
        }
        Ok(())
    }

    #[must_use]
    pub fn mu_levels(&self) -> Vec<f64> {
        let h = (self.mu_max - self.mu_min) / self.n_mu as f64;
        (0..=self.n_mu).map(|j| self.mu_min + h * j as f64).collect()
    }

    fn log_map(&self) -> Mapping {
        Mapping::Log { u0: self.c_min.ln(), du: (self.c_max / self.c_min).ln() / (self.n_c - 1) as f64, n: self.n_c }
    }

    fn symlog_map(&self) -> Mapping {
        let n = 2 * self.n_c;
        let top = (self.c_max / self.c_lin).asinh();
        Mapping::SymLog { c0: self.c_lin, u0: -top, du: 2.0 * top / (n - 1) as f64, n }
    }
}

/// `c(u)` on a uniform u grid.
#[derive(Clone, Copy, Debug)]
enum Mapping {
    Log { u0: f64, du: f64, n: usize },
    SymLog { c0: f64, u0: f64, du: f64, n: usize },
}

impl Mapping {
    fn n(&self) -> usize {
        match *self {
            Mapping::Log { n, .. } | Mapping::SymLog { n, .. } => n,
        }
    }

    fn du(&self) -> f64 {
        match *self {
            Mapping::Log { du, .. } | Mapping::SymLog { du, .. } => du,
        }
    }

    fn u(&self, i: usize) -> f64 {
        match *self {
            Mapping::Log { u0, du, .. } | Mapping::SymLog { u0, du, .. } => u0 + du * i as f64,
        }
    }

    fn c(&self, i: usize) -> f64 {
        let u = self.u(i);
        match *self {
            Mapping::Log { .. } => u.exp(),
            Mapping::SymLog { c0, .. } => c0 * u.sinh(),
        }
    }

    /// Diffusion and drift of the equation in the u coordinate at node i.
    fn coefficients(&self, i: usize, beta: f64, a: f64, mu: f64) -> (f64, f64) {
        let k = 2.0 / beta;
        let c = self.c(i);
        let forcing = (-mu).exp();
        match *self {
            Mapping::Log { .. } => (k, a - c - forcing / c),
            Mapping::SymLog { c0, .. } => {
                let u = self.u(i);
                let (ch, th) = (u.cosh(), u.tanh());
                let b = (a + k) * c - c * c - forcing;
                (k * th * th, b / (c0 * ch) - k * th * th * th)
            }
        }
    }
}

/// Exponentially fitted diffusion `D (P/2) coth(P/2)`, `P = b du/D`.
fn fitted_diffusion(d: f64, b: f64, du: f64) -> f64 {
    let half = 0.5 * b.abs() * du;
    if d <= half * 1e-12 {
        return half;
    }
    let x = half / d;
    if x < 1e-4 {
        d * (1.0 + x * x / 3.0)
    } else {
        half / x.tanh()
    }
}

/// Rows `lower_i F_{i−1} − (lower_i + upper_i) F_i + upper_i F_{i+1}` of the
/// discrete generator at one μ level.
fn generator(map: &Mapping, beta: f64, a: f64, mu: f64) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let du = map.du();
    let n = map.n();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let (mut max_adv, mut max_diff): (f64, f64) = (0.0, 0.0);
    for i in 0..n {
        let (d, b) = map.coefficients(i, beta, a, mu);
        let de = fitted_diffusion(d, b, du);
        lower.push(de / (du * du) - 0.5 * b / du);
        upper.push(de / (du * du) + 0.5 * b / du);
        max_adv = max_adv.max(b.abs() / du);
        max_diff = max_diff.max(d / (du * du));
    }
    (lower, upper, max_adv, max_diff)
}

/// Solver diagnostics.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct PdeDiagnostics {
    /// Largest `‖A F − rhs‖_∞` over all implicit solves.
    pub max_residual: f64,
    /// Largest `Δμ |drift|/Δu` seen (advective Courant number).
    pub max_advective_courant: f64,
    /// Largest `Δμ D/Δu²` seen (diffusive number).
    pub max_diffusive_number: f64,
    /// Largest decrease of F along a c-column as μ increases.
    pub max_mu_decrease: f64,
    /// Largest decrease of F in c at fixed μ.
    pub max_c_decrease: f64,
    pub min_value: f64,
    pub max_value: f64,
}

/// `F_k` on the grid: `values[j][i]` at `(mu[j], c[i])`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PdeSolution {
    pub k: usize,
    pub beta: f64,
    pub a: f64,
    pub mu: Vec<f64>,
    pub c: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub diagnostics: PdeDiagnostics,
    #[serde(skip)]
    u: Vec<f64>,
    symlog_scale: Option<f64>,
}

/// Largest tolerated violation of `0 ≤ F ≤ 1`.
pub const BOUND_TOL: f64 = 1e-8;
/// Largest tolerated violation of monotonicity in μ and c.
pub const MONOTONE_TOL: f64 = 1e-6;

enum Left<'a> {
    /// Value 0 one step below the first node.
    GhostZero,
    /// Node 0 pinned to the given value at each μ level.
    Pinned(&'a [f64]),
}

fn march(map: Mapping, beta: f64, a: f64, grid: &PdeGrid, k: usize, left: Left<'_>) -> Result<PdeSolution> {
    let n = map.n();
    let mu = grid.mu_levels();
    let dmu = (grid.mu_max - grid.mu_min) / grid.n_mu as f64;
    let mut values = vec![vec![0.0; n]; grid.n_mu + 1];
    let mut cur = match left {
        // small-c law of F_0 at large μ: Q(β(a+1)/2, β e^{−μ}/(2c))
        Left::GhostZero => {
            let shape = 0.5 * beta * (a + 1.0);
            let s = 0.5 * beta * (-grid.mu_max).exp();
            (0..n).map(|i| gamma_ur(shape, s / map.c(i))).collect()
        }
        Left::Pinned(col) => {
            let mut v = vec![1.0; n];
            v[0] = col[grid.n_mu];
            v
        }
    };
    values[grid.n_mu].clone_from(&cur);
    let mut diag = PdeDiagnostics::default();
    let mut old_gen = generator(&map, beta, a, mu[grid.n_mu]);
    let (mut sub, mut main, mut sup, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for j in (0..grid.n_mu).rev() {
        let gen = generator(&map, beta, a, mu[j]);
        let (lo, up, adv, dif) = (&gen.0, &gen.1, gen.2, gen.3);
        diag.max_advective_courant = diag.max_advective_courant.max(dmu * adv);
        diag.max_diffusive_number = diag.max_diffusive_number.max(dmu * dif);
        // θ = 1/2 where the explicit half step keeps positive weights, else 1
        let theta: Vec<f64> = (0..n)
            .map(|i| {
                let stiff = dmu * (lo[i] + up[i]).max(old_gen.0[i] + old_gen.1[i]);
                if grid.scheme == Scheme::CrankNicolson && stiff <= 2.0 {
                    0.5
                } else {
                    1.0
                }
            })
            .collect();
        for i in 0..n {
            let (l, u) = (old_gen.0[i], old_gen.1[i]);
            let left_v = if i == 0 { ghost_left(&left, &cur) } else { cur[i - 1] };
            let right_v = if i + 1 == n { cur[n - 2] } else { cur[i + 1] };
            let lf = l * left_v - (l + u) * cur[i] + u * right_v;
            rhs[i] = cur[i] + (1.0 - theta[i]) * dmu * lf;
        }
        for i in 0..n {
            let (l, u) = (theta[i] * dmu * lo[i], theta[i] * dmu * up[i]);
            main[i] = 1.0 + l + u;
            sub[i] = -l;
            sup[i] = -u;
        }
        // zero flux: ghost F_n = F_{n−2}
        sub[n - 1] += sup[n - 1];
        sup[n - 1] = 0.0;
        match left {
            Left::GhostZero => sub[0] = 0.0,
            Left::Pinned(col) => {
                main[0] = 1.0;
                sup[0] = 0.0;
                sub[0] = 0.0;
                rhs[0] = col[j];
            }
        }
        let next = thomas(&sub, &main, &sup, &rhs)?;
        let mut res: f64 = 0.0;
        for i in 0..n {
            let mut v = main[i] * next[i] - rhs[i];
            if i > 0 {
                v += sub[i] * next[i - 1];
            }
            if i + 1 < n {
                v += sup[i] * next[i + 1];
            }
            res = res.max(v.abs());
        }
        diag.max_residual = diag.max_residual.max(res);
        cur = next;
        values[j].clone_from(&cur);
        old_gen = gen;
    }
    let c: Vec<f64> = (0..n).map(|i| map.c(i)).collect();
    let u: Vec<f64> = (0..n).map(|i| map.u(i)).collect();
    let symlog_scale = match map {
        Mapping::SymLog { c0, .. } => Some(c0),
        Mapping::Log { .. } => None,
    };
    let mut sol = PdeSolution { k, beta, a, mu, c, values, diagnostics: diag, u, symlog_scale };
    sol.check()?;
    Ok(sol)
}

fn ghost_left(left: &Left<'_>, cur: &[f64]) -> f64 {
    match left {
        Left::GhostZero => 0.0,
        Left::Pinned(_) => cur[0],
    }
}

fn thomas(sub: &[f64], main: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = main.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut m = main[0];
    if m == 0.0 {
        return Err(Error::Solver("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / m;
    d[0] = rhs[0] / m;
    for i in 1..n {
        m = main[i] - sub[i] * c[i - 1];
        if m == 0.0 {
            return Err(Error::Solver("zero pivot in tridiagonal solve".into()));
        }
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

impl PdeSolution {
    fn check(&mut self) -> Result<()> {
        let d = &mut self.diagnostics;
        d.min_value = f64::INFINITY;
        d.max_value = f64::NEG_INFINITY;
        for row in &self.values {
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::Solver("non-finite PDE value".into()));
                }
                d.min_value = d.min_value.min(v);
                d.max_value = d.max_value.max(v);
            }
            for w in row.windows(2) {
                d.max_c_decrease = d.max_c_decrease.max(w[0] - w[1]);
            }
        }
        for w in self.values.windows(2) {
            for (lo, hi) in w[0].iter().zip(&w[1]) {
                d.max_mu_decrease = d.max_mu_decrease.max(lo - hi);
            }
        }
        if d.min_value < -BOUND_TOL || d.max_value > 1.0 + BOUND_TOL {
            return Err(Error::Solver(format!("PDE solution left [0, 1]: {d:?}")));
        }
        if d.max_mu_decrease > MONOTONE_TOL {
            return Err(Error::Solver(format!("PDE solution not nondecreasing in mu: {d:?}")));
        }
        Ok(())
    }

    /// Column at `c_max`, the stand-in for `F_k(·, +∞)`.
    #[must_use]
    pub fn right_column(&self) -> Vec<f64> {
        self.values.iter().map(|r| *r.last().unwrap()).collect()
    }

    /// Column at grid node `i`.
    #[must_use]
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[i]).collect()
    }

    fn u_of(&self, c: f64) -> f64 {
        match self.symlog_scale {
            Some(c0) => (c / c0).asinh(),
            None => c.ln(),
        }
    }

    /// `F_k(μ, c)` by bilinear interpolation in `(μ, u)`. Values of c beyond
    /// the grid take the boundary column; `c ≤ 0` gives 0 for `F_0`.
    pub fn probe(&self, mu: f64, c: f64) -> Result<f64> {
        let (lo, hi) = (self.mu[0], *self.mu.last().unwrap());
        if !(mu >= lo && mu <= hi) {
            return domain(format!("mu = {mu} outside the solved range [{lo}, {hi}]"));
        }
        if c.is_nan() {
            return domain("c must not be NaN");
        }
        if self.symlog_scale.is_none() && c <= 0.0 {
            return Ok(0.0);
        }
        let h = (hi - lo) / (self.mu.len() - 1) as f64;
        let fj = ((mu - lo) / h).min((self.mu.len() - 1) as f64);
        let j = (fj.floor() as usize).min(self.mu.len() - 2);
        let tj = fj - j as f64;
        let n = self.c.len();
        let at_level = |row: &[f64]| -> f64 {
            if c >= self.c[n - 1] {
                return row[n - 1];
            }
            if c <= self.c[0] {
                return row[0];
            }
            let u = self.u_of(c);
            let du = self.u[1] - self.u[0];
            let fi = (u - self.u[0]) / du;
            let i = (fi.floor() as usize).min(n - 2);
            let ti = fi - i as f64;
            row[i] * (1.0 - ti) + row[i + 1] * ti
        };
        Ok(at_level(&self.values[j]) * (1.0 - tj) + at_level(&self.values[j + 1]) * tj)
    }

    /// `mu,c,F` rows with a one-line header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["mu", "c", "F"])?;
        for (j, row) in self.values.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                w.write_record([fmt(self.mu[j]), fmt(self.c[i]), fmt(*v)])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Compact little-endian dump: magic, k, n_mu, n_c, then μ, c and F
    /// (row-major by μ) as f64.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut out = Vec::with_capacity(32 + 8 * (self.mu.len() * (1 + self.c.len()) + self.c.len()));
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&(self.k as u64).to_le_bytes());
        out.extend_from_slice(&(self.mu.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.c.len() as u64).to_le_bytes());
        for v in self.mu.iter().chain(&self.c).chain(self.values.iter().flatten()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::File::create(path)?.write_all(&out)?;
        Ok(())
    }
}

const BINARY_MAGIC: &[u8; 8] = b"HEPDE\0v1";

/// Grid read back from [`PdeSolution::write_binary`].
#[derive(Clone, Debug, PartialEq)]
pub struct PdeDump {
    pub k: usize,
    pub mu: Vec<f64>,
    pub c: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

pub fn read_binary(path: &Path) -> Result<PdeDump> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() < 32 || &buf[..8] != BINARY_MAGIC {
        return domain("not a PDE grid dump");
    }
    let word = |i: usize| u64::from_le_bytes(buf[8 + 8 * i..16 + 8 * i].try_into().unwrap()) as usize;
    let (k, n_mu, n_c) = (word(0), word(1), word(2));
    let body = &buf[32..];
    if body.len() != 8 * (n_mu + n_c + n_mu * n_c) {
        return domain("truncated PDE grid dump");
    }
    let f: Vec<f64> = body.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    let mu = f[..n_mu].to_vec();
    let c = f[n_mu..n_mu + n_c].to_vec();
    let values = f[n_mu + n_c..].chunks(n_c).map(<[f64]>::to_vec).collect();
    Ok(PdeDump { k, mu, c, values })
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

fn check_params(beta: f64, a: f64) -> Result<()> {
    if !(beta > 0.0) {
        return domain(format!("beta must be positive, got {beta}"));
    }
    if !(a > -1.0) {
        return domain(format!("a must exceed -1, got {a}"));
    }
    Ok(())
}

/// `F_0` on the logarithmic grid with `F = 0` at `c → 0⁺` and zero flux at
/// `c_max`.
pub fn solve_f0(beta: f64, a: f64, grid: &PdeGrid) -> Result<PdeSolution> {
    check_params(beta, a)?;
    grid.validate()?;
    march(grid.log_map(), beta, a, grid, 0, Left::GhostZero)
}

/// `F_k` on the symmetric-log grid over `[−c_max, c_max]`, the left end
/// pinned to `F_{k−1}(·, c_max)`. Solves the whole chain `F_0, …, F_k`.
pub fn solve_fk(k: usize, beta: f64, a: f64, grid: &PdeGrid) -> Result<Vec<PdeSolution>> {
    let mut chain = vec![solve_f0(beta, a, grid)?];
    for j in 1..=k {
        chain.push(solve_next(&chain[j - 1], grid)?);
    }
    Ok(chain)
}

/// `F_k` from a solved `F_{k−1}` on the same μ grid.
pub fn solve_next(prev: &PdeSolution, grid: &PdeGrid) -> Result<PdeSolution> {
    grid.validate()?;
    if prev.mu != grid.mu_levels() {
        return domain("F_{k-1} was solved on a different mu grid");
    }
    let col = prev.right_column();
    march(grid.symlog_map(), prev.beta, prev.a, grid, prev.k + 1, Left::Pinned(&col))
}
