//! Reproducible random primitives: seeded streams, χ variables, field-valued
//! Gaussians, Brownian paths and matrix Brownian increments.
//!
//! Every task in a parallel Monte Carlo run owns a stream derived from
//! `(root_seed, task_index)`, so results never depend on how tasks are
//! scheduled.

use crate::error::{domain, Result};
use crate::field::{write_entry, FieldElement, FieldMatrix, FieldTag};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

/// A deterministic random stream identified by `(root_seed, stream_index)`.
///
/// Backed by ChaCha8: the root seed fixes the key and the stream index
/// selects one of 2⁶⁴ independent keystreams.
#[derive(Clone, Debug)]
pub struct RngStream {
    root_seed: u64,
    stream_index: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    #[must_use]
    pub fn new(root_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(root_seed);
        inner.set_stream(stream_index);
        Self { root_seed, stream_index, inner }
    }

    #[must_use]
    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    #[must_use]
    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.gen::<f64>()
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest);
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Stream for task `task_index` under `root_seed`.
#[must_use]
pub fn derive_stream(root_seed: u64, task_index: u64) -> RngStream {
    RngStream::new(root_seed, task_index)
}

/// Derive an independent root seed for a named sub-experiment, so that
/// different experiments sharing one user seed do not reuse streams.
#[must_use]
pub fn sub_seed(root_seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(root_seed ^ splitmix64(h))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// χ variable with `dof` degrees of freedom, via `√(2·Gamma(dof/2, 1))`.
/// Non-integer `dof` is allowed.
pub fn sample_chi(dof: f64, rng: &mut RngStream) -> Result<f64> {
    if !(dof > 0.0) || !dof.is_finite() {
        return domain(format!("chi degrees of freedom must be positive, got {dof}"));
    }
    let g = Gamma::new(0.5 * dof, 1.0).expect("validated shape");
    Ok((2.0 * g.sample(rng)).sqrt())
}

/// Unit field-valued Gaussian: E|g|² = 1 with isotropic components.
pub fn sample_unit_gaussian(field: FieldTag, rng: &mut RngStream) -> Result<FieldElement> {
    let d = field.real_dim()?;
    let sd = (1.0 / d as f64).sqrt();
    let mut c = [0.0; 4];
    for x in c.iter_mut().take(d) {
        *x = sd * rng.normal();
    }
    Ok(FieldElement(c))
}

/// A Brownian path sampled on a grid starting at 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BrownianRecord {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl BrownianRecord {
    /// The path identically zero on a uniform grid, for deterministic tests.
    #[must_use]
    pub fn zero(horizon: f64, n_steps: usize) -> Self {
        let grid = uniform_grid(horizon, n_steps);
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    /// Build a record from a grid and increments (`values[0] = 0`).
    #[must_use]
    pub fn from_increments(grid: Vec<f64>, increments: &[f64]) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        values.push(0.0);
        let mut acc = 0.0;
        for &d in increments {
            acc += d;
            values.push(acc);
        }
        Self { grid, values }
    }

    #[must_use]
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

#[must_use]
pub fn uniform_grid(horizon: f64, n_steps: usize) -> Vec<f64> {
    let h = horizon / n_steps as f64;
    (0..=n_steps).map(|i| if i == n_steps { horizon } else { i as f64 * h }).collect()
}

/// Standard Brownian motion on a uniform grid of `n_steps` cells over
/// `[0, horizon]`.
pub fn sample_brownian(horizon: f64, n_steps: usize, rng: &mut RngStream) -> Result<BrownianRecord> {
    if n_steps == 0 {
        return domain("sample_brownian needs at least one step");
    }
    if !(horizon > 0.0) {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    let sd = (horizon / n_steps as f64).sqrt();
    let inc: Vec<f64> = (0..n_steps).map(|_| sd * rng.normal()).collect();
    Ok(BrownianRecord::from_increments(uniform_grid(horizon, n_steps), &inc))
}

/// Increment of the r×r matrix Brownian motion over a step `dt`: real
/// diagonal entries N(0, dt/β), field-valued off-diagonal entries with
/// E|·|² = dt, all independent.
pub fn sample_matrix_bm_increment(r: usize, field: FieldTag, dt: f64, rng: &mut RngStream) -> Result<FieldMatrix> {
    if r == 0 {
        return domain("matrix size must be at least 1");
    }
    let beta = field.beta();
    field.real_dim()?;
    let mut m = FieldMatrix::zeros(field, r);
    fill_matrix_bm_increment(&mut m.mat, r, field, beta, dt, rng);
    Ok(m)
}

/// In-place variant of [`sample_matrix_bm_increment`] on a complex
/// representation buffer; the caller guarantees `field` is a true field.
pub(crate) fn fill_matrix_bm_increment(
    out: &mut crate::linalg::cmat::CMat,
    r: usize,
    field: FieldTag,
    beta: f64,
    dt: f64,
    rng: &mut RngStream,
) {
    let sd_diag = (dt / beta).sqrt();
    let sqdt = dt.sqrt();
    for i in 0..r {
        for j in 0..r {
            let q = if i == j {
                FieldElement::real(sd_diag * rng.normal())
            } else {
                sample_unit_gaussian(field, rng).expect("field checked").scale(sqdt)
            };
            write_entry(out, field, i, j, q);
        }
    }
}
