//! Matrix Riccati equation for `Q_x` whose eigenvalues follow the rank-r
//! hard-edge diffusion:
//! `dQ = dB Q + Q dB^† + (tr(Q) I − Q/β + (1/β − 1) diag(Q) + ψ(Q)) dx`,
//! `ψ(Q) = (a + 2/β) Q − Q² − λ e^{−r x} I`.

use crate::error::{domain, Error, Result};
use crate::field::{dedup_kramers, FieldTag};
use crate::linalg::cmat::{mul_into, CMat};
use crate::stochastic::{fill_matrix_bm_increment, RngStream};
use serde::{Deserialize, Serialize};

/// Parameters of one matrix Riccati run started from `Q_0 = C` at x = 0.
#[derive(Clone, Debug)]
pub struct MatrixRiccatiConfig {
    pub field: FieldTag,
    pub a: f64,
    pub r: usize,
    /// Hermitian start matrix in complex representation.
    pub c: CMat,
    pub lambda: f64,
    pub horizon: f64,
    pub step: f64,
    /// Times (in increasing order, within the horizon) at which the
    /// eigenvalues are recorded.
    pub record_times: Vec<f64>,
    pub q_max: f64,
}

/// Recorded eigenvalues (descending, one per logical eigenvalue) and
/// diagnostics of one path.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixRiccatiPath {
    pub times: Vec<f64>,
    pub eigenvalues: Vec<Vec<f64>>,
    pub explosions: usize,
    /// Largest `|Q − Q^†|/max|Q|` seen before each symmetrization.
    pub max_antihermitian: f64,
}

/// Euler–Maruyama for `Q_x` with Hermitian symmetrization after every step.
/// The step shrinks as `0.1/max|Q|` near blow-up; an eigenvalue below
/// `−q_max` is restarted at `+q_max` in its eigenvector direction.
pub fn simulate_matrix_riccati(cfg: &MatrixRiccatiConfig, rng: &mut RngStream) -> Result<MatrixRiccatiPath> {
    if !cfg.field.is_field() {
        return domain("the matrix Riccati equation needs beta in {1, 2, 4}");
    }
    let beta = cfg.field.beta();
    let d = cfg.field.embed_dim();
    let n = cfg.r * d;
    if cfg.r == 0 || cfg.c.rows != n || cfg.c.cols != n {
        return domain(format!("C must be {n}x{n} in complex representation"));
    }
    if cfg.c.hermiticity_defect() > 1e-12 * cfg.c.max_abs().max(1.0) {
        return domain("C must be Hermitian");
    }
    if !(cfg.a > -1.0) || !(cfg.step > 0.0) || !(cfg.horizon > 0.0) {
        return domain("need a > -1, positive step and horizon");
    }
    if cfg.record_times.windows(2).any(|w| w[0] > w[1]) || cfg.record_times.iter().any(|&t| t < 0.0 || t > cfg.horizon) {
        return domain("record times must be increasing and inside [0, horizon]");
    }
    let mut q = cfg.c.clone();
    q.hermitianize();
    let mut db = CMat::zeros(n, n);
    let mut t1 = CMat::zeros(n, n);
    let mut t2 = CMat::zeros(n, n);
    let mut q2 = CMat::zeros(n, n);
    let mut path = MatrixRiccatiPath { times: Vec::new(), eigenvalues: Vec::new(), explosions: 0, max_antihermitian: 0.0 };
    let mut x = 0.0;
    let mut next = 0;
    let lin = cfg.a + 2.0 / beta - 1.0 / beta;
    let rf = cfg.r as f64;
    loop {
        while next < cfg.record_times.len() && cfg.record_times[next] <= x + 1e-12 {
            path.times.push(x);
            path.eigenvalues.push(logical_eigenvalues(&q, cfg.field)?);
            next += 1;
        }
        if x >= cfg.horizon - 1e-12 {
            break;
        }
        let scale = q.max_abs();
        let mut dt = cfg.step.min(cfg.horizon - x);
        if scale > 0.0 {
            dt = dt.min(0.1 / scale);
        }
        if next < cfg.record_times.len() {
            dt = dt.min(cfg.record_times[next] - x).max(1e-15);
        }
        if dt < 1e-12 {
            return Err(Error::Solver("matrix Riccati step underflow".into()));
        }
        fill_matrix_bm_increment(&mut db, cfg.r, cfg.field, beta, dt, rng);
        mul_into(&db, &q, &mut t1);
        mul_into(&q, &db.adjoint(), &mut t2);
        mul_into(&q, &q, &mut q2);
        let trace = q.trace().re / d as f64;
        let forcing = cfg.lambda * (-rf * (x + 0.0)).exp();
        let mut next_q = q.clone();
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                let mut drift = lin * q.data[k] - q2.data[k];
                if i == j {
                    drift += trace - forcing + (1.0 / beta - 1.0) * q.data[k].re;
                }
                next_q.data[k] += t1.data[k] + t2.data[k] + drift * dt;
            }
        }
        let m = next_q.max_abs().max(1.0);
        path.max_antihermitian = path.max_antihermitian.max(next_q.hermiticity_defect() / m);
        next_q.hermitianize();
        q = next_q;
        x += dt;
        if !q.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Solver("matrix Riccati path diverged".into()));
        }
        if q.max_abs() > 0.25 * cfg.q_max {
            let (ev, vecs) = q.hermitian_eigen();
            if ev[0] < -cfg.q_max {
                let top = cfg.q_max.max(2.0 * ev[n - 1]);
                let mut exploded = 0;
                let lifted: Vec<f64> = ev
                    .iter()
                    .map(|&e| {
                        if e < -cfg.q_max {
                            exploded += 1;
                            top
                        } else {
                            e
                        }
                    })
                    .collect();
                path.explosions += exploded / d;
                let diag = CMat::from_real_diag(&lifted);
                q = vecs.mul(&diag).mul(&vecs.adjoint());
                q.hermitianize();
            }
        }
    }
    Ok(path)
}

fn logical_eigenvalues(q: &CMat, field: FieldTag) -> Result<Vec<f64>> {
    let mut ev = q.hermitian_eigenvalues();
    if field == FieldTag::Quaternion {
        ev = dedup_kramers(&ev, 1e-8)?;
    }
    ev.reverse();
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::super::{simulate_q_vector_until, HardDiffusionConfig};
    use super::*;
    use crate::mc::par_map;
    use crate::stats::{ks_two_sample, EmpiricalDistribution};

    fn cfg(field: FieldTag, r: usize, c: &[f64], t: f64, step: f64) -> MatrixRiccatiConfig {
        let d = field.embed_dim();
        let diag: Vec<f64> = c.iter().flat_map(|&v| std::iter::repeat_n(v, d)).collect();
        MatrixRiccatiConfig {
            field,
            a: 1.0,
            r,
            c: CMat::from_real_diag(&diag),
            lambda: 1.0,
            horizon: t,
            step,
            record_times: vec![t],
            q_max: 1e6,
        }
    }

    #[test]
    fn stays_hermitian_for_every_field() {
        for field in [FieldTag::Real, FieldTag::Complex, FieldTag::Quaternion] {
            let c = cfg(field, 2, &[2.0, 1.0], 0.2, 1e-4);
            let p = simulate_matrix_riccati(&c, &mut RngStream::new(3, 0)).unwrap();
            assert!(p.max_antihermitian <= 1e-10, "{field:?} {}", p.max_antihermitian);
            assert_eq!(p.eigenvalues[0].len(), 2);
        }
    }

    #[test]
    fn rank_one_matches_scalar_law() {
        let n = 10_000;
        let c = cfg(FieldTag::Complex, 1, &[1.5], 0.5, 1e-4);
        let m: Vec<f64> = par_map(n, 1, |_, rng| simulate_matrix_riccati(&c, rng).unwrap().eigenvalues[0][0]);
        let h = HardDiffusionConfig::new(2.0, 1.0, 0.0, &[1.5]).unwrap().with_step(1e-4).with_horizon(0.5);
        let v: Vec<f64> = par_map(n, 2, |_, rng| simulate_q_vector_until(&h, 0.5, rng).unwrap().final_values[0]);
        let ks = ks_two_sample(&EmpiricalDistribution::new(m).unwrap(), &EmpiricalDistribution::new(v).unwrap());
        assert!(ks <= 0.03, "{ks}");
    }
}
