//! Rank-r particle systems: hard-edge `q` and soft-edge `p`.
//!
//! Explicit step with the geometric factor of the hard-edge noise taken
//! exactly. The step shrinks with the particle size, the forcing and the
//! gaps; a step that breaks the ordering is redone as two halves with a
//! Brownian bridge midpoint.

use super::{EventRecord, HardDiffusionConfig, SoftDiffusionConfig, StopRule, STEP_FLOOR};
use crate::error::Result;
use crate::stochastic::RngStream;

#[derive(Clone, Copy)]
enum Kind {
    /// Linear rate `a + r − 1` of the exact geometric factor.
    Hard {
        lin: f64,
    },
    Soft,
}

struct System {
    kind: Kind,
    r: usize,
    sigma: f64,
    base: f64,
    q_max: f64,
}

impl System {
    fn forcing(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Hard { .. } => (-(self.r as f64) * x).exp(),
            Kind::Soft => self.r as f64 * x,
        }
    }

    /// Drift not covered by the exact factor.
    fn nonlinear(&self, x: f64, q: &[f64], out: &mut [f64]) {
        let f = self.forcing(x);
        for i in 0..q.len() {
            let qi = q[i];
            let mut inter = 0.0;
            for (j, &qj) in q.iter().enumerate() {
                if j != i {
                    inter += match self.kind {
                        Kind::Hard { .. } => qj / (qi - qj),
                        Kind::Soft => 1.0 / (qi - qj),
                    };
                }
            }
            out[i] = match self.kind {
                Kind::Hard { .. } => -qi * qi - f + 2.0 * qi * inter,
                Kind::Soft => f - qi * qi + 2.0 * inter,
            };
        }
    }

    fn noise_scale(&self, q: f64) -> f64 {
        match self.kind {
            Kind::Hard { .. } => self.sigma * q.abs(),
            Kind::Soft => self.sigma,
        }
    }

    fn choose_step(&self, x: f64, q: &[f64], nl: &[f64]) -> f64 {
        let mut dt = self.base;
        let qmax = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if qmax > 0.0 {
            dt = dt.min(0.1 / qmax);
        }
        let f = self.forcing(x).abs();
        if f > 0.0 {
            dt = dt.min(0.1 / f.sqrt());
        }
        for i in 0..q.len().saturating_sub(1) {
            let g = q[i] - q[i + 1];
            let s = self.noise_scale(q[i]).max(self.noise_scale(q[i + 1]));
            if s > 0.0 {
                dt = dt.min(g * g / (16.0 * s * s));
            }
            let d = (nl[i] - nl[i + 1]).abs();
            if d > 0.0 {
                dt = dt.min(0.25 * g / d);
            }
        }
        dt
    }

    fn advance(&self, q: &[f64], nl: &[f64], dt: f64, dw: &[f64], out: &mut [f64]) -> bool {
        for i in 0..q.len() {
            out[i] = match self.kind {
                Kind::Hard { lin } => q[i] * (self.sigma * dw[i] + lin * dt).exp() + dt * nl[i],
                Kind::Soft => q[i] + self.sigma * dw[i] + dt * nl[i],
            };
        }
        out.iter().all(|v| v.is_finite()) && out.windows(2).all(|w| w[0] > w[1])
    }

    /// Advance by `dt` with increments `dw`, splitting on ordering failures.
    /// Returns false when the step would fall below the floor.
    fn step(&self, x: f64, q: &mut Vec<f64>, dt: f64, dw: &[f64], rng: &mut RngStream) -> bool {
        let mut nl = vec![0.0; q.len()];
        self.nonlinear(x, q, &mut nl);
        let mut out = vec![0.0; q.len()];
        if self.advance(q, &nl, dt, dw, &mut out) {
            *q = out;
            return true;
        }
        let half = 0.5 * dt;
        if half < STEP_FLOOR {
            return false;
        }
        let first: Vec<f64> = dw.iter().map(|&w| 0.5 * w + 0.5 * dt.sqrt() * rng.normal()).collect();
        let second: Vec<f64> = dw.iter().zip(&first).map(|(w, f)| w - f).collect();
        self.step(x, q, half, &first, rng) && self.step(x + half, q, half, &second, rng)
    }
}

struct Run<'a> {
    sys: System,
    start: f64,
    horizon: f64,
    init: Vec<f64>,
    stop: Option<StopRule>,
    settled: &'a dyn Fn(f64, &[f64]) -> bool,
    count_zeros: bool,
}

impl Run<'_> {
    fn go(&self, rng: &mut RngStream) -> EventRecord {
        let mut rec = EventRecord::default();
        let mut q = self.init.clone();
        let mut x = self.start;
        if self.count_zeros {
            for _ in q.iter().filter(|&&v| v <= 0.0) {
                rec.zero_times.push(x);
            }
        }
        let mut nl = vec![0.0; q.len()];
        let mut dw = vec![0.0; q.len()];
        while x < self.horizon {
            if StopRule::reached(self.stop, &rec) || (self.settled)(x, &q) {
                rec.end_time = x;
                rec.final_values = q;
                return rec;
            }
            self.sys.nonlinear(x, &q, &mut nl);
            let dt = self.sys.choose_step(x, &q, &nl).min(self.horizon - x);
            if !(dt >= STEP_FLOOR) {
                rec.excluded = true;
                break;
            }
            let sq = dt.sqrt();
            for w in &mut dw {
                *w = sq * rng.normal();
            }
            let before: Vec<bool> = q.iter().map(|&v| v > 0.0).collect();
            if !self.sys.step(x, &mut q, dt, &dw, rng) {
                rec.excluded = true;
                break;
            }
            x += dt;
            if self.count_zeros {
                for (b, &v) in before.iter().zip(&q) {
                    if *b && v <= 0.0 {
                        rec.zero_times.push(x);
                    }
                }
            }
            let last = q.len() - 1;
            if q[last] < -self.sys.q_max {
                rec.explosion_times.push(x);
                let top = self.sys.q_max.max(2.0 * q[0]);
                q.rotate_right(1);
                q[0] = top;
            }
        }
        rec.end_time = x;
        if !rec.excluded {
            rec.censored = !(StopRule::reached(self.stop, &rec) || (self.settled)(x, &q));
            if rec.censored && self.count_zeros {
                rec.pending_explosions = q.iter().filter(|&&v| v <= 0.0).count();
            }
        }
        rec.final_values = q;
        rec
    }
}

pub(crate) fn run_hard(cfg: &HardDiffusionConfig, stop: Option<StopRule>, rng: &mut RngStream) -> Result<EventRecord> {
    cfg.validate()?;
    let safe = cfg.safe_level();
    let r = cfg.r as f64;
    let settled = move |x: f64, q: &[f64]| {
        let low = q[q.len() - 1];
        low > 0.0 && r * x + low.ln().min(0.0) >= safe
    };
    let run = Run {
        sys: System {
            kind: Kind::Hard { lin: cfg.a + r - 1.0 },
            r: cfg.r,
            sigma: 2.0 / cfg.beta.sqrt(),
            base: cfg.base_step,
            q_max: cfg.q_max,
        },
        start: cfg.start_time,
        horizon: cfg.horizon,
        init: cfg.finite_start(),
        stop,
        settled: &settled,
        count_zeros: true,
    };
    Ok(run.go(rng))
}

pub(crate) fn run_soft(cfg: &SoftDiffusionConfig, stop: Option<StopRule>, rng: &mut RngStream) -> Result<EventRecord> {
    cfg.validate()?;
    let settled = |x: f64, q: &[f64]| cfg.is_settled(x, q[q.len() - 1]);
    let run = Run {
        sys: System { kind: Kind::Soft, r: cfg.r, sigma: 2.0 / cfg.beta.sqrt(), base: cfg.base_step, q_max: cfg.q_max },
        start: cfg.start_time,
        horizon: cfg.horizon,
        init: cfg.finite_start(),
        stop,
        settled: &settled,
        count_zeros: false,
    };
    Ok(run.go(rng))
}

/// Rank-r hard-edge path (r = 1 allowed) with zero and explosion records.
pub fn simulate_q_vector(cfg: &HardDiffusionConfig, rng: &mut RngStream) -> Result<EventRecord> {
    run_hard(cfg, None, rng)
}

/// Rank-r hard-edge path run to exactly `x_end` (no early stopping), for
/// fixed-time marginals; `final_values` holds the state at `x_end`.
pub fn simulate_q_vector_until(cfg: &HardDiffusionConfig, x_end: f64, rng: &mut RngStream) -> Result<EventRecord> {
    let mut c = cfg.clone();
    c.horizon = x_end;
    c.validate()?;
    let never = |_: f64, _: &[f64]| false;
    let r = cfg.r as f64;
    let run = Run {
        sys: System {
            kind: Kind::Hard { lin: cfg.a + r - 1.0 },
            r: cfg.r,
            sigma: 2.0 / cfg.beta.sqrt(),
            base: cfg.base_step,
            q_max: cfg.q_max,
        },
        start: c.start_time,
        horizon: x_end,
        init: c.finite_start(),
        stop: None,
        settled: &never,
        count_zeros: true,
    };
    Ok(run.go(rng))
}

/// Soft-edge path; rank one uses the exact-flow engine.
pub fn simulate_p(cfg: &SoftDiffusionConfig, rng: &mut RngStream) -> Result<EventRecord> {
    if cfg.r == 1 {
        super::simulate_p1(cfg, rng)
    } else {
        run_soft(cfg, None, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::super::scalar::HardPlan;
    use super::*;
    use crate::mc::par_map;
    use crate::stats::{ks_two_sample, EmpiricalDistribution};

    #[test]
    fn rank_one_reduces_to_scalar_engine() {
        let cfg = HardDiffusionConfig::new(2.0, 0.5, -1.0, &[1.0]).unwrap();
        let plan = HardPlan::new(&cfg).unwrap();
        let first = |r: &EventRecord| r.zero_times.first().copied().unwrap_or(f64::INFINITY);
        let n = 20_000;
        let a: Vec<f64> = par_map(n, 21, |_, rng| first(&plan.run(&cfg, None, rng)));
        let b: Vec<f64> = par_map(n, 22, |_, rng| first(&run_hard(&cfg, None, rng).unwrap()));
        let ks = ks_two_sample(&EmpiricalDistribution::new(a).unwrap(), &EmpiricalDistribution::new(b).unwrap());
        assert!(ks <= 0.02, "{ks}");
    }

    #[test]
    fn particles_never_cross() {
        let cfg = HardDiffusionConfig::new(2.0, 1.0, -2.0, &[2.0, 1.0, 0.5]).unwrap().with_horizon(3.0);
        let sys = System { kind: Kind::Hard { lin: cfg.a + 2.0 }, r: 3, sigma: 2f64.sqrt(), base: 1e-3, q_max: 1e6 };
        for seed in 0..50 {
            let mut rng = RngStream::new(seed, 0);
            let mut q = cfg.finite_start();
            let mut x = cfg.start_time;
            let mut nl = vec![0.0; 3];
            while x < 1.0 {
                sys.nonlinear(x, &q, &mut nl);
                let dt = sys.choose_step(x, &q, &nl);
                let dw: Vec<f64> = (0..3).map(|_| dt.sqrt() * rng.normal()).collect();
                assert!(sys.step(x, &mut q, dt, &dw, &mut rng));
                assert!(q.windows(2).all(|w| w[0] > w[1]));
                x += dt;
                if q[2] < -1e6 {
                    break;
                }
            }
        }
    }

    #[test]
    fn restart_relabels_cyclically() {
        // strong forcing from a low start makes the bottom particle explode
        let cfg = HardDiffusionConfig::new(2.0, 1.0, -6.0, &[3.0, -2.0]).unwrap().with_horizon(-2.5);
        let mut seen = false;
        for seed in 0..20 {
            let rec = run_hard(&cfg, None, &mut RngStream::new(seed, 1)).unwrap();
            assert!(!rec.excluded);
            if rec.explosion_count() > 0 {
                seen = true;
            }
            assert!(rec.final_values.windows(2).all(|w| w[0] > w[1]));
        }
        assert!(seen);
    }

    #[test]
    fn infinite_starts_settle() {
        let cfg = HardDiffusionConfig::new(2.0, 1.0, 16.0, &[f64::INFINITY, f64::INFINITY]).unwrap();
        let recs = par_map(200, 4, |_, rng| run_hard(&cfg, None, rng).unwrap());
        assert!(recs.iter().all(|r| !r.excluded));
        let clean = recs.iter().filter(|r| r.zero_hit_count() == 0).count();
        assert!(clean >= 198, "{clean}");
    }

    fn run_for(sys: &System, x0: f64, q0: &[f64], t: f64, rng: &mut RngStream) -> Vec<f64> {
        let mut q = q0.to_vec();
        let mut x = x0;
        let mut nl = vec![0.0; q.len()];
        while x < x0 + t {
            sys.nonlinear(x, &q, &mut nl);
            let dt = sys.choose_step(x, &q, &nl).min(x0 + t - x);
            let dw: Vec<f64> = (0..q.len()).map(|_| dt.sqrt() * rng.normal()).collect();
            assert!(sys.step(x, &mut q, dt, &dw, rng));
            x += dt;
        }
        q
    }

    #[test]
    fn wide_gap_soft_top_particle_decouples() {
        let sys = System { kind: Kind::Soft, r: 2, sigma: 2f64.sqrt(), base: 1e-3, q_max: 1e6 };
        let n = 20_000;
        let pair: Vec<f64> = par_map(n, 8, |_, rng| run_for(&sys, 0.5, &[1.0, -30.0], 0.01, rng)[0]);
        let single: Vec<f64> = par_map(n, 9, |_, rng| run_for(&sys, 0.5, &[1.0], 0.01, rng)[0]);
        let ks = ks_two_sample(&EmpiricalDistribution::new(pair).unwrap(), &EmpiricalDistribution::new(single).unwrap());
        assert!(ks <= 0.03, "{ks}");
    }
}
