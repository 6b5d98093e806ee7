//! Rank-one hard-edge and soft-edge engines.

use super::{EventRecord, HardDiffusionConfig, SoftDiffusionConfig, StopRule};
use crate::error::{domain, Result};
use crate::stochastic::RngStream;

/// Exact flow of `p' = s − p²` over a time `tau`, acting projectively:
/// `p ↦ (c p + s·sf)/(sf·p + c)` with `c = cosh(√s τ)`, `sf = sinh(√s τ)/√s`
/// (trigonometric for s < 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiccatiFlow {
    c: f64,
    sf: f64,
    s: f64,
}

impl RiccatiFlow {
    #[must_use]
    pub fn new(s: f64, tau: f64) -> Self {
        let z2 = s * tau * tau;
        let (c, sf) = if z2.abs() < 1e-6 {
            (1.0 + z2 / 2.0 + z2 * z2 / 24.0, tau * (1.0 + z2 / 6.0 + z2 * z2 / 120.0))
        } else if s > 0.0 {
            let w = s.sqrt();
            ((w * tau).cosh(), (w * tau).sinh() / w)
        } else {
            let w = (-s).sqrt();
            ((w * tau).cos(), (w * tau).sin() / w)
        };
        Self { c, sf, s }
    }

    /// New value and whether the path passed through ∞ (exploded to −∞ and
    /// came back from +∞). `+∞` is a valid input.
    #[must_use]
    pub fn apply(&self, p: f64) -> (f64, bool) {
        if p == f64::INFINITY {
            return (self.c / self.sf, false);
        }
        let den = self.sf * p + self.c;
        let num = self.c * p + self.s * self.sf;
        if den > 0.0 {
            (num / den, false)
        } else if den == 0.0 {
            (f64::INFINITY, true)
        } else {
            (num / den, true)
        }
    }
}

fn record_flow(q0: f64, q1: f64, passed: bool, x: f64, rec: &mut EventRecord) {
    if passed {
        if q0 > 0.0 {
            rec.zero_times.push(x);
        }
        rec.explosion_times.push(x);
        if q1 <= 0.0 {
            rec.zero_times.push(x);
        }
    } else if q0 > 0.0 && q1 <= 0.0 {
        rec.zero_times.push(x);
    }
}

/// Precomputed half-step flows of one hard-edge configuration, shared by all
/// paths.
pub(crate) struct HardPlan {
    x0: f64,
    h: f64,
    flows: Vec<RiccatiFlow>,
    drift: f64,
    noise: f64,
    check_every: usize,
}

impl HardPlan {
    pub(crate) fn new(cfg: &HardDiffusionConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.r != 1 {
            return domain("the scalar engine needs r = 1");
        }
        let span = cfg.horizon - cfg.start_time;
        let n = (span / cfg.base_step).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let mut flows = Vec::with_capacity(2 * n);
        for i in 0..n {
            let x = cfg.start_time + i as f64 * h;
            flows.push(RiccatiFlow::new(-(-(x + 0.25 * h)).exp(), 0.5 * h));
            flows.push(RiccatiFlow::new(-(-(x + 0.75 * h)).exp(), 0.5 * h));
        }
        let sigma = 2.0 / cfg.beta.sqrt();
        Ok(Self {
            x0: cfg.start_time,
            h,
            flows,
            drift: cfg.a * h,
            noise: sigma * h.sqrt(),
            check_every: ((0.05 / h).ceil() as usize).max(1),
        })
    }

    pub(crate) fn run(&self, cfg: &HardDiffusionConfig, stop: Option<StopRule>, rng: &mut RngStream) -> EventRecord {
        let mut rec = EventRecord::default();
        let mut q = cfg.start_values[0];
        if q <= 0.0 {
            rec.zero_times.push(self.x0);
        }
        let safe = cfg.safe_level();
        let n = self.flows.len() / 2;
        for i in 0..n {
            let x = self.x0 + i as f64 * self.h;
            let (q1, passed) = self.flows[2 * i].apply(q);
            record_flow(q, q1, passed, x + 0.25 * self.h, &mut rec);
            q = q1 * (self.noise * rng.normal() + self.drift).exp();
            let (q2, passed) = self.flows[2 * i + 1].apply(q);
            record_flow(q, q2, passed, x + 0.75 * self.h, &mut rec);
            q = q2;
            if StopRule::reached(stop, &rec) {
                rec.end_time = x + self.h;
                rec.final_values = vec![q];
                return rec;
            }
            if i % self.check_every == 0 && q > 0.0 && x + self.h + q.ln().min(0.0) >= safe {
                rec.end_time = x + self.h;
                rec.final_values = vec![q];
                return rec;
            }
        }
        let end = self.x0 + n as f64 * self.h;
        rec.censored = !(q > 0.0 && end + q.ln().min(0.0) >= safe);
        if rec.censored && q <= 0.0 {
            rec.pending_explosions = 1;
        }
        rec.end_time = end;
        rec.final_values = vec![q];
        rec
    }
}

/// Rank-one hard-edge path from `(start_time, c)` until the horizon or until
/// a further zero is practically impossible.
pub fn simulate_q1(cfg: &HardDiffusionConfig, rng: &mut RngStream) -> Result<EventRecord> {
    Ok(HardPlan::new(cfg)?.run(cfg, None, rng))
}

/// Precomputed flows for the rank-one soft-edge diffusion.
pub(crate) struct SoftPlan {
    x0: f64,
    h: f64,
    flows: Vec<RiccatiFlow>,
    noise: f64,
}

impl SoftPlan {
    pub(crate) fn new(cfg: &SoftDiffusionConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.r != 1 {
            return domain("the scalar engine needs r = 1");
        }
        let span = cfg.horizon - cfg.start_time;
        let n = (span / cfg.base_step).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let mut flows = Vec::with_capacity(2 * n);
        for i in 0..n {
            let x = cfg.start_time + i as f64 * h;
            flows.push(RiccatiFlow::new(x + 0.25 * h, 0.5 * h));
            flows.push(RiccatiFlow::new(x + 0.75 * h, 0.5 * h));
        }
        Ok(Self { x0: cfg.start_time, h, flows, noise: 2.0 / cfg.beta.sqrt() * h.sqrt() })
    }

    pub(crate) fn run(&self, cfg: &SoftDiffusionConfig, stop: Option<StopRule>, rng: &mut RngStream) -> EventRecord {
        let mut rec = EventRecord::default();
        let mut p = cfg.start_values[0];
        let n = self.flows.len() / 2;
        for i in 0..n {
            let x = self.x0 + i as f64 * self.h;
            let (p1, passed) = self.flows[2 * i].apply(p);
            if passed {
                rec.explosion_times.push(x + 0.25 * self.h);
            }
            p = p1 + self.noise * rng.normal();
            let (p2, passed) = self.flows[2 * i + 1].apply(p);
            if passed {
                rec.explosion_times.push(x + 0.75 * self.h);
            }
            p = p2;
            if StopRule::reached(stop, &rec) || cfg.is_settled(x + self.h, p) {
                rec.end_time = x + self.h;
                rec.final_values = vec![p];
                return rec;
            }
        }
        rec.end_time = self.x0 + n as f64 * self.h;
        rec.censored = !cfg.is_settled(rec.end_time, p);
        rec.final_values = vec![p];
        rec
    }
}

/// Rank-one soft-edge path `dp = (2/√β) db + (x − p²) dx`.
pub fn simulate_p1(cfg: &SoftDiffusionConfig, rng: &mut RngStream) -> Result<EventRecord> {
    Ok(SoftPlan::new(cfg)?.run(cfg, None, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::par_map;

    fn ode_reference(s: f64, p0: f64, tau: f64) -> f64 {
        let n = 200_000;
        let h = tau / n as f64;
        let f = |p: f64| s - p * p;
        let mut p = p0;
        for _ in 0..n {
            let k1 = f(p);
            let k2 = f(p + 0.5 * h * k1);
            let k3 = f(p + 0.5 * h * k2);
            let k4 = f(p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        p
    }

    #[test]
    fn flow_matches_runge_kutta() {
        for &(s, p0, tau) in &[(-2.0, 1.0, 0.3), (3.0, -0.5, 0.2), (0.0, 2.0, 0.4), (-1e-9, 0.7, 0.5)] {
            let (p, passed) = RiccatiFlow::new(s, tau).apply(p0);
            assert!(!passed);
            assert!((p - ode_reference(s, p0, tau)).abs() < 1e-9, "{s} {p0} {tau}");
        }
    }

    #[test]
    fn flow_passes_through_infinity() {
        // p' = −p² from −1: explodes at t = 1, comes back as 1/(t − 1).
        let (p, passed) = RiccatiFlow::new(0.0, 1.5).apply(-1.0);
        assert!(passed);
        assert!((p - 2.0).abs() < 1e-12);
        let (p, passed) = RiccatiFlow::new(0.0, 0.5).apply(f64::INFINITY);
        assert!(!passed);
        assert!((p - 2.0).abs() < 1e-12);
    }

    #[test]
    fn flow_is_a_semigroup() {
        let f = RiccatiFlow::new(-1.7, 0.1);
        let g = RiccatiFlow::new(-1.7, 0.2);
        let (a, _) = f.apply(f.apply(0.9).0);
        assert!((a - g.apply(0.9).0).abs() < 1e-13);
    }

    #[test]
    fn tiny_start_vanishes_immediately() {
        let cfg = HardDiffusionConfig::new(2.0, 1.0, 0.0, &[1e-9]).unwrap();
        let plan = HardPlan::new(&cfg).unwrap();
        let hits = par_map(2000, 3, |_, rng| plan.run(&cfg, None, rng).zero_times.first().copied());
        let quick = hits.iter().filter(|t| t.is_some_and(|t| t < 0.01)).count();
        assert!(quick as f64 >= 0.999 * hits.len() as f64);
    }

    #[test]
    fn one_zero_per_cycle() {
        let cfg = HardDiffusionConfig::new(1.0, 0.5, -3.0, &[2.0]).unwrap();
        let plan = HardPlan::new(&cfg).unwrap();
        for rec in par_map(300, 5, |_, rng| plan.run(&cfg, None, rng)) {
            // zeros and explosions alternate: z e z e … (zero first)
            let mut ev: Vec<(f64, u8)> = rec.zero_times.iter().map(|&t| (t, 0)).collect();
            ev.extend(rec.explosion_times.iter().map(|&t| (t, 1)));
            ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (i, e) in ev.iter().enumerate() {
                assert_eq!(e.1 as usize, i % 2, "{ev:?}");
            }
        }
    }

    #[test]
    fn start_at_or_below_zero_counts_as_vanished() {
        let cfg = HardDiffusionConfig::new(2.0, 1.0, 0.0, &[-1.0]).unwrap();
        let rec = simulate_q1(&cfg, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(rec.zero_times[0], 0.0);
    }

    #[test]
    fn large_mu_start_never_vanishes() {
        let cfg = HardDiffusionConfig::new(2.0, 1.0, 8.0, &[1.0]).unwrap();
        let plan = HardPlan::new(&cfg).unwrap();
        let recs = par_map(10_000, 7, |_, rng| plan.run(&cfg, Some(StopRule { mode: super::super::CountMode::Zeros, k: 0 }), rng));
        let ok = recs.iter().filter(|r| r.zero_hit_count() == 0).count();
        assert!(ok as f64 >= 0.99 * recs.len() as f64);
    }

    #[test]
    fn soft_start_far_left_from_infinity_rarely_explodes() {
        let cfg = SoftDiffusionConfig::new(2.0, 5.0, &[f64::INFINITY]).unwrap();
        let plan = SoftPlan::new(&cfg).unwrap();
        let recs = par_map(2000, 11, |_, rng| plan.run(&cfg, None, rng));
        let boom = recs.iter().filter(|r| r.explosion_count() > 0).count();
        assert!(boom <= 2, "{boom}");
    }
}
