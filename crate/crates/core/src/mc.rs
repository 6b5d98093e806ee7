//! Deterministic parallel Monte Carlo plumbing.
//!
//! Task `i` always receives `derive_stream(seed, i)` and results come back in
//! task order, so outputs do not depend on the number of workers.

use crate::stochastic::{derive_stream, RngStream};
use rayon::prelude::*;

/// Run `f` for tasks `0..n` in parallel on the current pool.
pub fn par_map<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut RngStream) -> T + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_stream(seed, i as u64);
            f(i, &mut rng)
        })
        .collect()
}

/// Run `f` inside a dedicated pool of `workers` threads (or the global pool
/// when `None`).
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build().expect("thread pool").install(f),
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_independent_of_worker_count() {
        let run = |w| with_workers(Some(w), || par_map(257, 9, |i, rng| (i, rng.normal())));
        assert_eq!(run(1), run(4));
    }
}
