//! Thread budget shared by the embarrassingly parallel kernels (grid
//! sampling, finite-difference probes). Controlled by `LOSSSCAPE_THREADS`;
//! `0` or `1` forces sequential execution, unset uses all available cores.

use rayon::prelude::*;

pub const THREADS_ENV: &str = "LOSSSCAPE_THREADS";

/// Number of worker threads the numeric kernels may use.
pub fn thread_limit() -> usize {
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(0) | Err(_) => 1,
            Ok(n) => n,
        },
        Err(_) => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    }
}

/// Maps `f` over `0..n`, in parallel when the thread budget allows.
///
/// `f` must be a pure function of its index: results are written into a
/// pre-sized output slot per index, so the schedule cannot affect the result.
pub fn indexed_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let threads = thread_limit();
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.min(n))
        .build();
    match pool {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
        // Pool creation can fail under restrictive environments; the
        // sequential path computes the identical result.
        Err(_) => (0..n).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexed_map_matches_sequential() {
        let par = indexed_map(100, |i| i * i);
        let seq: Vec<usize> = (0..100).map(|i| i * i).collect();
        assert_eq!(par, seq);
    }
}
