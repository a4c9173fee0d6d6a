//! Switchable parallel/sequential execution for the heavy loops.
//!
//! The pair sums in variance estimation and the replicate loops in the
//! randomization test and simulation harness are embarrassingly parallel.
//! They all funnel through [`ordered_map`], which materializes results in
//! index order before any reduction, so the parallel and sequential paths
//! produce byte-identical output and the choice is purely about speed.

#[cfg(feature = "parallel")]
use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the sequential path at runtime even when the `parallel` feature is
/// compiled in.
pub fn set_sequential(force: bool) {
    #[cfg(feature = "parallel")]
    FORCE_SEQUENTIAL.store(force, Ordering::Relaxed);
    #[cfg(not(feature = "parallel"))]
    let _ = force;
}

/// True when calls will run on the current thread only.
pub fn is_sequential() -> bool {
    #[cfg(feature = "parallel")]
    {
        FORCE_SEQUENTIAL.load(Ordering::Relaxed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        true
    }
}

/// Applies `f` to every index in `0..n` and returns the results in index
/// order.
pub fn ordered_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !is_sequential() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Sets the worker count: 1 forces sequential execution, larger values size
/// the global thread pool, 0 keeps the library default.
pub fn configure_threads(threads: usize) {
    match threads {
        0 => {}
        1 => set_sequential(true),
        _ => {
            set_sequential(false);
            #[cfg(feature = "parallel")]
            {
                // Ignore the error when a pool already exists; sizing is
                // best-effort after the first configuration.
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_map_preserves_index_order() {
        let out = ordered_map(100, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn sequential_toggle_round_trips() {
        set_sequential(true);
        assert!(is_sequential());
        let out = ordered_map(10, |i| i + 1);
        assert_eq!(out[9], 10);
        set_sequential(false);
    }
}
