//! Data-parallel fan-out with a sequential fallback.
//!
//! Independent work units (seeded runs, sampled SC checks, random test
//! systems) go through [`map_batch`]. With the `parallel` feature (default)
//! the batch runs on rayon; without it, or when [`force_sequential`] is in
//! effect, it runs as a plain in-order map. Units are seeded independently,
//! so the output is bitwise identical either way — only wall time differs.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Globally force the sequential path even when the `parallel` feature is
/// compiled in. Used by `--deterministic` runs and by the bench suite's
/// sequential twin.
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

pub fn is_sequential_forced() -> bool {
    FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Map `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_batch<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    if is_sequential_forced() {
        items.into_iter().map(f).collect()
    } else {
        items.into_par_iter().map(f).collect()
    }
}

/// Map `f` over `items`, preserving order (sequential build).
#[cfg(not(feature = "parallel"))]
pub fn map_batch<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}

/// Explicit sequential map with the same signature, for benchmarks that
/// compare the two paths in one process.
pub fn map_sequential<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}

/// Install a rayon thread pool with `n` workers (no-op without the feature
/// or if a pool already exists). Driven by `SCONCORD_THREADS` in the CLI.
#[cfg(feature = "parallel")]
pub fn configure_threads(n: usize) {
    if n == 0 {
        return;
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_n: usize) {}
