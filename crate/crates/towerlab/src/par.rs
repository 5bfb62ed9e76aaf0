//! Thin indirection over rayon so every hot loop has a sequential twin.
//!
//! With the `parallel` feature (default) `maybe_par_map` fans out on rayon;
//! order of results always matches the input order, so outputs are
//! identical to the sequential fallback. The `*_seq`/`*_par` pair is public
//! for the criterion benches.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Route every `maybe_par_map` through the sequential path. Outputs are
/// identical either way; the benches use this to time the fallback.
#[doc(hidden)]
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

pub fn map_seq<T: Sync, R: Send, F: Fn(&T) -> R + Sync>(items: &[T], f: F) -> Vec<R> {
    items.iter().map(&f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_par<T: Sync, R: Send, F: Fn(&T) -> R + Sync>(items: &[T], f: F) -> Vec<R> {
    items.par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_par<T: Sync, R: Send, F: Fn(&T) -> R + Sync>(items: &[T], f: F) -> Vec<R> {
    map_seq(items, f)
}

/// Order-preserving map used by the library; honours the feature flag and
/// only fans out when the workload is large enough to amortize.
pub fn maybe_par_map<T: Sync, R: Send, F: Fn(&T) -> R + Sync>(items: &[T], f: F) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        if items.len() >= 64 && !FORCE_SEQUENTIAL.load(Ordering::Relaxed) {
            return map_par(items, f);
        }
    }
    map_seq(items, f)
}

/// Cap the rayon worker count (CLI --jobs). No-op without `parallel`.
pub fn configure_jobs(jobs: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        // Ignore failure: the global pool can only be built once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
}
