//! Data-parallel helpers.
//!
//! With the `parallel` feature the loops run on the rayon pool; without it, or
//! after [`set_sequential`]`(true)`, they run on the calling thread. Reductions
//! always combine fixed-size chunks in index order, so results are identical
//! regardless of thread count.

use num_complex::Complex64;
use std::ops::Range;
use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Chunk length used by the reductions.
pub const CHUNK: usize = 4096;

/// Forces the sequential code path even when `parallel` is compiled in.
pub fn set_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::Relaxed)
}

/// `(0..n).map(f).collect()`, in parallel when enabled.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// `items.iter().map(f).collect()`, in parallel when enabled.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}

/// `items.iter_mut().for_each(f)`, in parallel when enabled.
pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            items.par_iter_mut().for_each(f);
            return;
        }
    }
    items.iter_mut().for_each(f)
}

/// Evaluates `f` on consecutive ranges of length [`CHUNK`] covering `0..n` and
/// returns the partial results in range order.
pub fn map_chunks<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<usize>) -> R + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    map_range(chunks, |c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
}

/// Deterministic complex sum of `f(i)` over `0..n`.
pub fn sum_complex<F>(n: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync + Send,
{
    map_chunks(n, |r| r.map(&f).fold(Complex64::new(0.0, 0.0), |a, b| a + b))
        .into_iter()
        .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
}

/// Deterministic real sum of `f(i)` over `0..n`.
pub fn sum_real<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_chunks(n, |r| r.map(&f).sum::<f64>()).into_iter().sum()
}
