//! Data-parallel helpers with a sequential fallback.
//!
//! The hot loops (stencil sweeps, per-frame ECG sums, per-sample batch
//! gradients) are expressed as index maps so results are bitwise identical
//! whether they run on one thread or many: every reduction that follows a
//! `map_indexed` call happens in index order on the caller's thread.
//! Building without the `parallel` feature removes the rayon dependency
//! entirely and compiles the sequential fallback.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether this build carries the rayon-backed parallel paths.
pub const fn is_parallel_build() -> bool {
    cfg!(feature = "parallel")
}

/// Configure the global worker pool. `jobs == 1` forces sequential execution.
///
/// Calling this more than once, or after the pool has been used, is a no-op.
/// Without the `parallel` feature the function does nothing.
pub fn configure_jobs(jobs: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential counterpart of [`map_indexed`], always single-threaded.
/// Kept unconditionally so benchmarks can compare both paths in one binary.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Fill `out` by evaluating `f` at every index.
#[cfg(feature = "parallel")]
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    out.par_iter_mut().enumerate().for_each(|(i, slot)| {
        *slot = f(i);
    });
}

/// Fill `out` by evaluating `f` at every index.
#[cfg(not(feature = "parallel"))]
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

/// Sequential counterpart of [`fill_indexed`].
pub fn fill_indexed_seq<T, F>(out: &mut [T], f: F)
where
    F: Fn(usize) -> T,
{
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let f = |i: usize| (i as f64).sin() * 1e3 + (i as f64).sqrt();
        let a = map_indexed(1000, f);
        let b = map_indexed_seq(1000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn fill_matches_map() {
        let f = |i: usize| i * 7 + 3;
        let mut out = vec![0usize; 257];
        fill_indexed(&mut out, f);
        assert_eq!(out, map_indexed(257, f));
    }
}
