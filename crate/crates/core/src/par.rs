//! Execution mode for the data-parallel loops of the crate.
//!
//! With the `parallel` feature (default) [`Parallelism::Parallel`] runs on
//! the rayon pool. Without it every loop runs sequentially. Output order
//! never depends on the mode.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// Whether this build can actually run loops in parallel.
    pub fn available() -> bool {
        cfg!(feature = "parallel")
    }

    /// `Parallel` when the feature is on, else `Sequential`.
    pub fn best() -> Self {
        if Self::available() {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }
}

/// Maps `f` over `items`, keeping input order.
pub fn map<T, R, F>(mode: Parallelism, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == Parallelism::Parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..n`, keeping index order.
pub fn map_range<R, F>(mode: Parallelism, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == Parallelism::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Fills `out[i] = f(i)` in chunks.
pub fn fill<R, F>(mode: Parallelism, out: &mut [R], f: F)
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    const CHUNK: usize = 4096;
    #[cfg(feature = "parallel")]
    if mode == Parallelism::Parallel && out.len() > CHUNK {
        use rayon::prelude::*;
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            for (k, slot) in chunk.iter_mut().enumerate() {
                *slot = f(c * CHUNK + k);
            }
        });
        return;
    }
    let _ = mode;
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let v: Vec<u64> = (0..1000).collect();
        let a = map(Parallelism::Sequential, &v, |x| x * x);
        let b = map(Parallelism::Parallel, &v, |x| x * x);
        assert_eq!(a, b);
        let mut s = vec![0usize; 10_000];
        let mut p = vec![0usize; 10_000];
        fill(Parallelism::Sequential, &mut s, |i| i ^ 7);
        fill(Parallelism::Parallel, &mut p, |i| i ^ 7);
        assert_eq!(s, p);
    }
}
