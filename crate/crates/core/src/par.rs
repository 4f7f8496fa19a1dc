//! Parallel reductions with a fixed chunk layout, so floating-point results
//! do not depend on thread scheduling.

use std::ops::Range;

use rayon::prelude::*;

const CHUNK: usize = 1 << 12;

/// `f` on consecutive index ranges of length `CHUNK`, results in order.
pub(crate) fn chunked<A: Send>(len: usize, f: impl Fn(Range<usize>) -> A + Sync + Send) -> Vec<A> {
    (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(len)))
        .collect()
}

/// Deterministic parallel sum of `f(i)` over `0..len`.
pub(crate) fn sum<A>(len: usize, f: impl Fn(usize) -> A + Sync + Send) -> A
where
    A: Send + std::iter::Sum<A>,
{
    chunked(len, |r| r.map(&f).sum::<A>()).into_iter().sum()
}

/// Deterministic parallel element-wise sum of per-index vectors of width
/// `width`, accumulated by `f(i, acc)`.
pub(crate) fn sum_vec(len: usize, width: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) -> Vec<f64> {
    let parts = chunked(len, |r| {
        let mut acc = vec![0.0; width];
        r.for_each(|i| f(i, &mut acc));
        acc
    });
    let mut out = vec![0.0; width];
    for p in parts {
        out.iter_mut().zip(p).for_each(|(o, x)| *o += x);
    }
    out
}
