//! Data-parallel helpers. Results are always collected in index order so the
//! parallel and sequential builds produce bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f(i)` for `i in 0..n` and returns the results in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Sums fixed-size arrays returned by `f(i)` componentwise, in index order.
pub(crate) fn sum_indexed_array<const N: usize, F>(n: usize, f: F) -> [f64; N]
where
    F: Fn(usize) -> [f64; N] + Sync + Send,
{
    map_indexed(n, f).into_iter().fold([0.0; N], |mut acc, v| {
        for (a, b) in acc.iter_mut().zip(v) {
            *a += b;
        }
        acc
    })
}
