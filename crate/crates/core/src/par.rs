//! Row-parallel helpers.
//!
//! With the `parallel` feature these dispatch to rayon; without it they run the
//! same closures sequentially. Reductions always combine per-row partial results
//! in row order, so outputs are bit-identical for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f(row_index, row)` to each `width`-sized chunk of `data`.
pub fn for_each_row_mut<T, F>(data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(width)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(width)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

/// Like [`for_each_row_mut`] but with per-worker scratch created by `init`.
pub fn for_each_row_mut_init<T, S, I, F>(data: &mut [T], width: usize, init: I, f: F)
where
    T: Send,
    I: Fn() -> S + Send + Sync,
    F: Fn(&mut S, usize, &mut [T]) + Send + Sync,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(width)
        .enumerate()
        .for_each_init(&init, |s, (i, row)| f(s, i, row));
    #[cfg(not(feature = "parallel"))]
    {
        let mut s = init();
        data.chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(&mut s, i, row));
    }
}

/// Map each row of `data` to a value; results are returned in row order.
pub fn map_rows<T, R, F>(data: &[T], width: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &[T]) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    return data
        .par_chunks(width)
        .enumerate()
        .map(|(i, row)| f(i, row))
        .collect();
    #[cfg(not(feature = "parallel"))]
    data.chunks(width)
        .enumerate()
        .map(|(i, row)| f(i, row))
        .collect()
}

/// Map an index range to values, preserving order.
pub fn map_range<R, F>(len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    return (0..len).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    (0..len).map(f).collect()
}

/// Deterministic sum: per-row partial sums added in row order.
pub fn row_sum<T, F>(data: &[T], width: usize, f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Send + Sync,
{
    map_rows(data, width, |_, row| row.iter().map(&f).sum::<f64>())
        .into_iter()
        .sum()
}
