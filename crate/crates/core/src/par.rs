//! Ordered data-parallel helpers.
//!
//! Every reduction in the crate goes through fixed-size blocks whose partial
//! results are combined sequentially in block order, so floating-point output
//! is bit-identical whatever the thread count, and identical to the
//! sequential build (`--no-default-features`).

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Rows per block for blocked reductions.
pub const BLOCK_ROWS: usize = 256;

/// Split `0..len` into consecutive blocks of `block` items and map each one.
/// Results come back in block order.
pub fn map_blocks<T, F>(len: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let block = block.max(1);
    let n_blocks = len.div_ceil(block);
    let range = move |b: usize| b * block..((b + 1) * block).min(len);

    #[cfg(feature = "parallel")]
    {
        (0..n_blocks).into_par_iter().map(|b| f(range(b))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_blocks).map(|b| f(range(b))).collect()
    }
}

/// Order-preserving map over a slice.
pub fn map<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Order-preserving map over an index range.
pub fn map_range<T, F>(range: Range<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        range.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        range.map(f).collect()
    }
}

/// Whether the crate was built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_cover_range_in_order() {
        let spans = map_blocks(1000, 256, |r| (r.start, r.end));
        assert_eq!(spans, vec![(0, 256), (256, 512), (512, 768), (768, 1000)]);
        assert!(map_blocks(0, 256, |r| r.len()).is_empty());
    }

    #[test]
    fn map_preserves_order() {
        let v: Vec<u32> = (0..5000).collect();
        let doubled = map(&v, |x| x * 2);
        assert!(doubled.iter().enumerate().all(|(i, &d)| d == 2 * i as u32));
        assert_eq!(map_range(3..6, |i| i), vec![3, 4, 5]);
    }
}
