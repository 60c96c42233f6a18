//! Order-preserving map helpers. With `std` the work runs on the rayon pool;
//! results are always returned in index order so downstream reductions are
//! independent of scheduling.

use alloc::vec::Vec;

#[cfg(feature = "std")]
pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "std"))]
pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

/// Splits `0..len` into fixed-size blocks and maps each block. The block
/// boundaries depend only on `len` and `block`, never on the thread count.
pub fn map_blocks<T, F>(len: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(core::ops::Range<usize>) -> T + Sync + Send,
{
    let block = block.max(1);
    let nblocks = len.div_ceil(block);
    map_range(nblocks, |b| {
        let start = b * block;
        f(start..(start + block).min(len))
    })
}
