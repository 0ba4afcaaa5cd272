//! Order-preserving parallel map over replication indices.

use rayon::prelude::*;

/// Evaluates `f(0..n)` and returns results in index order.
///
/// `workers <= 1` runs inline on the calling thread. Results never depend on
/// `workers`: every index must derive its own randomness.
pub fn map_indexed<R, F>(n: usize, workers: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if workers <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

/// Splits `0..n` into at most `chunks` contiguous ranges.
pub fn chunk_ranges(n: usize, chunks: usize) -> Vec<std::ops::Range<usize>> {
    let chunks = chunks.clamp(1, n.max(1));
    let base = n / chunks;
    let extra = n % chunks;
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    for c in 0..chunks {
        let len = base + usize::from(c < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_across_worker_counts() {
        let a = map_indexed(100, 1, |i| i * i);
        let b = map_indexed(100, 4, |i| i * i);
        assert_eq!(a, b);
    }

    #[test]
    fn ranges_cover_exactly() {
        let r = chunk_ranges(10, 3);
        assert_eq!(r, vec![0..4, 4..7, 7..10]);
        assert_eq!(chunk_ranges(0, 4), vec![0..0]);
        assert_eq!(chunk_ranges(2, 8), vec![0..1, 1..2]);
    }
}
