//! Replicate execution. With the `parallel` feature the replicates run on the
//! rayon pool; results are always returned in replicate order, so reductions
//! over them are identical for any thread count.

/// `f(0), …, f(n-1)` in order, in parallel when the feature is enabled.
pub fn map_replicates<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_replicates_sequential(n, f)
    }
}

/// `f(0), …, f(n-1)` on the calling thread.
pub fn map_replicates_sequential<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_and_equal() {
        let f = |i: u64| i.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 7;
        assert_eq!(map_replicates(1000, f), map_replicates_sequential(1000, f));
        assert!(map_replicates(0, f).is_empty());
    }
}
