//! Deterministic parallel map-reduce over indexed items.
//!
//! Items `0..n` are split recursively at `mid = lo + (hi - lo) / 2` and the
//! two halves combined as `combine(left, right)`. The tree depends only on
//! `n`, never on scheduling, so floating-point results are bitwise identical
//! for any thread count.

use rayon::ThreadPoolBuilder;

/// Runs `leaf(i)` for every `i in 0..n` and folds the results with
/// `combine` in fixed binary-tree order. Returns `None` when `n == 0`.
pub fn tree_map_reduce<T, L, C>(n: usize, leaf: L, combine: C) -> Option<T>
where
    T: Send,
    L: Fn(usize) -> T + Sync,
    C: Fn(T, T) -> T + Sync,
{
    fn go<T, L, C>(lo: usize, hi: usize, leaf: &L, combine: &C) -> T
    where
        T: Send,
        L: Fn(usize) -> T + Sync,
        C: Fn(T, T) -> T + Sync,
    {
        if hi - lo == 1 {
            return leaf(lo);
        }
        let mid = lo + (hi - lo) / 2;
        let (a, b) = rayon::join(|| go(lo, mid, leaf, combine), || go(mid, hi, leaf, combine));
        combine(a, b)
    }
    (n > 0).then(|| go(0, n, &leaf, &combine))
}

/// Runs `f` inside a dedicated pool of `threads` workers (`0` means rayon's
/// default).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    match ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Elementwise `a += b`.
pub fn add_assign(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input() {
        assert!(tree_map_reduce(0, |i| i, |a, b| a + b).is_none());
    }

    #[test]
    fn tree_shape_is_fixed() {
        let shape = tree_map_reduce(5, |i| i.to_string(), |a, b| format!("({a} {b})")).unwrap();
        assert_eq!(shape, "((0 1) (2 (3 4)))");
    }

    #[test]
    fn float_sum_is_thread_count_independent() {
        let vals: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64).powf(1.37)).collect();
        let run = |t| with_threads(t, || tree_map_reduce(vals.len(), |i| vals[i], |a, b| a + b).unwrap());
        let one = run(1);
        for t in [2, 3, 8] {
            assert_eq!(run(t).to_bits(), one.to_bits());
        }
    }
}
