//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the enumerations fan out over the current
//! rayon pool; without it they run on the calling thread. Reductions are
//! order-independent so both builds return identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluates `f` on `0..total` and keeps the result with the largest key,
/// breaking ties towards the smallest index.
pub fn best_by_key<T, F, K>(total: usize, f: F, key: K) -> Option<(usize, T)>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync + Send,
    K: Fn(&T) -> i64 + Sync + Send,
{
    let pick = |a: (usize, T), b: (usize, T)| {
        let (ka, kb) = (key(&a.1), key(&b.1));
        if kb > ka || (kb == ka && b.0 < a.0) {
            b
        } else {
            a
        }
    };
    #[cfg(feature = "parallel")]
    {
        (0..total)
            .into_par_iter()
            .filter_map(|i| f(i).map(|t| (i, t)))
            .reduce_with(pick)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..total).filter_map(|i| f(i).map(|t| (i, t))).reduce(pick)
    }
}

/// Maps `f` over `items`, preserving order.
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

/// Counts indices in `0..total` satisfying `pred`.
pub fn count<F>(total: usize, pred: F) -> usize
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..total).into_par_iter().filter(|&i| pred(i)).count()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..total).filter(|&i| pred(i)).count()
    }
}

/// True when `pred` holds for every index.
pub fn all<F>(total: usize, pred: F) -> bool
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..total).into_par_iter().all(pred)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..total).all(pred)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_smallest_index() {
        let best = best_by_key(100, |i| Some(i % 7), |&v| v as i64).unwrap();
        assert_eq!(best, (6, 6));
        assert_eq!(best_by_key(5, |_| None::<u8>, |_| 0), None);
        assert_eq!(count(10, |i| i % 2 == 0), 5);
        assert!(all(10, |i| i < 10));
        assert_eq!(map(&[1, 2, 3], |x| x * 2), vec![2, 4, 6]);
    }
}
