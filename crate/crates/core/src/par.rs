//! Data-parallel helpers.
//!
//! With the `parallel` feature these dispatch to rayon; without it they run
//! the same closures sequentially. Results are always collected in index
//! order and reduced with a fixed pairwise tree, so the output is
//! bit-identical for any thread count.

/// Evaluate `f(i)` for `i in 0..n`, returning results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Fixed-shape pairwise reduction of `items` with `combine`.
///
/// The tree shape depends only on `items.len()`.
pub fn tree_reduce<T, F>(mut items: Vec<T>, combine: F) -> Option<T>
where
    F: Fn(T, T) -> T,
{
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Pairwise sum of scalars.
pub fn tree_sum(items: Vec<f64>) -> f64 {
    tree_reduce(items, |a, b| a + b).unwrap_or(0.0)
}

/// Elementwise pairwise sum of equal-length vectors.
pub fn tree_sum_vecs(items: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    tree_reduce(items, |mut a, b| {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        a
    })
    .unwrap_or_else(|| vec![0.0; len])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_keeps_order() {
        let v = map_indexed(100, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn tree_sum_matches_exact_integers() {
        let v: Vec<f64> = (1..=1001).map(|i| i as f64).collect();
        assert_eq!(tree_sum(v), 1001.0 * 1002.0 / 2.0);
        assert_eq!(tree_sum(Vec::new()), 0.0);
        assert_eq!(tree_sum_vecs(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]], 2), vec![9.0, 12.0]);
    }
}
