//! Deterministic summation.
//!
//! Every lattice sum in the crate funnels through [`pairwise_sum`], so the
//! reduction tree depends only on the length of the input and never on the
//! number of worker threads.

const BLOCK: usize = 32;

/// Pairwise (cascade) summation with a fixed split point.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Maps `f` over `0..n` and reduces with [`pairwise_sum`].
///
/// The terms are materialised in index order; with the `parallel` feature
/// they are produced on the rayon pool, which does not change the result.
pub fn indexed_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    pairwise_sum(&indexed_terms(n, f))
}

pub(crate) fn indexed_terms<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_small_inputs() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 55.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn pairwise_beats_naive_accumulation() {
        let xs = vec![0.1; 1 << 20];
        let exact = 0.1 * (1u64 << 20) as f64;
        let naive: f64 = xs.iter().sum();
        let pw = pairwise_sum(&xs);
        assert!((pw - exact).abs() <= (naive - exact).abs());
        assert!((pw - exact).abs() < 1e-9);
    }

    #[test]
    fn indexed_sum_is_reproducible() {
        let f = |i: usize| 1.0 / (1.0 + i as f64).powi(2);
        let a = indexed_sum(100_000, f);
        let b = indexed_sum(100_000, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
