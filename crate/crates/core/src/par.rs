//! Execution strategy for the data-parallel loops (trial batches, sign
//! enumeration chunks). With the `parallel` feature disabled every strategy
//! runs sequentially. Results are always assembled in index order, so the
//! choice of strategy never changes a computed value.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `(0..n).map(f).collect()`, in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_strategies_agree() {
        let f = |i: usize| (i as f64).sqrt();
        assert_eq!(
            Execution::Sequential.map(1000, f),
            Execution::Parallel.map(1000, f)
        );
    }
}
