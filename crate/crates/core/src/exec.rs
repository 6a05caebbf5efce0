//! Data-parallel execution with a sequential fallback.
//!
//! Work is always split into fixed-size chunks that are reduced in index
//! order, so `Sequential` and `Parallel` produce bit-identical sums no matter
//! how many worker threads rayon uses. Building without the `parallel`
//! feature turns `Parallel` into `Sequential`.

use serde::{Deserialize, Serialize};

/// Items per reduction chunk. Part of the numeric contract: changing it
/// changes the floating-point summation order.
pub const CHUNK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Sequential,
    Parallel,
}

impl Execution {
    /// Whether this build can actually run `Parallel` on more than one thread.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Same as [`Execution::map`] but over owned inputs.
    pub fn map_owned<T, R, F>(self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.into_par_iter().map(f).collect()
            }
            _ => items.into_iter().map(f).collect(),
        }
    }

    /// Chunked fold-and-reduce. Each chunk of [`CHUNK`] items is folded into a
    /// fresh accumulator from `init`, then the chunk accumulators are merged
    /// left to right.
    pub fn fold_chunks<T, A, I, F, M>(self, items: &[T], init: I, fold: F, merge: M) -> A
    where
        T: Sync,
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(&mut A, &T) + Sync + Send,
        M: Fn(&mut A, A),
    {
        let chunks: Vec<&[T]> = items.chunks(CHUNK).collect();
        let partials = self.map(&chunks, |chunk| {
            let mut acc = init();
            for item in chunk.iter() {
                fold(&mut acc, item);
            }
            acc
        });
        let mut iter = partials.into_iter();
        let mut total = iter.next().unwrap_or_else(&init);
        for part in iter {
            merge(&mut total, part);
        }
        total
    }
}

impl Execution {
    /// [`Execution::fold_chunks`] for fallible folds. The first error in
    /// chunk order wins.
    pub fn try_fold_chunks<T, A, E, I, F, M>(self, items: &[T], init: I, fold: F, merge: M) -> Result<A, E>
    where
        T: Sync,
        A: Send,
        E: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(&mut A, &T) -> Result<(), E> + Sync + Send,
        M: Fn(&mut A, A),
    {
        self.fold_chunks(
            items,
            || Ok(init()),
            |state: &mut Result<A, E>, item| {
                if let Ok(acc) = state {
                    if let Err(e) = fold(acc, item) {
                        *state = Err(e);
                    }
                }
            },
            |total, part| match (total.as_mut(), part) {
                (Ok(acc), Ok(p)) => merge(acc, p),
                (Ok(_), Err(e)) => *total = Err(e),
                (Err(_), _) => {}
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_chunks_matches_between_modes() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin() * 1e-3 + 1e3).collect();
        let run = |exec: Execution| {
            exec.fold_chunks(&xs, || 0.0f64, |acc, x| *acc += *x, |acc, p| *acc += p)
        };
        assert_eq!(
            run(Execution::Sequential).to_bits(),
            run(Execution::Parallel).to_bits()
        );
    }

    #[test]
    fn empty_input_yields_init() {
        let xs: Vec<f64> = Vec::new();
        let s = Execution::Parallel.fold_chunks(&xs, || 7.0, |a, x| *a += *x, |a, p| *a += p);
        assert_eq!(s, 7.0);
    }

    #[test]
    fn map_preserves_order() {
        let xs: Vec<usize> = (0..100).collect();
        assert_eq!(Execution::Parallel.map(&xs, |x| x * 2), Execution::Sequential.map(&xs, |x| x * 2));
    }
}
