//! Execution policy for the data-parallel kernels.
//!
//! Every enumeration in the crate partitions its work into an indexed list of
//! blocks, evaluates the blocks through [`Exec::map_blocks`] and merges the
//! per-block results in index order. Results are therefore identical for the
//! sequential and the parallel policy and independent of the thread count.

/// Default ceiling on the number of lattice points a single enumeration may visit.
pub const DEFAULT_BUDGET: u64 = 200_000_000;

/// Environment variable overriding [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "CUBIC_LAB_BUDGET";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Rayon work-stealing when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
}

impl Exec {
    /// Evaluate `f` on `0..blocks` and return the results in index order.
    pub fn map_blocks<T, F>(self, blocks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..blocks).map(f).collect(),
            Exec::Parallel => par_map(blocks, f),
        }
    }

    /// Map over the blocks and fold the results left to right.
    pub fn map_reduce<T, F, R>(self, blocks: usize, f: F, init: T, reduce: R) -> T
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
        R: Fn(T, T) -> T,
    {
        self.map_blocks(blocks, f).into_iter().fold(init, reduce)
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(blocks: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..blocks).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(blocks: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..blocks).map(f).collect()
}

/// Budget and execution policy shared by the enumeration kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Config {
    pub budget: u64,
    pub exec: Exec,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            budget: DEFAULT_BUDGET,
            exec: Exec::default(),
        }
    }
}

impl Config {
    /// Default configuration with the budget taken from `CUBIC_LAB_BUDGET` when set.
    pub fn from_env() -> Self {
        let budget = std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().replace('_', "").parse().ok())
            .unwrap_or(DEFAULT_BUDGET);
        Config {
            budget,
            ..Config::default()
        }
    }

    pub fn sequential() -> Self {
        Config {
            exec: Exec::Sequential,
            ..Config::default()
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_agree_in_order() {
        let seq = Exec::Sequential.map_blocks(100, |i| i * i);
        let par = Exec::Parallel.map_blocks(100, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }

    #[test]
    fn reduce_is_left_fold() {
        let s = Exec::Parallel.map_reduce(5, |i| vec![i], Vec::new(), |mut a, b| {
            a.extend(b);
            a
        });
        assert_eq!(s, vec![0, 1, 2, 3, 4]);
    }
}
