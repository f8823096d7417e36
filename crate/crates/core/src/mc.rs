//! Replica dispatch shared by all Monte-Carlo estimators.

use std::hash::Hasher;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use siphasher::sip::SipHasher13;

use crate::error::{PercolabError, Result};
use crate::sampler::{DEFAULT_BUDGET, DEFAULT_HEIGHT_CAP};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub seed: u64,
    pub samples: u64,
    pub budget: usize,
    pub height_cap: u32,
    /// `None` uses the global pool (available parallelism).
    pub workers: Option<usize>,
    /// Records with a larger censored fraction carry a warning.
    pub censor_threshold: f64,
    /// Truncate lattice fibers to a finite box; `None` leaves them unbounded.
    pub lattice_bound: Option<u32>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            samples: 10_000,
            budget: DEFAULT_BUDGET,
            height_cap: DEFAULT_HEIGHT_CAP,
            workers: None,
            censor_threshold: 0.01,
            lattice_bound: None,
        }
    }
}

impl McConfig {
    pub fn new(seed: u64, samples: u64) -> Self {
        Self {
            seed,
            samples,
            ..Self::default()
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_height_cap(mut self, cap: u32) -> Self {
        self.height_cap = cap;
        self
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_lattice_bound(mut self, bound: Option<u32>) -> Self {
        self.lattice_bound = bound;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(PercolabError::InvalidParameter("samples must be >= 1".into()));
        }
        if self.budget == 0 {
            return Err(PercolabError::InvalidParameter("budget must be >= 1".into()));
        }
        if self.workers == Some(0) {
            return Err(PercolabError::InvalidParameter("workers must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.censor_threshold) {
            return Err(PercolabError::InvalidParameter(
                "censor threshold must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Same configuration on an independent stream labelled by `tag`.
    pub fn substream(&self, tag: &str, index: u64) -> Self {
        Self {
            seed: derive_seed(self.seed, tag, index),
            ..self.clone()
        }
    }

    /// Runs `f` on replicas `0..samples`; results come back in replica order.
    pub fn replicate<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        self.replicate_range(0, self.samples, f)
    }

    pub fn replicate_range<T, F>(&self, start: u64, end: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        self.validate()?;
        let run = || (start..end).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
        match self.workers {
            None => run(),
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| PercolabError::InvalidParameter(format!("thread pool: {e}")))?
                .install(run),
        }
    }
}

/// Seed for an independent sub-stream.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = SipHasher13::new_with_keys(seed, 0x5eed_5eed_5eed_5eed);
    h.write(tag.as_bytes());
    h.write_u64(index);
    h.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replica_order_is_kept_for_any_worker_count() {
        let base = McConfig::new(7, 1000);
        let one = base.clone().with_workers(Some(1)).replicate(|r| Ok(r * r)).unwrap();
        let three = base.with_workers(Some(3)).replicate(|r| Ok(r * r)).unwrap();
        assert_eq!(one, three);
        assert_eq!(one[999], 999 * 999);
    }

    #[test]
    fn errors_propagate_and_config_is_checked() {
        let cfg = McConfig::new(1, 10);
        let r: Result<Vec<u64>> = cfg.replicate(|i| {
            if i == 5 {
                Err(PercolabError::InvalidParameter("boom".into()))
            } else {
                Ok(i)
            }
        });
        assert!(r.is_err());
        assert!(McConfig::new(1, 0).replicate(Ok).is_err());
        assert!(McConfig::new(1, 5).with_workers(Some(0)).validate().is_err());
    }

    #[test]
    fn substreams_differ() {
        let a = derive_seed(1, "n", 1);
        assert_ne!(a, derive_seed(1, "n", 2));
        assert_ne!(a, derive_seed(2, "n", 1));
        assert_ne!(a, derive_seed(1, "m", 1));
        assert_eq!(a, derive_seed(1, "n", 1));
    }
}
