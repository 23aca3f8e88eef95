//! Environments: synthetic draws from an instance, or replay of logged
//! outcomes without replacement.

use std::collections::HashMap;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::replay::ReplayData;
use crate::model::Instance;

/// Draws subpopulations (passive modes) and outcomes.
pub trait Environment {
    fn draw_subpop(&mut self) -> usize;
    /// Outcome of `arm` in `subpop`; `None` once the data is exhausted.
    fn pull(&mut self, arm: usize, subpop: usize) -> Option<f64>;
    fn exhausted(&self) -> bool {
        false
    }
}

pub struct SyntheticEnv<'a> {
    instance: &'a Instance,
    subpops: WeightedIndex<f64>,
    rng: ChaCha8Rng,
}

impl<'a> SyntheticEnv<'a> {
    pub fn new(instance: &'a Instance, rng: ChaCha8Rng) -> Self {
        let subpops = WeightedIndex::new(instance.alpha().iter().copied()).expect("alpha is a distribution");
        SyntheticEnv { instance, subpops, rng }
    }
}

impl Environment for SyntheticEnv<'_> {
    fn draw_subpop(&mut self) -> usize {
        self.subpops.sample(&mut self.rng)
    }

    fn pull(&mut self, arm: usize, subpop: usize) -> Option<f64> {
        let mu = self.instance.means()[[arm, subpop]];
        Some(self.instance.family().cell(arm, subpop).sample(mu, &mut self.rng).expect("instance means are valid"))
    }
}

/// Lazy Fisher-Yates: yields a uniformly random permutation of `0..n` one
/// element at a time, storing only the swapped positions.
#[derive(Debug, Clone, Default)]
struct LazyShuffle {
    used: usize,
    swaps: HashMap<usize, usize>,
}

impl LazyShuffle {
    fn next<R: Rng>(&mut self, n: usize, rng: &mut R) -> Option<usize> {
        if self.used >= n {
            return None;
        }
        let j = rng.gen_range(self.used..n);
        let at_j = *self.swaps.get(&j).unwrap_or(&j);
        let at_used = *self.swaps.get(&self.used).unwrap_or(&self.used);
        self.swaps.insert(j, at_used);
        self.swaps.remove(&self.used);
        self.used += 1;
        Some(at_j)
    }
}

pub struct ReplayEnv {
    data: Arc<ReplayData>,
    shuffles: Vec<LazyShuffle>,
    subpops: WeightedIndex<f64>,
    rng: ChaCha8Rng,
    bootstrap: bool,
    exhausted: bool,
}

impl ReplayEnv {
    /// Each pool is consumed in an order drawn from `rng`. With `bootstrap`
    /// set, draws are with replacement and never exhaust.
    pub fn new(data: Arc<ReplayData>, rng: ChaCha8Rng, bootstrap: bool) -> Self {
        let subpops = WeightedIndex::new(data.alpha().iter().copied()).expect("log has rows");
        let shuffles = vec![LazyShuffle::default(); data.arms() * data.subpops()];
        ReplayEnv { data, shuffles, subpops, rng, bootstrap, exhausted: false }
    }
}

impl Environment for ReplayEnv {
    fn draw_subpop(&mut self) -> usize {
        self.subpops.sample(&mut self.rng)
    }

    fn pull(&mut self, arm: usize, subpop: usize) -> Option<f64> {
        let pool = self.data.pool(arm, subpop);
        let idx = if self.bootstrap {
            (!pool.is_empty()).then(|| self.rng.gen_range(0..pool.len()))
        } else {
            self.shuffles[arm * self.data.subpops() + subpop].next(pool.len(), &mut self.rng)
        };
        match idx {
            Some(k) => Some(pool[k]),
            None => {
                self.exhausted = true;
                None
            }
        }
    }

    fn exhausted(&self) -> bool {
        self.exhausted
    }
}
