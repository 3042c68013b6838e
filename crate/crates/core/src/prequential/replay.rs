use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seeding::SeededRng;

/// Probability that a replay stream jumps back to the first batch after
/// iteration `i` (1-indexed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResetLaw {
    /// `1 / (i + 1)`: visits to past batches become uniform as `i` grows.
    #[default]
    InverseIteration,
    /// A constant probability.
    Fixed(f64),
}

impl ResetLaw {
    pub fn probability(self, iteration: usize) -> f64 {
        match self {
            Self::InverseIteration => 1.0 / (iteration as f64 + 1.0),
            Self::Fixed(p) => p,
        }
    }
}

/// Mini-batch incremental coding with replay streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplayConfig {
    /// Number of replay streams `k`.
    pub streams: usize,
    pub reset: ResetLaw,
    pub batch_size: usize,
    /// Seed of the presentation order; the run seed is used when unset.
    pub order_seed: Option<u64>,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self { streams: 25, reset: ResetLaw::InverseIteration, batch_size: 32, order_seed: None }
    }
}

impl ReplayConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.batch_size == 0 {
            return Err("batch size must be at least 1".into());
        }
        if let ResetLaw::Fixed(p) = self.reset {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("reset probability {p} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Cursors of the `k` replay streams over already-seen batches.
///
/// A stream starts empty and points at the first batch once one batch has
/// been seen. At every iteration each non-empty stream trains on the batch
/// under its cursor and advances cyclically over the seen batches; then each
/// stream independently resets to the first batch with the reset law's
/// probability.
#[derive(Debug, Clone)]
pub struct ReplayStreams {
    cursors: Vec<Option<usize>>,
    law: ResetLaw,
    rng: SeededRng,
}

impl ReplayStreams {
    pub fn new(streams: usize, law: ResetLaw, rng: SeededRng) -> Self {
        Self { cursors: vec![None; streams], law, rng }
    }

    /// Batches (0-indexed) to train on at 1-indexed iteration `i`, after
    /// batch `i - 1` has been coded: the new batch first, then one batch per
    /// active stream.
    pub fn iteration(&mut self, i: usize) -> Vec<usize> {
        assert!(i >= 1, "iterations are 1-indexed");
        let seen = i;
        let mut plan = Vec::with_capacity(self.cursors.len() + 1);
        plan.push(i - 1);
        for c in self.cursors.iter_mut().flatten() {
            plan.push(*c);
            *c = (*c + 1) % seen;
        }
        let p = self.law.probability(i);
        for c in &mut self.cursors {
            // one draw per stream per iteration keeps the random sequence
            // independent of stream state
            let reset = self.rng.random::<f64>() < p;
            if c.is_none() || reset {
                *c = Some(0);
            }
        }
        plan
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::{rng, Purpose};

    #[test]
    fn streams_only_touch_seen_batches() {
        let mut s = ReplayStreams::new(25, ResetLaw::InverseIteration, rng(1, Purpose::ReplayReset));
        for i in 1..=200 {
            let plan = s.iteration(i);
            assert_eq!(plan[0], i - 1);
            assert!(plan.iter().all(|&b| b < i), "iteration {i}: {plan:?}");
            assert_eq!(plan.len(), if i == 1 { 1 } else { 26 });
        }
    }

    #[test]
    fn no_streams_trains_new_batch_only() {
        let mut s = ReplayStreams::new(0, ResetLaw::InverseIteration, rng(1, Purpose::ReplayReset));
        for i in 1..10 {
            assert_eq!(s.iteration(i), vec![i - 1]);
        }
    }

    #[test]
    fn never_resetting_stream_cycles() {
        let mut s = ReplayStreams::new(1, ResetLaw::Fixed(0.0), rng(1, Purpose::ReplayReset));
        let replayed: Vec<usize> = (1..=6).map(|i| s.iteration(i)).filter_map(|p| p.get(1).copied()).collect();
        // cursor 0 at i=2 -> 1 at i=3 (mod 3) -> 2 at i=4 -> 3 at i=5 -> 4 at i=6
        assert_eq!(replayed, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn always_resetting_stream_stays_on_first_batch() {
        let mut s = ReplayStreams::new(3, ResetLaw::Fixed(1.0), rng(1, Purpose::ReplayReset));
        for i in 1..8 {
            assert!(s.iteration(i)[1..].iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn inverse_law_covers_history_roughly_uniformly() {
        let mut s = ReplayStreams::new(25, ResetLaw::InverseIteration, rng(3, Purpose::ReplayReset));
        let n = 400;
        let mut visits = vec![0usize; n];
        for i in 1..=n {
            for b in s.iteration(i).into_iter().skip(1) {
                visits[b] += 1;
            }
        }
        // early batches are replayed more (they exist longer) but every
        // batch of the first half gets replayed
        assert!(visits[..n / 2].iter().all(|&v| v > 0));
    }
}
