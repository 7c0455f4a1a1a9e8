//! Replay buffer of qualified, novel puzzles for inter-batch novelty
//! comparison. One writer at a time; reads take snapshots.

use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ScoredPosition;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BufferError {
    /// Pushed entry is not a qualified (+1) position.
    NotQualified { reward: i8 },
}

impl fmt::Display for BufferError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BufferError::NotQualified { reward } => {
                write!(f, "replay buffer only stores +1 entries, got reward {reward}")
            }
        }
    }
}

impl core::error::Error for BufferError {}

#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: Vec<ScoredPosition>,
    rng: ChaCha8Rng,
    pushed: u64,
    evicted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> ReplayBuffer {
        ReplayBuffer {
            capacity: capacity.max(1),
            entries: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            pushed: 0,
            evicted: 0,
        }
    }

    /// Inserts a gate-passing entry; oldest entries fall out first when
    /// the buffer is full.
    pub fn push(&mut self, entry: ScoredPosition) -> Result<(), BufferError> {
        if entry.reward != 1 {
            return Err(BufferError::NotQualified {
                reward: entry.reward,
            });
        }
        self.entries.push(entry);
        self.pushed += 1;
        while self.entries.len() > self.capacity {
            self.entries.remove(0);
            self.evicted += 1;
        }
        Ok(())
    }

    /// Reloads previously persisted entries without re-gating; entries
    /// must still be +1 rewards.
    pub fn restore(
        &mut self,
        entries: impl IntoIterator<Item = ScoredPosition>,
    ) -> Result<(), BufferError> {
        for e in entries {
            self.push(e)?;
        }
        Ok(())
    }

    /// Uniform sample without replacement, clamped to the buffer size.
    /// Deterministic for a given seed and push history.
    pub fn sample(&mut self, k: usize) -> Vec<&ScoredPosition> {
        let k = k.min(self.entries.len());
        let idx = rand::seq::index::sample(&mut self.rng, self.entries.len().max(1), k);
        idx.into_iter().map(|i| &self.entries[i]).collect()
    }

    /// Uniform subsample of at most `m` distinct entries for inter-batch
    /// distance checks.
    pub fn subsample(&mut self, m: usize) -> Vec<&ScoredPosition> {
        self.sample(m)
    }

    pub fn entries(&self) -> &[ScoredPosition] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    pub fn evicted(&self) -> u64 {
        self.evicted
    }
}
