//! Fixed-capacity transition store with per-slot replay counters.
//!
//! Every slot carries the number of mini-batches it has appeared in since
//! its transition was inserted. Counters reset when a slot is overwritten.
//! Mini-batches are drawn uniformly without replacement, so a transition
//! present in a buffer of size `s` lands in a batch of `n` with probability
//! exactly `n / s`.

use std::io::{self, Write};

use rand::seq::index;
use rand::Rng as _;

use crate::error::{check_dim, Error, Result};
use crate::rng::Rng;
use crate::tensor::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    /// Terminal transition. Truncation is not terminal.
    pub done: bool,
    /// 1-based insertion index, stamped by the buffer.
    pub insert_step: u64,
}

impl Transition {
    pub fn new(state: Vec<f64>, action: Vec<f64>, reward: f64, next_state: Vec<f64>, done: bool) -> Self {
        Transition {
            state,
            action,
            reward,
            next_state,
            done,
            insert_step: 0,
        }
    }
}

/// Column-stacked mini-batch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Matrix,
    pub actions: Matrix,
    pub rewards: Vec<f64>,
    pub next_states: Matrix,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn from_transitions<'a>(items: impl IntoIterator<Item = &'a Transition>) -> Result<Batch> {
        let items: Vec<&Transition> = items.into_iter().collect();
        let first = items
            .first()
            .ok_or(Error::InsufficientData { requested: 1, available: 0 })?;
        let (sd, ad) = (first.state.len(), first.action.len());
        let n = items.len();
        let mut states = Vec::with_capacity(n * sd);
        let mut actions = Vec::with_capacity(n * ad);
        let mut next_states = Vec::with_capacity(n * sd);
        let mut rewards = Vec::with_capacity(n);
        let mut dones = Vec::with_capacity(n);
        for t in items {
            check_dim("Batch state", sd, t.state.len())?;
            check_dim("Batch action", ad, t.action.len())?;
            check_dim("Batch next_state", sd, t.next_state.len())?;
            states.extend_from_slice(&t.state);
            actions.extend_from_slice(&t.action);
            next_states.extend_from_slice(&t.next_state);
            rewards.push(t.reward);
            dones.push(t.done);
        }
        Ok(Batch {
            states: Matrix::new(n, sd, states)?,
            actions: Matrix::new(n, ad, actions)?,
            rewards,
            next_states: Matrix::new(n, sd, next_states)?,
            dones,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    slots: Vec<Transition>,
    write_cursor: usize,
    replay_counts: Vec<u64>,
    rng: Rng,
    inserted: u64,
    sample_calls: u64,
    sampled_total: u64,
    evicted_total: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, rng: Rng) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("capacity", "must be at least 1"));
        }
        Ok(ReplayBuffer {
            capacity,
            slots: Vec::with_capacity(capacity.min(1 << 20)),
            write_cursor: 0,
            replay_counts: Vec::with_capacity(capacity.min(1 << 20)),
            rng,
            inserted: 0,
            sample_calls: 0,
            sampled_total: 0,
            evicted_total: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, slot: usize) -> Option<&Transition> {
        self.slots.get(slot)
    }

    pub fn replay_count(&self, slot: usize) -> Option<u64> {
        self.replay_counts.get(slot).copied()
    }

    pub fn replay_counts(&self) -> &[u64] {
        &self.replay_counts
    }

    /// Replay counts accumulated by transitions that have since been evicted.
    pub fn evicted_total(&self) -> u64 {
        self.evicted_total
    }

    pub fn sample_calls(&self) -> u64 {
        self.sample_calls
    }

    /// Total slot draws over the buffer's lifetime (batch size × calls).
    pub fn sampled_total(&self) -> u64 {
        self.sampled_total
    }

    /// Store a transition, evicting the oldest when full. Returns the slot.
    pub fn insert(&mut self, mut t: Transition) -> usize {
        self.inserted += 1;
        t.insert_step = self.inserted;
        let slot = self.write_cursor;
        if self.slots.len() < self.capacity {
            self.slots.push(t);
            self.replay_counts.push(0);
        } else {
            self.slots[slot] = t;
            self.evicted_total += self.replay_counts[slot];
            self.replay_counts[slot] = 0;
        }
        self.write_cursor = (self.write_cursor + 1) % self.capacity;
        slot
    }

    /// Draw `n` distinct slots uniformly and bump their counters.
    pub fn sample_indices(&mut self, n: usize) -> Result<Vec<usize>> {
        if self.slots.len() < n || n == 0 {
            return Err(Error::InsufficientData {
                requested: n,
                available: self.slots.len(),
            });
        }
        let picked = index::sample(&mut self.rng, self.slots.len(), n).into_vec();
        for &i in &picked {
            self.replay_counts[i] += 1;
        }
        self.sample_calls += 1;
        self.sampled_total += n as u64;
        Ok(picked)
    }

    pub fn sample(&mut self, n: usize) -> Result<Batch> {
        let picked = self.sample_indices(n)?;
        Batch::from_transitions(picked.iter().map(|&i| &self.slots[i]))
    }

    /// Uniform draw of `n` distinct slots from a caller-owned stream; does
    /// not touch replay counters or the buffer's own sampling stream.
    pub fn probe_indices(&self, n: usize, rng: &mut Rng) -> Result<Vec<usize>> {
        if self.slots.len() < n || n == 0 {
            return Err(Error::InsufficientData {
                requested: n,
                available: self.slots.len(),
            });
        }
        Ok(index::sample(rng, self.slots.len(), n).into_vec())
    }

    /// Draw a single slot uniformly (with replacement across calls) from a
    /// caller-owned stream.
    pub fn probe_one(&self, rng: &mut Rng) -> Option<&Transition> {
        if self.slots.is_empty() {
            return None;
        }
        Some(&self.slots[rng.random_range(0..self.slots.len())])
    }

    /// Live counters keyed by insert step, in insertion order.
    pub fn replay_count_snapshot(&self) -> Vec<(u64, u64)> {
        let mut snap: Vec<(u64, u64)> = self
            .slots
            .iter()
            .zip(&self.replay_counts)
            .map(|(t, c)| (t.insert_step, *c))
            .collect();
        snap.sort_unstable_by_key(|(step, _)| *step);
        snap
    }

    /// Live counters plus counters lost to eviction equal total draws.
    pub fn counters_conserved(&self) -> bool {
        let live: u64 = self.replay_counts.iter().sum();
        live + self.evicted_total == self.sampled_total
    }

    pub fn write_snapshot_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "insert_step,replay_count")?;
        for (step, count) in self.replay_count_snapshot() {
            writeln!(out, "{step},{count}")?;
        }
        Ok(())
    }
}
