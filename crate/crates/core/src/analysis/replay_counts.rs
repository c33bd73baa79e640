use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};

use rand::seq::index;
use rayon::prelude::*;

use super::z_score;
use crate::error::{Error, Result};
use crate::rng;

/// Expected number of times the transition inserted at step `t` is replayed
/// over a streaming run of `total` steps with batch size `batch`:
/// `Σ_{k=max(t,N)}^{T} N/k`. Transitions inserted before the first update
/// all share the value at `t = N`.
pub fn exact_expected_replay_count(t: usize, total: usize, batch: usize) -> Result<f64> {
    if batch == 0 {
        return Err(Error::invalid("batch", "must be at least 1"));
    }
    if t == 0 || t > total {
        return Err(Error::invalid("t", format!("must satisfy 1 <= t <= T = {total}, got {t}")));
    }
    let start = t.max(batch);
    let n = batch as f64;
    // Smallest terms first.
    Ok((start..=total).rev().map(|k| n / k as f64).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Bounds {
    /// `N ln((T+1)/N)`.
    pub max_closed_form: f64,
    /// `N / T`.
    pub min: f64,
    /// Harmonic-sum value `E[M_N]`.
    pub exact_max: f64,
}

impl Theorem1Bounds {
    pub fn relative_gap(&self) -> f64 {
        (self.exact_max - self.max_closed_form).abs() / self.exact_max
    }
}

/// Closed-form extremes of the streaming replay-count expectation. For
/// `T/N >= 100` the closed-form maximum must agree with the harmonic sum to
/// within 1%.
pub fn theorem1_bounds(total: usize, batch: usize) -> Result<Theorem1Bounds> {
    if batch == 0 || batch > total {
        return Err(Error::invalid("batch", "must satisfy 1 <= N <= T"));
    }
    let (t, n) = (total as f64, batch as f64);
    let bounds = Theorem1Bounds {
        max_closed_form: n * ((t + 1.0) / n).ln(),
        min: n / t,
        exact_max: exact_expected_replay_count(batch, total, batch)?,
    };
    if total / batch >= 100 && bounds.relative_gap() >= 0.01 {
        return Err(Error::Invariant(format!(
            "closed-form maximum {} differs from harmonic sum {} by more than 1%",
            bounds.max_closed_form, bounds.exact_max
        )));
    }
    Ok(bounds)
}

/// `ln(C(a, n) / C(b, n)) = Σ_{j<n} ln((a−j)/(b−j))` for `a <= b`;
/// `-inf` when `a < n`.
pub fn ln_binomial_ratio(a: usize, b: usize, n: usize) -> f64 {
    assert!(a <= b, "ln_binomial_ratio needs a <= b");
    if a < n {
        return f64::NEG_INFINITY;
    }
    let gap = (b - a) as f64;
    (0..n).map(|j| (-gap / (b - j) as f64).ln_1p()).sum()
}

pub fn binomial_ratio(a: usize, b: usize, n: usize) -> f64 {
    ln_binomial_ratio(a, b, n).exp()
}

fn check_recent(t: usize, block: usize, batch: usize) -> Result<()> {
    if block == 0 || batch == 0 {
        return Err(Error::invalid("F, N", "must be at least 1"));
    }
    if t < block + batch {
        return Err(Error::invalid("t", format!("need t >= F + N = {}", block + batch)));
    }
    Ok(())
}

/// Expected number of the `F` mini-batches drawn at buffer size `t` that
/// contain at least one of the `F` newest transitions (regular schedule):
/// `F (1 − C(t−F, N)/C(t, N))`.
pub fn expected_recent_hits_block(t: usize, block: usize, batch: usize) -> Result<f64> {
    check_recent(t, block, batch)?;
    Ok(block as f64 * -ln_binomial_ratio(t - block, t, batch).exp_m1())
}

/// Streaming counterpart: the `j`-th of the last `F` mini-batches is drawn
/// at size `t−F+j` while only `j` of the newest transitions are present, so
/// the expectation is `Σ_{j=1}^{F} (1 − C(t−F, N)/C(t−F+j, N))`.
pub fn expected_recent_hits_streaming(t: usize, block: usize, batch: usize) -> Result<f64> {
    check_recent(t, block, batch)?;
    Ok((1..=block)
        .map(|j| -ln_binomial_ratio(t - block, t - block + j, batch).exp_m1())
        .sum())
}

/// Per-insert-step exact expectations for the regular schedule with block
/// size `F` (`F = 1` is the streaming schedule). Each update at buffer size
/// `s >= N` replays every present transition with probability `N/s`.
pub fn exact_block_expectations(total: usize, batch: usize, block: usize) -> Result<Vec<f64>> {
    if batch == 0 || block == 0 || block > total {
        return Err(Error::invalid("N, F", "need N >= 1 and 1 <= F <= T"));
    }
    let n = batch as f64;
    // (size at end of block, number of updates in that block)
    let mut blocks = Vec::new();
    let mut size = 0;
    while size < total {
        let len = block.min(total - size);
        size += len;
        blocks.push((size, len));
    }
    let mut out = vec![0.0; total];
    let mut suffix = 0.0;
    let mut next_t = total;
    for &(s, len) in blocks.iter().rev() {
        if s >= batch {
            suffix += len as f64 * n / s as f64;
        }
        let first = s + 1 - len;
        while next_t >= first && next_t >= 1 {
            out[next_t - 1] = suffix;
            next_t -= 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayCountReport {
    pub total_steps: usize,
    pub batch_size: usize,
    pub block_size: usize,
    pub num_trials: usize,
    pub exact_expectations: BTreeMap<usize, f64>,
    pub simulated_means: BTreeMap<usize, f64>,
    pub simulated_stderr: BTreeMap<usize, f64>,
}

impl ReplayCountReport {
    pub fn z_scores(&self) -> BTreeMap<usize, f64> {
        self.exact_expectations
            .iter()
            .map(|(t, e)| (*t, z_score(self.simulated_means[t], *e, self.simulated_stderr[t])))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,exact,simulated_mean,simulated_stderr,z")?;
        let z = self.z_scores();
        for (t, e) in &self.exact_expectations {
            writeln!(
                out,
                "{t},{e:.16e},{:.16e},{:.16e},{:.16e}",
                self.simulated_means[t], self.simulated_stderr[t], z[t]
            )?;
        }
        Ok(())
    }
}

struct Moments {
    sum: Vec<u64>,
    sum_sq: Vec<u64>,
}

/// Simulate the index process only: inserts and uniform without-replacement
/// mini-batches, with `block` inserts followed by `block` draws per round.
/// Draws happen only once the buffer holds at least `batch` transitions.
/// Trial `k` uses its own stream, so results do not depend on the number of
/// worker threads.
pub fn simulate_replay_counts(
    total: usize,
    batch: usize,
    block: usize,
    trials: usize,
    seed: u64,
) -> Result<ReplayCountReport> {
    if batch > total {
        return Err(Error::invalid("batch", "must satisfy N <= T"));
    }
    if trials < 2 {
        return Err(Error::invalid("trials", "need at least 2 for a standard error"));
    }
    let exact = exact_block_expectations(total, batch, block)?;

    let run_trial = |trial: usize| -> Result<Vec<u32>> {
        let mut rng = rng::indexed(seed, trial as u64);
        let mut counts = vec![0u32; total];
        let mut size = 0;
        let mut events = 0u64;
        while size < total {
            let len = block.min(total - size);
            size += len;
            for _ in 0..len {
                if size >= batch {
                    for i in index::sample(&mut rng, size, batch) {
                        counts[i] += 1;
                    }
                    events += 1;
                }
            }
        }
        let drawn: u64 = counts.iter().map(|&c| c as u64).sum();
        if drawn != batch as u64 * events {
            return Err(Error::Invariant(format!(
                "trial {trial}: {drawn} draws for {events} batches of {batch}"
            )));
        }
        Ok(counts)
    };

    let zero = || Moments {
        sum: vec![0; total],
        sum_sq: vec![0; total],
    };
    let merged = (0..trials)
        .into_par_iter()
        .map(run_trial)
        .try_fold(zero, |mut acc, counts| {
            let counts = counts?;
            for (i, &c) in counts.iter().enumerate() {
                acc.sum[i] += c as u64;
                acc.sum_sq[i] += c as u64 * c as u64;
            }
            Ok::<_, Error>(acc)
        })
        .try_reduce(zero, |mut a, b| {
            for i in 0..total {
                a.sum[i] += b.sum[i];
                a.sum_sq[i] += b.sum_sq[i];
            }
            Ok(a)
        })?;

    let n = trials as f64;
    let mut report = ReplayCountReport {
        total_steps: total,
        batch_size: batch,
        block_size: block,
        num_trials: trials,
        exact_expectations: BTreeMap::new(),
        simulated_means: BTreeMap::new(),
        simulated_stderr: BTreeMap::new(),
    };
    for t in 1..=total {
        let (s, ss) = (merged.sum[t - 1] as f64, merged.sum_sq[t - 1] as f64);
        let mean = s / n;
        let var = ((ss - s * s / n) / (n - 1.0)).max(0.0);
        report.exact_expectations.insert(t, exact[t - 1]);
        report.simulated_means.insert(t, mean);
        report.simulated_stderr.insert(t, (var / n).sqrt());
    }
    Ok(report)
}

/// Exact and simulated recent-transition hit counts for both schedules at
/// one `(t, F, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecentHitsReport {
    pub t: usize,
    pub block_size: usize,
    pub batch_size: usize,
    pub num_trials: usize,
    pub exact_streaming: f64,
    pub exact_block: f64,
    pub simulated_streaming_mean: f64,
    pub simulated_streaming_stderr: f64,
    pub simulated_block_mean: f64,
    pub simulated_block_stderr: f64,
}

impl RecentHitsReport {
    pub fn streaming_z(&self) -> f64 {
        z_score(self.simulated_streaming_mean, self.exact_streaming, self.simulated_streaming_stderr)
    }

    pub fn block_z(&self) -> f64 {
        z_score(self.simulated_block_mean, self.exact_block, self.simulated_block_stderr)
    }

    pub fn strictly_ordered(&self) -> bool {
        self.exact_streaming < self.exact_block
    }
}

impl fmt::Display for RecentHitsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={} F={} N={}: streaming exact {:.6} sim {:.6} (z {:+.2}) | block exact {:.6} sim {:.6} (z {:+.2})",
            self.t,
            self.block_size,
            self.batch_size,
            self.exact_streaming,
            self.simulated_streaming_mean,
            self.streaming_z(),
            self.exact_block,
            self.simulated_block_mean,
            self.block_z()
        )
    }
}

pub fn simulate_recent_hits(
    t: usize,
    block: usize,
    batch: usize,
    trials: usize,
    seed: u64,
) -> Result<RecentHitsReport> {
    let exact_streaming = expected_recent_hits_streaming(t, block, batch)?;
    let exact_block = expected_recent_hits_block(t, block, batch)?;
    if trials < 2 {
        return Err(Error::invalid("trials", "need at least 2 for a standard error"));
    }
    let oldest_new = t - block;
    let hits = |rng: &mut rng::Rng, size: usize| -> u64 {
        index::sample(rng, size, batch).iter().any(|i| i >= oldest_new) as u64
    };
    let per_trial: Vec<(u64, u64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::indexed(seed, trial as u64);
            let streaming = (1..=block).map(|j| hits(&mut rng, oldest_new + j)).sum();
            let blocked = (0..block).map(|_| hits(&mut rng, t)).sum();
            (streaming, blocked)
        })
        .collect();
    let stats = |xs: &mut dyn Iterator<Item = u64>| {
        let (mut s, mut ss) = (0.0, 0.0);
        for x in xs {
            s += x as f64;
            ss += (x * x) as f64;
        }
        let n = trials as f64;
        let var = ((ss - s * s / n) / (n - 1.0)).max(0.0);
        (s / n, (var / n).sqrt())
    };
    let (sm, se) = stats(&mut per_trial.iter().map(|p| p.0));
    let (bm, be) = stats(&mut per_trial.iter().map(|p| p.1));
    Ok(RecentHitsReport {
        t,
        block_size: block,
        batch_size: batch,
        num_trials: trials,
        exact_streaming,
        exact_block,
        simulated_streaming_mean: sm,
        simulated_streaming_stderr: se,
        simulated_block_mean: bm,
        simulated_block_stderr: be,
    })
}
