//! Replay-count expectations (exact and simulated), the clipped double-Q
//! bias oracle, and the Q-spread / Q-change training diagnostics.

mod bias;
mod diagnostics;
mod replay_counts;

pub use bias::{clipped_double_q_bias_mc, BiasEstimate};
pub use diagnostics::{probe_pairs, q_change_diagnostic, q_std_diagnostic};
pub use replay_counts::{
    binomial_ratio, exact_block_expectations, exact_expected_replay_count, expected_recent_hits_block,
    expected_recent_hits_streaming, ln_binomial_ratio, simulate_recent_hits, simulate_replay_counts,
    theorem1_bounds, RecentHitsReport, ReplayCountReport, Theorem1Bounds,
};

/// z-score of an estimate against a reference; exact agreement with zero
/// standard error scores 0.
pub fn z_score(estimate: f64, reference: f64, stderr: f64) -> f64 {
    let diff = estimate - reference;
    if stderr > 0.0 {
        diff / stderr
    } else if diff.abs() <= 1e-12 * reference.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY
    }
}
