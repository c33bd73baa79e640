use crate::agents::{mean_std, Learner};
use crate::error::{Error, Result};
use crate::replay::ReplayBuffer;
use crate::rng::Rng;
use crate::tensor::{Matrix, Mlp};

fn states_matrix(buffer: &ReplayBuffer, idx: &[usize]) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| buffer.get(i).expect("probe index in range").state.clone())
        .collect();
    Matrix::from_rows(&rows)
}

/// Standard deviation of `Q₁(s, μ(s))` over `probe_size` states drawn
/// uniformly from the buffer. Replay counters are not touched.
pub fn q_std_diagnostic(
    learner: &Learner,
    buffer: &ReplayBuffer,
    probe_size: usize,
    rng: &mut Rng,
) -> Result<f64> {
    let idx = buffer.probe_indices(probe_size, rng)?;
    let states = states_matrix(buffer, &idx)?;
    let actions = learner.act_batch(&states)?;
    let q = Learner::q_values(&learner.critics()[0], &states, &actions)?;
    Ok(mean_std(&q).1)
}

/// State-action pairs drawn uniformly from the buffer.
pub fn probe_pairs(buffer: &ReplayBuffer, size: usize, rng: &mut Rng) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    Ok(buffer
        .probe_indices(size, rng)?
        .into_iter()
        .map(|i| {
            let t = buffer.get(i).expect("probe index in range");
            (t.state.clone(), t.action.clone())
        })
        .collect())
}

/// Mean absolute change `|Q′(s, a) − Q(s, a)|` of a critic between two
/// snapshots over fixed probe pairs.
pub fn q_change_diagnostic(before: &Mlp, after: &Mlp, probe: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    if !before.same_architecture(after) {
        return Err(Error::ArchitectureMismatch(format!(
            "{:?} vs {:?}",
            before.layer_sizes(),
            after.layer_sizes()
        )));
    }
    if probe.is_empty() {
        return Err(Error::InsufficientData { requested: 1, available: 0 });
    }
    let rows: Vec<Vec<f64>> = probe
        .iter()
        .map(|(s, a)| s.iter().chain(a).copied().collect())
        .collect();
    let input = Matrix::from_rows(&rows)?;
    let q0 = before.forward_batch(&input)?;
    let q1 = after.forward_batch(&input)?;
    Ok(q0
        .data()
        .iter()
        .zip(q1.data())
        .map(|(a, b)| (b - a).abs())
        .sum::<f64>()
        / probe.len() as f64)
}
