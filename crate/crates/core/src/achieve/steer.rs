use serde::{Deserialize, Serialize};

use crate::catalog::Series;
use crate::error::{Error, Result};
use crate::exactnum::Vec2f;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteerReport {
    pub target: Vec2f,
    pub steps: u64,
    pub pool: u64,
    pub prefix: Vec<u64>,
    pub initial_distance: f64,
    /// `(step, distance)` at `N/4`, `N/2` and `N`
    pub checkpoints: Vec<(u64, f64)>,
    pub final_sum: Vec2f,
    pub final_distance: f64,
    pub monotone_at_checkpoints: bool,
    pub improved: bool,
}

/// Greedy permutation prefix over the pool `1..=4N`: each step takes the unused
/// index whose term brings the running sum closest to `target`.
pub fn steer_rearrangement(series: &dyn Series, target: Vec2f, steps: u64) -> Result<SteerReport> {
    steer_rearrangement_with_pool(series, target, steps, steps.saturating_mul(4))
}

pub fn steer_rearrangement_with_pool(series: &dyn Series, target: Vec2f, steps: u64, pool: u64) -> Result<SteerReport> {
    if steps > pool {
        return Err(Error::PoolExhausted { pool });
    }
    let terms: Vec<Vec2f> = (1..=pool).map(|i| series.term_f64(i)).collect::<Result<_>>()?;
    let mut used = vec![false; terms.len()];
    let mut sum = Vec2f::ZERO;
    let initial_distance = target.norm();
    let marks = [steps / 4, steps / 2, steps];
    let mut checkpoints = Vec::new();
    let mut prefix = Vec::with_capacity(steps as usize);
    for step in 1..=steps {
        let mut best: Option<(usize, f64)> = None;
        for (i, t) in terms.iter().enumerate() {
            if used[i] {
                continue;
            }
            let d = (sum + *t - target).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.ok_or(Error::PoolExhausted { pool })?;
        used[i] = true;
        sum += terms[i];
        prefix.push(i as u64 + 1);
        if marks.contains(&step) && checkpoints.last().is_none_or(|&(s, _)| s != step) {
            checkpoints.push((step, (sum - target).norm()));
        }
    }
    let final_distance = (sum - target).norm();
    let monotone_at_checkpoints = checkpoints.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(SteerReport {
        target,
        steps,
        pool,
        prefix,
        initial_distance,
        checkpoints,
        final_sum: sum,
        final_distance,
        monotone_at_checkpoints,
        improved: final_distance < initial_distance,
    })
}
