//! Attachment laws and node error statistics.

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// Root mean squared error over a window of absolute deviations. An empty
/// window (a node that has not predicted yet) scores 0.
pub fn node_rmse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Error-adapted attachment: node `k` scores `sum_i |phi_i - phi_k| / sum_j phi_j`,
/// and the scores are normalised to a distribution. Degenerate inputs (all
/// errors zero, or all equal) give the uniform distribution.
pub fn attach_probabilities(phis: &[f64]) -> Result<Vec<f64>> {
    if phis.is_empty() {
        return Err(Error::InvalidArgument("attachment needs at least one node".into()));
    }
    if let Some(bad) = phis.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "node errors must be finite and non-negative, got {bad}"
        )));
    }
    let total: f64 = phis.iter().sum();
    if total <= 0.0 {
        return Ok(uniform(phis.len()));
    }
    let raw: Vec<f64> = phis
        .iter()
        .map(|pk| phis.iter().map(|pi| (pi - pk).abs()).sum::<f64>() / total)
        .collect();
    let raw_sum: f64 = raw.iter().sum();
    if raw_sum <= 0.0 {
        return Ok(uniform(phis.len()));
    }
    Ok(raw.into_iter().map(|r| r / raw_sum).collect())
}

/// Classic degree-proportional attachment, uniform when every degree is 0.
pub fn degree_attach_probabilities(degrees: &[usize]) -> Result<Vec<f64>> {
    if degrees.is_empty() {
        return Err(Error::InvalidArgument("attachment needs at least one node".into()));
    }
    let total: usize = degrees.iter().sum();
    if total == 0 {
        return Ok(uniform(degrees.len()));
    }
    Ok(degrees.iter().map(|&d| d as f64 / total as f64).collect())
}

/// Draws one index proportionally to `weights`; uniform if they sum to 0.
pub fn sample_index(weights: &[f64], rng: &mut StreamRng) -> usize {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return rng::index(rng, weights.len());
    }
    let target = rng::unit(rng) * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last_positive = i;
        if target < acc {
            return i;
        }
    }
    last_positive
}

/// Draws `count` distinct indices, each draw proportional to the weights of
/// the indices not yet taken.
pub fn sample_without_replacement(
    weights: &[f64],
    count: usize,
    rng: &mut StreamRng,
) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut picked = Vec::with_capacity(count.min(weights.len()));
    while picked.len() < count && !remaining.is_empty() {
        let w: Vec<f64> = remaining.iter().map(|&i| weights[i]).collect();
        let pos = sample_index(&w, rng);
        picked.push(remaining.remove(pos));
    }
    picked
}
