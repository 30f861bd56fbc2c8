//! Reward shaping and the tabular Q-value update used for next-hop ranking.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packet::{NodeId, RoutingKnowledge};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QParams {
    /// Discount factor, in `[0, 1]`.
    pub gamma: f64,
    /// Learning rate, in `(0, 1]`.
    pub alpha: f64,
}

impl Default for QParams {
    fn default() -> Self {
        QParams {
            gamma: 0.8,
            alpha: 0.5,
        }
    }
}

impl QParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "qlearning.gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "qlearning.alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Lower bound on any Q-value, `-3 / (1 - gamma)`.
    pub fn q_floor(&self) -> f64 {
        if self.gamma < 1.0 {
            -3.0 / (1.0 - self.gamma)
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Energy cost `1 - e_res / e_ini`: 0 on a full battery, 1 on an empty one.
pub fn energy_cost(residual_j: f64, initial_j: f64) -> Result<f64> {
    if !(initial_j > 0.0) {
        return Err(Error::domain(
            "energy_cost",
            format!("initial energy must be > 0, got {initial_j}"),
        ));
    }
    if !(0.0..=initial_j).contains(&residual_j) {
        return Err(Error::domain(
            "energy_cost",
            format!("residual energy {residual_j} outside [0, {initial_j}]"),
        ));
    }
    Ok(1.0 - residual_j / initial_j)
}

/// Depth cost `(1 - (depth_sender - depth_neighbor) / d_max) / 2`.
pub fn depth_cost(depth_sender: f64, depth_neighbor: f64, d_max: f64) -> Result<f64> {
    if !(d_max > 0.0) {
        return Err(Error::domain("depth_cost", format!("d_max must be > 0, got {d_max}")));
    }
    let d = depth_sender - depth_neighbor;
    if d.abs() > d_max {
        return Err(Error::domain(
            "depth_cost",
            format!("depth difference {d} exceeds d_max {d_max}"),
        ));
    }
    Ok(0.5 * (1.0 - d / d_max))
}

/// Reward for handing a packet from the sender to a neighbour; always in `[-3, 0]`.
///
/// The neighbour's depth difference is clamped to `d_max` so that slightly
/// stale advertisements from a node that drifted out of range stay in domain.
pub fn reward(
    sender: &RoutingKnowledge,
    neighbor: &RoutingKnowledge,
    initial_energy_j: f64,
    d_max: f64,
) -> Result<f64> {
    let ce_i = energy_cost(sender.residual_energy_j, initial_energy_j)?;
    let ce_j = energy_cost(neighbor.residual_energy_j.min(initial_energy_j), initial_energy_j)?;
    let d = (sender.depth_m - neighbor.depth_m).clamp(-d_max, d_max);
    let cd = depth_cost(d, 0.0, d_max)?;
    Ok(-ce_i - ce_j - cd)
}

/// One step of `Q <- alpha (r + gamma V') + (1 - alpha) Q`.
pub fn q_update(q_old: f64, reward: f64, v_next: f64, params: &QParams) -> f64 {
    params.alpha * (reward + params.gamma * v_next) + (1.0 - params.alpha) * q_old
}

/// Max over the table; an empty table is worth 0.
pub fn v_value(q_table: &BTreeMap<NodeId, f64>) -> f64 {
    q_table.values().copied().reduce(f64::max).unwrap_or(0.0)
}
