//! Packet-level Monte Carlo over a frozen candidate graph.
//!
//! Every hop broadcasts once; each listed candidate decodes independently with
//! its link probability, and the highest-priority decoder relays after holding
//! for its priority slot while the others stand down. This is the forwarding
//! rule the analytical model assumes, sampled one packet at a time.

use std::collections::HashMap;

use rand::Rng;

use crate::analysis::StaticTopology;
use crate::error::{Error, Result};
use crate::packet::NodeId;
use crate::world::NodeKind;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrozenStats {
    pub trials: u64,
    pub delivered: u64,
    /// Sum of end-to-end delays over delivered trials.
    pub delay_sum_s: f64,
}

impl FrozenStats {
    pub fn delivery_ratio(&self) -> f64 {
        self.delivered as f64 / self.trials as f64
    }

    pub fn mean_delay_s(&self) -> f64 {
        if self.delivered == 0 {
            f64::NAN
        } else {
            self.delay_sum_s / self.delivered as f64
        }
    }
}

/// Sends `trials` packets from `source` and counts sink arrivals.
pub fn simulate_frozen<R: Rng + ?Sized>(
    topo: &StaticTopology,
    source: NodeId,
    trials: u64,
    rng: &mut R,
) -> Result<FrozenStats> {
    topo.validate()?;
    let index: HashMap<NodeId, usize> = topo.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let start = *index.get(&source).ok_or(Error::UnknownNode(source))?;
    let air = if topo.airtime_in_delay { topo.airtime_s } else { 0.0 };
    let mut stats = FrozenStats {
        trials,
        ..Default::default()
    };
    for _ in 0..trials {
        let mut at = start;
        let mut t = 0.0;
        // The graph is acyclic, so every walk terminates.
        loop {
            let node = &topo.nodes[at];
            if node.kind == NodeKind::Sink {
                stats.delivered += 1;
                stats.delay_sum_s += t;
                break;
            }
            let winner = node
                .candidates
                .iter()
                .enumerate()
                .find(|(_, l)| rng.random::<f64>() < l.prob);
            let Some((slot, link)) = winner else {
                break;
            };
            t += topo.holding_step_s * slot as f64 + link.distance_m / topo.sound_speed_mps + air;
            at = index[&link.to];
        }
    }
    Ok(stats)
}
