//! Depth-based routing baseline: every receiver shallower than the sender is a
//! candidate, and the holding time shrinks with the depth advance so that the
//! shallowest receiver fires first.

use crate::packet::{PacketHeader, PacketKind};
use crate::qlfr::{DropReason, RxAction};
use crate::world::{NodeState, Region};

/// Per-id offset that breaks exact holding-time ties deterministically.
pub const ID_JITTER_S: f64 = 1e-6;

/// `(2 t_max / R) (R - advance) + jitter(id)`.
pub fn dbr_holding_time(depth_advance_m: f64, range_m: f64, t_max: f64, node_id: u32) -> f64 {
    let slack = (range_m - depth_advance_m).clamp(0.0, range_m);
    2.0 * t_max / range_m * slack + ID_JITTER_S * f64::from(node_id)
}

pub fn dbr_on_receive(
    node: &mut NodeState,
    pkt: &PacketHeader,
    region: &Region,
    range_m: f64,
    t_max: f64,
) -> RxAction {
    if !pkt.is_well_formed() || pkt.sender == node.id {
        return RxAction::Corrupt;
    }
    if pkt.kind == PacketKind::Hello {
        return RxAction::Ignore;
    }
    if node.pending.remove(&pkt.key).is_some() {
        return RxAction::Cancel;
    }
    if node.seen.touch(pkt.key) || node.forwarded.contains(&pkt.key) {
        return RxAction::Drop(DropReason::Duplicate);
    }
    let advance = pkt.knowledge.depth_m - node.depth(region);
    if advance <= 0.0 {
        return RxAction::Drop(DropReason::NotShallower);
    }
    node.pending.insert(pkt.key, pkt.clone());
    RxAction::Schedule {
        delay: dbr_holding_time(advance, range_m, t_max, node.id),
        priority: 0,
    }
}

/// Header for the relayed copy, or `None` if the hold was cancelled.
pub fn dbr_on_hold_expire(node: &mut NodeState, key: crate::packet::PacketKey, region: &Region) -> Option<PacketHeader> {
    let mut pkt = node.pending.remove(&key)?;
    node.forwarded.touch(key);
    pkt.sender = node.id;
    pkt.knowledge = node.knowledge(region);
    Some(pkt)
}
