//! Q-learning anypath forwarding: candidate ranking, priority-scheduled
//! holding, overhearing suppression and sink-driven list-length control.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packet::{NodeId, PacketHeader, PacketKey, PacketKind, RoutingKnowledge};
use crate::qlearning::{self, QParams};
use crate::world::{NodeState, Region};

/// Linear holding schedule `tau(n) = k (n - 1)` with `k = 2 t_max / h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoldingParams {
    /// Priority gap that is guaranteed to suppress, when the schedule was
    /// derived from one.
    pub h: Option<u32>,
    /// Worst-case one-hop propagation delay `R / v0`.
    pub t_max: f64,
    /// Holding step between adjacent priorities.
    pub k: f64,
}

impl HoldingParams {
    pub fn from_h(h: u32, range_m: f64, sound_speed: f64) -> Result<Self> {
        if h == 0 {
            return Err(Error::Config("holding.h must be >= 1".into()));
        }
        let t_max = range_m / sound_speed;
        Ok(HoldingParams {
            h: Some(h),
            t_max,
            k: 2.0 * t_max / f64::from(h),
        })
    }

    pub fn from_k(k: f64, range_m: f64, sound_speed: f64) -> Result<Self> {
        let t_max = range_m / sound_speed;
        if !(k > 0.0 && k <= 2.0 * t_max * (1.0 + 1e-12)) {
            return Err(Error::Config(format!(
                "holding.k must lie in (0, {}] s, got {k}",
                2.0 * t_max
            )));
        }
        Ok(HoldingParams { h: None, t_max, k })
    }

    /// Intercept of the linear schedule; pins `tau(1) = 0`.
    pub fn b(&self) -> f64 {
        -self.k
    }
}

/// Holding time of the node at 1-based priority `n`.
pub fn holding_time(n: usize, params: &HoldingParams) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("holding_time", "priority index starts at 1"));
    }
    Ok(params.k * n as f64 + params.b())
}

/// Everything a node needs besides its own state to make a routing decision.
#[derive(Debug, Clone, Copy)]
pub struct QlfrContext<'a> {
    pub region: &'a Region,
    pub q: QParams,
    /// Normaliser of the depth cost, set to the transmission range.
    pub d_max: f64,
    pub initial_energy_j: f64,
    pub staleness_s: f64,
    pub holding: HoldingParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub id: NodeId,
    /// One-step target `r(i, j) + gamma V(j)` used for ranking.
    pub score: f64,
    pub reward: f64,
    pub knowledge: RoutingKnowledge,
}

/// Ranks every neighbour strictly shallower than `own`, best first, ties to the
/// lower id.
pub fn rank_candidates(
    own: &RoutingKnowledge,
    neighbors: impl IntoIterator<Item = (NodeId, RoutingKnowledge)>,
    ctx: &QlfrContext<'_>,
) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    for (id, k) in neighbors {
        if k.depth_m >= own.depth_m {
            continue;
        }
        let r = qlearning::reward(own, &k, ctx.initial_energy_j, ctx.d_max)?;
        out.push(Candidate {
            id,
            score: r + ctx.q.gamma * k.v_value,
            reward: r,
            knowledge: k,
        });
    }
    out.sort_by(|a, b| match b.score.total_cmp(&a.score) {
        Ordering::Equal => a.id.cmp(&b.id),
        o => o,
    });
    Ok(out)
}

/// Candidate list a node would embed right now. Empty means a void.
pub fn build_priority_list(
    node: &NodeState,
    list_length: usize,
    now: f64,
    ctx: &QlfrContext<'_>,
) -> Result<Vec<Candidate>> {
    let own = node.knowledge(ctx.region);
    let mut ranked = rank_candidates(
        &own,
        node.fresh_neighbors(now, ctx.staleness_s)
            .map(|(id, e)| (id, e.knowledge)),
        ctx,
    )?;
    ranked.truncate(list_length);
    Ok(ranked)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    NotListed,
    AlreadyForwarded,
    /// The receiver is not shallower than the sender (depth-greedy rule).
    NotShallower,
    /// Already handled this packet (depth-greedy history buffer).
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RxAction {
    /// Hello packet: knowledge absorbed, nothing to forward.
    Ignore,
    /// Header failed structural checks.
    Corrupt,
    Drop(DropReason),
    /// A pending forward of the same packet was cancelled.
    Cancel,
    /// Hold for `delay` seconds, then forward.
    Schedule { delay: f64, priority: usize },
}

/// Receive path for a decoded packet at a non-sink node.
///
/// Sender knowledge is always recorded first, whether or not the node is a
/// designated forwarder.
pub fn on_receive(
    node: &mut NodeState,
    pkt: &PacketHeader,
    now: f64,
    ctx: &QlfrContext<'_>,
) -> Result<RxAction> {
    if !pkt.is_well_formed() || pkt.sender == node.id {
        return Ok(RxAction::Corrupt);
    }
    node.update_neighbor_knowledge(pkt.sender, pkt.knowledge, now, ctx.staleness_s);
    if pkt.kind == PacketKind::Hello {
        return Ok(RxAction::Ignore);
    }
    node.seen.touch(pkt.key);
    if on_overhear_during_hold(node, pkt.key) {
        return Ok(RxAction::Cancel);
    }
    let Some(priority) = pkt.priority_of(node.id) else {
        return Ok(RxAction::Drop(DropReason::NotListed));
    };
    if node.forwarded.contains(&pkt.key) {
        return Ok(RxAction::Drop(DropReason::AlreadyForwarded));
    }
    let delay = holding_time(priority, &ctx.holding)?;
    node.pending.insert(pkt.key, pkt.clone());
    Ok(RxAction::Schedule { delay, priority })
}

/// Cancels a pending forward of `key`. Returns true if one existed.
pub fn on_overhear_during_hold(node: &mut NodeState, key: PacketKey) -> bool {
    node.pending.remove(&key).is_some()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Forward {
    Transmit(PacketHeader),
    /// No shallower neighbour is known.
    Void,
}

/// Builds the outgoing header for `base` at `node`: fresh priority list, Q
/// update toward the head candidate, then the node's own knowledge.
pub fn prepare_transmission(
    node: &mut NodeState,
    base: &PacketHeader,
    list_length: usize,
    now: f64,
    ctx: &QlfrContext<'_>,
) -> Result<Forward> {
    let list = build_priority_list(node, list_length, now, ctx)?;
    let Some(head) = list.first() else {
        return Ok(Forward::Void);
    };
    let q_old = node.q_table.get(&head.id).copied().unwrap_or(0.0);
    let q_new = qlearning::q_update(q_old, head.reward, head.knowledge.v_value, &ctx.q);
    debug_assert!(
        q_new <= 1e-12 && q_new >= ctx.q.q_floor() - 1e-9,
        "Q-value {q_new} escaped its bound"
    );
    node.q_table.insert(head.id, q_new);
    node.v_value = qlearning::v_value(&node.q_table);
    node.forwarded.touch(base.key);
    Ok(Forward::Transmit(PacketHeader {
        kind: PacketKind::Data,
        key: base.key,
        sender: node.id,
        knowledge: node.knowledge(ctx.region),
        list_length,
        priority_list: list.iter().map(|c| c.id).collect(),
        total_generated: base.total_generated,
        suppression_directive: base.suppression_directive,
        created_at: base.created_at,
    }))
}

/// Hold timer expiry. `None` if the forward was cancelled meanwhile.
pub fn on_hold_expire(
    node: &mut NodeState,
    key: PacketKey,
    now: f64,
    ctx: &QlfrContext<'_>,
) -> Result<Option<Forward>> {
    let Some(received) = node.pending.remove(&key) else {
        return Ok(None);
    };
    let len = received.list_length.max(1);
    prepare_transmission(node, &received, len, now, ctx).map(Some)
}

/// Sink-side list-length controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuppressionState {
    pub current_list_length: usize,
    pub max_list_length: usize,
    pub pdr_threshold: f64,
    pub observed_pdr: f64,
}

impl SuppressionState {
    pub fn new(initial: usize, max: usize, threshold: f64) -> Self {
        SuppressionState {
            current_list_length: initial.clamp(1, max.max(1)),
            max_list_length: max.max(1),
            pdr_threshold: threshold,
            observed_pdr: 0.0,
        }
    }
}

/// Shrinks the list when the observed delivery ratio beats the threshold and
/// grows it when it falls short. Returns the new length.
pub fn suppression_adjust(state: &mut SuppressionState, delivered: u64, total_generated: u64) -> usize {
    if total_generated == 0 {
        return state.current_list_length;
    }
    state.observed_pdr = delivered as f64 / total_generated as f64;
    if state.observed_pdr > state.pdr_threshold {
        state.current_list_length = state.current_list_length.saturating_sub(1).max(1);
    } else if state.observed_pdr < state.pdr_threshold {
        state.current_list_length = (state.current_list_length + 1).min(state.max_list_length);
    }
    state.current_list_length
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{NodeKind, Position};

    const REGION: Region = Region {
        width_m: 500.0,
        length_m: 500.0,
        height_m: 500.0,
    };

    fn ctx(holding: HoldingParams) -> QlfrContext<'static> {
        QlfrContext {
            region: &REGION,
            q: QParams::default(),
            d_max: 150.0,
            initial_energy_j: 100.0,
            staleness_s: 100.0,
            holding,
        }
    }

    fn default_holding() -> HoldingParams {
        HoldingParams::from_h(4, 150.0, 1500.0).unwrap()
    }

    fn node_at_depth(id: NodeId, depth: f64) -> NodeState {
        NodeState::new(id, NodeKind::Sensor, Position::new(0.0, 0.0, REGION.height_m - depth), 100.0)
    }

    fn rk(v: f64, depth: f64) -> RoutingKnowledge {
        RoutingKnowledge {
            v_value: v,
            depth_m: depth,
            residual_energy_j: 100.0,
        }
    }

    fn data(sender: NodeId, list: Vec<NodeId>) -> PacketHeader {
        PacketHeader {
            kind: PacketKind::Data,
            key: PacketKey { source: 99, seq: 1 },
            sender,
            knowledge: rk(0.0, 200.0),
            list_length: list.len().max(1),
            priority_list: list,
            total_generated: 1,
            suppression_directive: None,
            created_at: 0.0,
        }
    }

    #[test]
    fn holding_schedule_values() {
        let p = default_holding();
        assert!((p.t_max - 0.1).abs() < 1e-15);
        assert!((p.k - 0.05).abs() < 1e-15);
        assert_eq!(holding_time(1, &p).unwrap(), 0.0);
        assert!((holding_time(3, &p).unwrap() - 0.1).abs() < 1e-15);
        let h1 = HoldingParams::from_h(1, 150.0, 1500.0).unwrap();
        assert!((h1.k - 0.2).abs() < 1e-15);
        assert!((holding_time(2, &h1).unwrap() - 0.2).abs() < 1e-15);
        assert!(holding_time(0, &p).is_err());
        assert!(HoldingParams::from_k(0.3, 150.0, 1500.0).is_err());
        assert!(HoldingParams::from_h(0, 150.0, 1500.0).is_err());
    }

    #[test]
    fn ranking_sorts_by_score() {
        // Neighbour B's score beats A's, so B heads the list.
        let own = rk(0.0, 100.0);
        let c = ctx(default_holding());
        let a = (1, rk(-1.0 / 0.8, 50.0));
        let b = (2, rk(0.0, 60.0));
        let ranked = rank_candidates(&own, [a, b], &c).unwrap();
        assert!(ranked[0].score > ranked[1].score);
        assert_eq!(ranked.iter().map(|c| c.id).collect::<Vec<_>>(), vec![2, 1]);
    }

    #[test]
    fn deeper_neighbours_are_filtered() {
        let own = rk(0.0, 100.0);
        let c = ctx(default_holding());
        let ranked = rank_candidates(&own, [(1, rk(0.0, 100.0)), (2, rk(0.0, 140.0))], &c).unwrap();
        assert!(ranked.is_empty());
    }

    #[test]
    fn ties_break_to_lower_id() {
        let own = rk(0.0, 100.0);
        let c = ctx(default_holding());
        let ranked = rank_candidates(&own, [(7, rk(0.0, 40.0)), (3, rk(0.0, 40.0))], &c).unwrap();
        assert_eq!(ranked[0].id, 3);
    }

    #[test]
    fn unlisted_receiver_drops_but_learns() {
        let c = ctx(default_holding());
        let mut n = node_at_depth(5, 150.0);
        let act = on_receive(&mut n, &data(1, vec![2, 3]), 1.0, &c).unwrap();
        assert_eq!(act, RxAction::Drop(DropReason::NotListed));
        assert!(n.neighbors.contains_key(&1));
    }

    #[test]
    fn list_head_schedules_immediately() {
        let c = ctx(default_holding());
        let mut n = node_at_depth(2, 150.0);
        let act = on_receive(&mut n, &data(1, vec![2, 3]), 1.0, &c).unwrap();
        assert_eq!(act, RxAction::Schedule { delay: 0.0, priority: 1 });
        let mut n3 = node_at_depth(3, 150.0);
        let act = on_receive(&mut n3, &data(1, vec![2, 3]), 1.0, &c).unwrap();
        assert_eq!(act, RxAction::Schedule { delay: 0.05, priority: 2 });
    }

    #[test]
    fn forwarded_packets_are_dropped() {
        let c = ctx(default_holding());
        let mut n = node_at_depth(2, 150.0);
        n.forwarded.touch(PacketKey { source: 99, seq: 1 });
        let act = on_receive(&mut n, &data(1, vec![2]), 1.0, &c).unwrap();
        assert_eq!(act, RxAction::Drop(DropReason::AlreadyForwarded));
    }

    #[test]
    fn overhearing_cancels_only_matching_key() {
        let c = ctx(default_holding());
        let mut n = node_at_depth(3, 150.0);
        on_receive(&mut n, &data(1, vec![2, 3]), 1.0, &c).unwrap();
        assert!(!on_overhear_during_hold(&mut n, PacketKey { source: 99, seq: 2 }));
        let act = on_receive(&mut n, &data(2, vec![8]), 1.02, &c).unwrap();
        assert_eq!(act, RxAction::Cancel);
        // Timer fires after the cancel: nothing to send.
        assert_eq!(on_hold_expire(&mut n, PacketKey { source: 99, seq: 1 }, 1.05, &c).unwrap(), None);
    }

    #[test]
    fn overhearing_after_send_has_no_effect() {
        let c = ctx(default_holding());
        let mut n = node_at_depth(2, 150.0);
        n.update_neighbor_knowledge(7, rk(0.0, 20.0), 0.5, 100.0);
        on_receive(&mut n, &data(1, vec![2]), 1.0, &c).unwrap();
        let f = on_hold_expire(&mut n, PacketKey { source: 99, seq: 1 }, 1.0, &c).unwrap();
        assert!(matches!(f, Some(Forward::Transmit(_))));
        assert!(!on_overhear_during_hold(&mut n, PacketKey { source: 99, seq: 1 }));
    }

    #[test]
    fn relay_rewrites_header_with_own_knowledge() {
        let c = ctx(default_holding());
        let mut n = node_at_depth(2, 150.0);
        n.residual_energy_j = 80.0;
        n.update_neighbor_knowledge(7, rk(-0.2, 20.0), 0.5, 100.0);
        n.update_neighbor_knowledge(8, rk(0.0, 100.0), 0.5, 100.0);
        on_receive(&mut n, &data(1, vec![2]), 1.0, &c).unwrap();
        let Some(Forward::Transmit(h)) =
            on_hold_expire(&mut n, PacketKey { source: 99, seq: 1 }, 1.0, &c).unwrap()
        else {
            panic!("expected a transmission");
        };
        assert_eq!(h.sender, 2);
        assert_eq!(h.knowledge.depth_m, 150.0);
        assert_eq!(h.knowledge.residual_energy_j, 80.0);
        assert_eq!(h.priority_list[0], 7);
        assert!(n.q_table.contains_key(&7));
        assert_eq!(n.v_value, n.q_table[&7]);
        assert!(n.forwarded.contains(&h.key));
    }

    #[test]
    fn void_relay_reports_void() {
        let c = ctx(default_holding());
        let mut n = node_at_depth(2, 150.0);
        n.update_neighbor_knowledge(9, rk(0.0, 200.0), 0.5, 100.0);
        on_receive(&mut n, &data(1, vec![2]), 1.0, &c).unwrap();
        let f = on_hold_expire(&mut n, PacketKey { source: 99, seq: 1 }, 1.0, &c).unwrap();
        assert_eq!(f, Some(Forward::Void));
    }

    #[test]
    fn suppression_flow() {
        let mut s = SuppressionState::new(3, 4, 0.9);
        assert_eq!(suppression_adjust(&mut s, 95, 100), 2);
        assert_eq!(suppression_adjust(&mut s, 80, 100), 3);
        let mut eq = SuppressionState::new(2, 4, 0.9);
        assert_eq!(suppression_adjust(&mut eq, 9, 10), 2);
        let mut floor = SuppressionState::new(1, 4, 0.9);
        assert_eq!(suppression_adjust(&mut floor, 10, 10), 1);
        let mut cap = SuppressionState::new(4, 4, 0.9);
        assert_eq!(suppression_adjust(&mut cap, 0, 10), 4);
    }
}
