use std::collections::BTreeMap;

use proptest::prelude::*;

use qlfr_core::analysis::{self, Link, StaticTopology, TopologyNode};
use qlfr_core::channel::{self, ChannelParams};
use qlfr_core::qlearning::{self, QParams};
use qlfr_core::qlfr::{holding_time, rank_candidates, suppression_adjust, HoldingParams, QlfrContext, SuppressionState};
use qlfr_core::world::{random_walk_step, NodeKind, Position, Region, SpatialGrid};
use qlfr_core::RoutingKnowledge;

fn qparams() -> impl Strategy<Value = QParams> {
    (0.0..0.99f64, 0.01..=1.0f64).prop_map(|(gamma, alpha)| QParams { gamma, alpha })
}

fn knowledge() -> impl Strategy<Value = RoutingKnowledge> {
    (-20.0..0.0f64, 0.0..300.0f64, 0.0..=100.0f64).prop_map(|(v_value, depth_m, residual_energy_j)| {
        RoutingKnowledge {
            v_value,
            depth_m,
            residual_energy_j,
        }
    })
}

/// Random DAG: node `i` may only list nodes with a larger index; the last
/// two nodes are sinks and the first two are sources.
fn random_dag() -> impl Strategy<Value = StaticTopology> {
    (4usize..12)
        .prop_flat_map(|n| {
            let lists = (0..n)
                .map(move |i| {
                    let later: Vec<u32> = ((i + 1) as u32..n as u32).collect();
                    let k = later.len().min(4);
                    (
                        proptest::sample::subsequence(later, 0..=k),
                        proptest::collection::vec(0.0..=1.0f64, 4),
                        proptest::collection::vec(10.0..150.0f64, 4),
                    )
                })
                .collect::<Vec<_>>();
            (Just(n), lists, proptest::collection::vec(0.0..50.0f64, 2))
        })
        .prop_map(|(n, lists, generated)| {
            let nodes = lists
                .into_iter()
                .enumerate()
                .map(|(i, (to, probs, dist))| {
                    let kind = if i >= n - 2 {
                        NodeKind::Sink
                    } else if i < 2 {
                        NodeKind::Source
                    } else {
                        NodeKind::Sensor
                    };
                    let candidates = if kind == NodeKind::Sink {
                        vec![]
                    } else {
                        to.iter()
                            .zip(probs.iter().zip(&dist))
                            .map(|(&to, (&prob, &distance_m))| Link { to, prob, distance_m })
                            .collect()
                    };
                    let neighbors = (0..n as u32).filter(|&m| m != i as u32).collect();
                    TopologyNode {
                        id: i as u32,
                        kind,
                        position: Position::new(0.0, 0.0, 0.0),
                        candidates,
                        neighbors,
                        generated: if i < 2 { generated[i] } else { 0.0 },
                    }
                })
                .collect();
            StaticTopology {
                nodes,
                holding_step_s: 0.05,
                sound_speed_mps: 1500.0,
                airtime_s: 0.0512,
                airtime_in_delay: true,
                tx_power_w: 2.0,
                rx_power_w: 0.5,
                run_time_s: 1000.0,
                initial_energy_j: 100.0,
            }
        })
}

proptest! {
    #[test]
    fn q_values_stay_between_floor_and_zero(
        q in qparams(),
        steps in proptest::collection::vec((-3.0..=0.0f64, 0.0..=1.0f64), 1..200),
    ) {
        let floor = q.q_floor();
        let mut value = 0.0;
        for (r, frac) in steps {
            let v_next = frac * floor;
            value = qlearning::q_update(value, r, v_next, &q);
            prop_assert!(value <= 1e-12 && value >= floor - 1e-9, "{value} outside [{floor}, 0]");
        }
    }

    #[test]
    fn q_update_is_monotone_in_reward_and_next_value(
        q in qparams(),
        q_old in -15.0..0.0f64,
        r in -3.0..0.0f64,
        dr in 0.0..1.0f64,
        v in -15.0..0.0f64,
        dv in 0.0..1.0f64,
    ) {
        let base = qlearning::q_update(q_old, r, v, &q);
        prop_assert!(qlearning::q_update(q_old, r + dr, v, &q) >= base);
        prop_assert!(qlearning::q_update(q_old, r, v + dv, &q) >= base);
    }

    #[test]
    fn v_value_dominates_every_entry(entries in proptest::collection::btree_map(0u32..50, -30.0..0.0f64, 1..20)) {
        let v = qlearning::v_value(&entries);
        prop_assert!(entries.values().all(|&q| v >= q));
        prop_assert!(entries.values().any(|&q| q == v));
    }

    #[test]
    fn reward_within_bounds(a in knowledge(), b in knowledge()) {
        let r = qlearning::reward(&a, &b, 100.0, 150.0).unwrap();
        prop_assert!((-3.0..=0.0).contains(&r));
    }

    #[test]
    fn ranking_ignores_input_order(
        own in knowledge(),
        table in proptest::collection::btree_map(0u32..40, knowledge(), 0..15),
        shift in 0usize..15,
    ) {
        let region = Region::cube(300.0);
        let ctx = QlfrContext {
            region: &region,
            q: QParams::default(),
            d_max: 300.0,
            initial_energy_j: 100.0,
            staleness_s: 4.0,
            holding: HoldingParams::from_k(0.05, 150.0, 1500.0).unwrap(),
        };
        let mut entries: Vec<(u32, RoutingKnowledge)> = table.into_iter().collect();
        let forward = rank_candidates(&own, entries.clone(), &ctx).unwrap();
        if !entries.is_empty() {
            let s = shift % entries.len();
            entries.rotate_left(s);
        }
        entries.reverse();
        let shuffled = rank_candidates(&own, entries, &ctx).unwrap();
        let ids = |v: &[qlfr_core::qlfr::Candidate]| v.iter().map(|c| c.id).collect::<Vec<_>>();
        prop_assert_eq!(ids(&forward), ids(&shuffled));
        prop_assert!(forward.iter().all(|c| c.knowledge.depth_m < own.depth_m));
        prop_assert!(forward.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn delivery_prob_falls_with_distance(d in 1.0..2000.0f64, extra in 0.0..500.0f64) {
        let ch = ChannelParams::default();
        let near = channel::packet_delivery_prob(d, &ch).unwrap();
        let far = channel::packet_delivery_prob(d + extra, &ch).unwrap();
        prop_assert!(far <= near);
        let pe = channel::bit_error_prob(d, &ch).unwrap();
        prop_assert!(pe > 0.0 && pe < 0.5);
    }

    #[test]
    fn forward_probs_sum_to_any_success(probs in proptest::collection::vec(0.0..=1.0f64, 0..12)) {
        let total: f64 = analysis::forward_probs(&probs).iter().sum();
        let miss: f64 = probs.iter().map(|p| 1.0 - p).product();
        prop_assert!((total - (1.0 - miss)).abs() <= 1e-12);
        for j in 1..=probs.len() {
            prop_assert!((analysis::candidate_forward_prob(&probs, j) - analysis::forward_probs(&probs)[j - 1]).abs() <= 1e-15);
        }
    }

    #[test]
    fn grid_matches_all_pairs(
        pts in proptest::collection::vec((0.0..300.0f64, 0.0..300.0f64, 0.0..300.0f64), 1..80),
        range in 20.0..150.0f64,
    ) {
        let positions: Vec<Position> = pts.iter().map(|&(x, y, z)| Position::new(x, y, z)).collect();
        let grid = SpatialGrid::build(positions.iter().enumerate().map(|(i, p)| (i as u32, p)), range);
        for (i, p) in positions.iter().enumerate() {
            let brute: Vec<u32> = positions
                .iter()
                .enumerate()
                .filter(|&(j, q)| j != i && p.distance(q) <= range)
                .map(|(j, _)| j as u32)
                .collect();
            prop_assert_eq!(grid.within(p, range, Some(i as u32)), brute);
        }
    }

    #[test]
    fn random_walk_stays_in_box(
        x in 0.0..300.0f64, y in 0.0..300.0f64, z in 0.0..300.0f64,
        theta in 0.0..std::f64::consts::TAU, zc in -1.0..=1.0f64,
        speed in 0.0..5.0f64, dt in 0.0..200.0f64,
    ) {
        let region = Region::cube(300.0);
        let rho = (1.0f64 - zc * zc).sqrt();
        let heading = [rho * theta.cos(), rho * theta.sin(), zc];
        let (p, h) = random_walk_step(Position::new(x, y, z), heading, speed, dt, &region);
        prop_assert!(region.contains(&p));
        let norm = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn separated_priorities_always_suppress(h in 1u32..=20, n1 in 1usize..40, gap_extra in 0usize..20) {
        let p = HoldingParams::from_h(h, 150.0, 1500.0).unwrap();
        let n2 = n1 + h as usize + gap_extra;
        // Worst case: the better candidate hears the packet t_max later and
        // its relay needs t_max more to reach the worse one.
        let lhs = p.t_max + holding_time(n1, &p).unwrap() + p.t_max;
        prop_assert!(lhs <= holding_time(n2, &p).unwrap() + 1e-12);
    }

    #[test]
    fn list_length_moves_one_step_within_bounds(
        initial in 1usize..8,
        max in 1usize..8,
        threshold in 0.0..=1.0f64,
        delivered in 0u64..1000,
        extra in 0u64..1000,
    ) {
        let mut s = SuppressionState::new(initial, max, threshold);
        let before = s.current_list_length;
        let total = delivered + extra;
        let after = suppression_adjust(&mut s, delivered, total);
        prop_assert!(after >= 1 && after <= s.max_list_length);
        prop_assert!(after.abs_diff(before) <= 1);
        if total > 0 {
            let pdr = delivered as f64 / total as f64;
            if pdr > threshold {
                prop_assert!(after <= before);
            } else if pdr < threshold {
                prop_assert!(after >= before);
            } else {
                prop_assert_eq!(after, before);
            }
        }
    }

    #[test]
    fn traffic_is_conserved(topo in random_dag()) {
        let lambda = analysis::traffic(&topo).unwrap();
        let p = analysis::delivery_probs(&topo).unwrap();
        let offered: f64 = topo.nodes.iter().map(|n| n.generated).sum();
        // Every packet visits a node at most once on a DAG.
        for &l in &lambda {
            prop_assert!(l <= offered + 1e-9);
        }
        let mut into_sinks = 0.0;
        for (u, node) in topo.nodes.iter().enumerate() {
            let probs: Vec<f64> = node.candidates.iter().map(|l| l.prob).collect();
            for (f, link) in analysis::forward_probs(&probs).iter().zip(&node.candidates) {
                if topo.nodes[link.to as usize].kind == NodeKind::Sink {
                    into_sinks += lambda[u] * f;
                }
            }
        }
        let expected: f64 = topo.nodes.iter().zip(&p).map(|(n, p)| n.generated * p).sum();
        prop_assert!(into_sinks <= offered + 1e-9);
        prop_assert!((into_sinks - expected).abs() <= 1e-9 * offered.max(1.0));
        for &pi in &p {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&pi));
        }
    }

    #[test]
    fn doubling_traffic_halves_lifetime(topo in random_dag()) {
        let base = analysis::network_lifetime(&topo, 1000.0, 100.0).unwrap();
        let mut doubled = topo.clone();
        for n in &mut doubled.nodes {
            n.generated *= 2.0;
        }
        let half = analysis::network_lifetime(&doubled, 1000.0, 100.0).unwrap();
        if base.is_finite() {
            prop_assert!((half - base / 2.0).abs() <= 1e-9 * base);
        } else {
            prop_assert!(half.is_infinite());
        }
    }
}

#[test]
fn empty_q_table_is_worth_zero() {
    assert_eq!(qlearning::v_value(&BTreeMap::new()), 0.0);
}
