//! Closed-form performance model of anypath forwarding over a frozen topology.
//!
//! Each sensor holds an ordered candidate list. A hop succeeds through the
//! highest-priority candidate that decodes the packet, so candidate `j` carries
//! the packet with probability `p_j * prod_{m<j} (1 - p_m)`. Delivery ratio,
//! delay, traffic and energy follow by recursion over the candidate DAG.
//!
//! Three delay figures are produced. `weighted` is the plain recursion
//! `T_i = sum_j (T_ij + T_j) P_ij`, whose weights do not sum to one, and
//! `normalized` divides it by the delivery probability. Neither is the mean
//! delay of delivered packets: the branch weights ignore whether the branch
//! goes on to reach a sink, and the hold is charged at the sender using its
//! own averaged rank. `conditional` reweights each branch by
//! `P_ij * P_j / P_i` and charges the hold `tau(rank of j)` to the hop that
//! assigned it, which is exact under frozen-list forwarding.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelParams};
use crate::error::{Error, Result};
use crate::packet::NodeId;
use crate::world::{NodeKind, Position};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub to: NodeId,
    pub prob: f64,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub position: Position,
    /// Forwarding candidates, highest priority first.
    pub candidates: Vec<Link>,
    /// Every node within range; these overhear this node's transmissions.
    pub neighbors: Vec<NodeId>,
    /// Packets originated here over the run.
    pub generated: f64,
}

/// Static snapshot the model is evaluated on. Serialised as the simulator's
/// topology snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticTopology {
    pub nodes: Vec<TopologyNode>,
    pub holding_step_s: f64,
    pub sound_speed_mps: f64,
    pub airtime_s: f64,
    /// Whether `airtime_s` is part of each hop's latency.
    pub airtime_in_delay: bool,
    pub tx_power_w: f64,
    pub rx_power_w: f64,
    pub run_time_s: f64,
    pub initial_energy_j: f64,
}

/// Geometry-only description used by [`StaticTopology::from_geometry`].
#[derive(Debug, Clone)]
pub struct PlacedNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub position: Position,
    pub candidates: Vec<NodeId>,
    pub generated: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    pub channel: ChannelParams,
    pub range_m: f64,
    pub holding_step_s: f64,
    pub sound_speed_mps: f64,
    pub airtime_in_delay: bool,
    pub tx_power_w: f64,
    pub rx_power_w: f64,
    pub run_time_s: f64,
    pub initial_energy_j: f64,
}

impl StaticTopology {
    /// Fills in link probabilities from the channel model and neighbour sets
    /// from the transmission range.
    pub fn from_geometry(placed: &[PlacedNode], params: &ModelParams) -> Result<Self> {
        let pos: HashMap<NodeId, Position> = placed.iter().map(|n| (n.id, n.position)).collect();
        let mut nodes = Vec::with_capacity(placed.len());
        for n in placed {
            let mut candidates = Vec::with_capacity(n.candidates.len());
            for &c in &n.candidates {
                let p = pos.get(&c).ok_or(Error::UnknownNode(c))?;
                let d = n.position.distance(p);
                candidates.push(Link {
                    to: c,
                    prob: channel::packet_delivery_prob(d, &params.channel)?,
                    distance_m: d,
                });
            }
            let neighbors = placed
                .iter()
                .filter(|m| m.id != n.id && n.position.distance(&m.position) <= params.range_m)
                .map(|m| m.id)
                .collect();
            nodes.push(TopologyNode {
                id: n.id,
                kind: n.kind,
                position: n.position,
                candidates,
                neighbors,
                generated: n.generated,
            });
        }
        let topo = StaticTopology {
            nodes,
            holding_step_s: params.holding_step_s,
            sound_speed_mps: params.sound_speed_mps,
            airtime_s: params.channel.airtime(),
            airtime_in_delay: params.airtime_in_delay,
            tx_power_w: params.tx_power_w,
            rx_power_w: params.rx_power_w,
            run_time_s: params.run_time_s,
            initial_energy_j: params.initial_energy_j,
        };
        topo.validate()?;
        Ok(topo)
    }

    pub fn validate(&self) -> Result<()> {
        let index = self.index();
        for n in &self.nodes {
            for l in &n.candidates {
                if !index.contains_key(&l.to) {
                    return Err(Error::UnknownNode(l.to));
                }
                if !(0.0..=1.0).contains(&l.prob) {
                    return Err(Error::Config(format!(
                        "link {} -> {} has probability {}",
                        n.id, l.to, l.prob
                    )));
                }
            }
            for m in &n.neighbors {
                if !index.contains_key(m) {
                    return Err(Error::UnknownNode(*m));
                }
            }
        }
        self.reverse_topological_order().map(|_| ())
    }

    fn index(&self) -> HashMap<NodeId, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect()
    }

    fn idx(&self, id: NodeId) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n.id == id)
            .ok_or(Error::UnknownNode(id))
    }

    /// Node indices ordered so every candidate precedes the nodes that list it.
    fn reverse_topological_order(&self) -> Result<Vec<usize>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let index = self.index();
        let mut mark = vec![Mark::New; self.nodes.len()];
        let mut order = Vec::with_capacity(self.nodes.len());
        for root in 0..self.nodes.len() {
            if mark[root] != Mark::New {
                continue;
            }
            // Iterative DFS emitting nodes in post-order.
            let mut stack = vec![(root, 0usize)];
            mark[root] = Mark::Active;
            while let Some(&mut (u, ref mut next)) = stack.last_mut() {
                if let Some(link) = self.nodes[u].candidates.get(*next) {
                    *next += 1;
                    let v = index[&link.to];
                    match mark[v] {
                        Mark::New => {
                            mark[v] = Mark::Active;
                            stack.push((v, 0));
                        }
                        Mark::Active => return Err(Error::Cycle(self.nodes[v].id)),
                        Mark::Done => {}
                    }
                } else {
                    mark[u] = Mark::Done;
                    order.push(u);
                    stack.pop();
                }
            }
        }
        Ok(order)
    }

    fn hop_latency(&self, link: &Link) -> f64 {
        let air = if self.airtime_in_delay { self.airtime_s } else { 0.0 };
        link.distance_m / self.sound_speed_mps + air
    }

    fn holding_time(&self, priority: usize) -> f64 {
        self.holding_step_s * (priority as f64 - 1.0)
    }
}

/// Probability that candidate `j` (1-based) forwards: it decodes and every
/// higher-priority candidate failed.
pub fn candidate_forward_prob(probs: &[f64], j: usize) -> f64 {
    if j == 0 || j > probs.len() {
        return 0.0;
    }
    probs[..j - 1].iter().map(|p| 1.0 - p).product::<f64>() * probs[j - 1]
}

/// All per-candidate forwarding probabilities of one list.
pub fn forward_probs(probs: &[f64]) -> Vec<f64> {
    let mut miss = 1.0;
    probs
        .iter()
        .map(|p| {
            let f = miss * p;
            miss *= 1.0 - p;
            f
        })
        .collect()
}

fn link_forward_probs(node: &TopologyNode) -> Vec<f64> {
    let probs: Vec<f64> = node.candidates.iter().map(|l| l.prob).collect();
    forward_probs(&probs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayEstimate {
    /// Delivery-weighted recursion as written; not an expectation.
    pub weighted: f64,
    /// `weighted / P(deliver)`.
    pub normalized: f64,
    /// Expected delay given delivery; NaN when the sink is unreachable.
    pub conditional: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeReport {
    pub id: NodeId,
    pub kind: NodeKind,
    pub delivery_prob: f64,
    pub holding_raw_s: f64,
    pub holding_expected_s: f64,
    pub holding_conditional_s: f64,
    pub delay: DelayEstimate,
    pub traffic: f64,
    pub energy_j: f64,
    pub lifetime_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub nodes: Vec<NodeReport>,
    /// Source-traffic-weighted expected delivery ratio.
    pub expected_pdr: f64,
    /// Source-traffic-weighted conditional delay of delivered packets.
    pub expected_delay_s: f64,
    pub total_energy_j: f64,
    pub network_lifetime_s: f64,
}

impl ModelReport {
    pub fn node(&self, id: NodeId) -> Option<&NodeReport> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Per-node CSV, one row per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "id,kind,p_to_sink,t_to_sink_weighted_s,t_to_sink_normalized_s,t_to_sink_conditional_s,holding_expected_s,traffic,energy_j,lifetime_s"
        )?;
        for n in &self.nodes {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                n.id,
                n.kind.as_str(),
                n.delivery_prob,
                n.delay.weighted,
                n.delay.normalized,
                n.delay.conditional,
                n.holding_expected_s,
                n.traffic,
                n.energy_j,
                n.lifetime_s
            )?;
        }
        Ok(())
    }
}

/// Delivery probability to any sink for every node, in node order.
pub fn delivery_probs(topo: &StaticTopology) -> Result<Vec<f64>> {
    let order = topo.reverse_topological_order()?;
    let index = topo.index();
    let mut p = vec![0.0; topo.nodes.len()];
    for u in order {
        let node = &topo.nodes[u];
        p[u] = if node.kind == NodeKind::Sink {
            1.0
        } else {
            link_forward_probs(node)
                .iter()
                .zip(&node.candidates)
                .map(|(f, l)| f * p[index[&l.to]])
                .sum()
        };
    }
    Ok(p)
}

pub fn delivery_prob_to_sink(topo: &StaticTopology, node: NodeId) -> Result<f64> {
    let i = topo.idx(node)?;
    Ok(delivery_probs(topo)?[i])
}

/// Outgoing traffic per node: own generation plus everything candidates hand
/// over from upstream senders. Sinks absorb and send nothing.
pub fn traffic(topo: &StaticTopology) -> Result<Vec<f64>> {
    let mut order = topo.reverse_topological_order()?;
    order.reverse();
    let index = topo.index();
    let mut lambda: Vec<f64> = topo.nodes.iter().map(|n| n.generated).collect();
    let mut inbound = vec![0.0; topo.nodes.len()];
    for u in order {
        let node = &topo.nodes[u];
        if node.kind == NodeKind::Sink {
            lambda[u] = 0.0;
            continue;
        }
        lambda[u] += inbound[u];
        for (f, l) in link_forward_probs(node).iter().zip(&node.candidates) {
            inbound[index[&l.to]] += f * lambda[u];
        }
    }
    Ok(lambda)
}

pub fn outgoing_traffic(topo: &StaticTopology) -> Result<BTreeMap<NodeId, f64>> {
    let lambda = traffic(topo)?;
    Ok(topo.nodes.iter().zip(lambda).map(|(n, l)| (n.id, l)).collect())
}

/// Holding time per node in three readings.
#[derive(Debug, Clone)]
struct Holding {
    /// Literal `sum_k tau(n_ki) P_ki` over senders `k`.
    raw: Vec<f64>,
    /// Same terms weighted by each sender's share of the node's inbound traffic.
    expected: Vec<f64>,
    /// Mean hold given the node forwards: `sum_k tau P_ki lambda_k / sum_k P_ki lambda_k`.
    conditional: Vec<f64>,
}

fn holding_times(topo: &StaticTopology, lambda: &[f64]) -> Holding {
    let index = topo.index();
    let n = topo.nodes.len();
    // Per receiving node: (sender index, tau, P) for every list it appears on.
    let mut terms: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); n];
    for (u, node) in topo.nodes.iter().enumerate() {
        for (pos, (f, l)) in link_forward_probs(node).iter().zip(&node.candidates).enumerate() {
            terms[index[&l.to]].push((u, topo.holding_time(pos + 1), *f));
        }
    }
    let mut h = Holding {
        raw: vec![0.0; n],
        expected: vec![0.0; n],
        conditional: vec![0.0; n],
    };
    for (v, t) in terms.iter().enumerate() {
        h.raw[v] = t.iter().map(|(_, tau, p)| tau * p).sum();
        let inflow: f64 = t.iter().map(|(u, _, p)| p * lambda[*u]).sum();
        let senders_load: f64 = t.iter().map(|(u, _, _)| lambda[*u]).sum();
        if senders_load > 0.0 {
            h.expected[v] = t.iter().map(|(u, tau, p)| lambda[*u] / senders_load * tau * p).sum();
        } else if !t.is_empty() {
            h.expected[v] = h.raw[v] / t.len() as f64;
        }
        if inflow > 0.0 {
            h.conditional[v] = t.iter().map(|(u, tau, p)| tau * p * lambda[*u]).sum::<f64>() / inflow;
        }
    }
    h
}

/// Holding time of `node` with each sender's term weighted by its share of
/// the traffic offered to the node.
pub fn expected_holding_time(topo: &StaticTopology, node: NodeId) -> Result<f64> {
    let i = topo.idx(node)?;
    let lambda = traffic(topo)?;
    Ok(holding_times(topo, &lambda).expected[i])
}

/// Literal per-sender sum `sum_k tau(n_ik) P_ki`.
pub fn raw_holding_time(topo: &StaticTopology, node: NodeId) -> Result<f64> {
    let i = topo.idx(node)?;
    let lambda = traffic(topo)?;
    Ok(holding_times(topo, &lambda).raw[i])
}

/// Mean hold of `node` over the packets it actually forwards.
pub fn conditional_holding_time(topo: &StaticTopology, node: NodeId) -> Result<f64> {
    let i = topo.idx(node)?;
    let lambda = traffic(topo)?;
    Ok(holding_times(topo, &lambda).conditional[i])
}

fn delays(topo: &StaticTopology, p: &[f64], tau: &[f64]) -> Result<Vec<DelayEstimate>> {
    let order = topo.reverse_topological_order()?;
    let index = topo.index();
    let mut out = vec![
        DelayEstimate {
            weighted: 0.0,
            normalized: 0.0,
            conditional: 0.0,
        };
        topo.nodes.len()
    ];
    for u in order {
        let node = &topo.nodes[u];
        if node.kind == NodeKind::Sink {
            continue;
        }
        let fwd = link_forward_probs(node);
        let mut weighted = 0.0;
        let mut cond_num = 0.0;
        for (pos, (f, l)) in fwd.iter().zip(&node.candidates).enumerate() {
            let v = index[&l.to];
            let hop = topo.hop_latency(l);
            weighted += (tau[u] + hop + out[v].weighted) * f;
            if p[v] > 0.0 {
                // The hold is charged to the hop that assigned the priority.
                cond_num += (topo.holding_time(pos + 1) + hop + out[v].conditional) * f * p[v];
            }
        }
        out[u] = DelayEstimate {
            weighted,
            normalized: if p[u] > 0.0 { weighted / p[u] } else { f64::NAN },
            conditional: if p[u] > 0.0 { cond_num / p[u] } else { f64::NAN },
        };
    }
    Ok(out)
}

pub fn expected_delay_to_sink(topo: &StaticTopology, node: NodeId) -> Result<DelayEstimate> {
    let i = topo.idx(node)?;
    let p = delivery_probs(topo)?;
    let lambda = traffic(topo)?;
    let h = holding_times(topo, &lambda);
    Ok(delays(topo, &p, &h.expected)?[i])
}

fn energies(topo: &StaticTopology, lambda: &[f64]) -> Vec<f64> {
    let index = topo.index();
    topo.nodes
        .iter()
        .enumerate()
        .map(|(u, n)| {
            let overheard: f64 = n.neighbors.iter().map(|m| lambda[index[m]]).sum();
            topo.airtime_s * (lambda[u] * topo.tx_power_w + overheard * topo.rx_power_w)
        })
        .collect()
}

/// Transmit plus overhearing energy of one node over the run.
pub fn node_energy(topo: &StaticTopology, node: NodeId) -> Result<f64> {
    let i = topo.idx(node)?;
    let lambda = traffic(topo)?;
    Ok(energies(topo, &lambda)[i])
}

/// `e_ini T_run / E`, infinite for a node that spends nothing.
pub fn node_lifetime(energy_j: f64, run_time_s: f64, initial_energy_j: f64) -> f64 {
    if energy_j > 0.0 {
        initial_energy_j * run_time_s / energy_j
    } else {
        f64::INFINITY
    }
}

/// Minimum lifetime over sensor nodes; `f64::INFINITY` if none spends energy.
pub fn network_lifetime(topo: &StaticTopology, run_time_s: f64, initial_energy_j: f64) -> Result<f64> {
    let lambda = traffic(topo)?;
    Ok(topo
        .nodes
        .iter()
        .zip(energies(topo, &lambda))
        .filter(|(n, _)| n.kind != NodeKind::Sink)
        .map(|(_, e)| node_lifetime(e, run_time_s, initial_energy_j))
        .fold(f64::INFINITY, f64::min))
}

/// Evaluates every quantity of the model at once.
pub fn evaluate(topo: &StaticTopology) -> Result<ModelReport> {
    topo.validate()?;
    let p = delivery_probs(topo)?;
    let lambda = traffic(topo)?;
    let h = holding_times(topo, &lambda);
    let d = delays(topo, &p, &h.expected)?;
    let e = energies(topo, &lambda);
    let nodes: Vec<NodeReport> = topo
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| NodeReport {
            id: n.id,
            kind: n.kind,
            delivery_prob: p[i],
            holding_raw_s: h.raw[i],
            holding_expected_s: h.expected[i],
            holding_conditional_s: h.conditional[i],
            delay: d[i],
            traffic: lambda[i],
            energy_j: e[i],
            lifetime_s: if n.kind == NodeKind::Sink {
                f64::INFINITY
            } else {
                node_lifetime(e[i], topo.run_time_s, topo.initial_energy_j)
            },
        })
        .collect();
    let generated: f64 = topo.nodes.iter().map(|n| n.generated).sum();
    let delivered: f64 = topo.nodes.iter().zip(&p).map(|(n, p)| n.generated * p).sum();
    let delay_mass: f64 = topo
        .nodes
        .iter()
        .enumerate()
        .filter(|(i, n)| n.generated > 0.0 && p[*i] > 0.0)
        .map(|(i, n)| n.generated * p[i] * d[i].conditional)
        .sum();
    Ok(ModelReport {
        expected_pdr: if generated > 0.0 { delivered / generated } else { f64::NAN },
        expected_delay_s: if delivered > 0.0 { delay_mass / delivered } else { f64::NAN },
        total_energy_j: nodes
            .iter()
            .filter(|n| n.kind != NodeKind::Sink)
            .map(|n| n.energy_j)
            .sum(),
        network_lifetime_s: nodes
            .iter()
            .filter(|n| n.kind != NodeKind::Sink)
            .map(|n| n.lifetime_s)
            .fold(f64::INFINITY, f64::min),
        nodes,
    })
}
