//! Single-threaded discrete-event simulator for both routing protocols.
//!
//! The medium is a broadcast with no contention: every live node within range
//! of a transmitter gets an arrival after `D / v0` (plus serialisation), and
//! an independent Bernoulli draw on the link's delivery probability decides
//! whether the copy decodes. Every arrival costs reception energy whether or
//! not it decodes.

mod frozen;
mod metrics;
mod queue;
mod trace;

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use frozen::{simulate_frozen, FrozenStats};
pub use metrics::{EnergyAccount, MetricsRecord, CSV_HEADER};
pub use queue::{Event, EventKind, EventQueue};
pub use trace::{TraceRecord, Tracer};

use crate::analysis::{Link, StaticTopology, TopologyNode};
use crate::channel::{self, ChannelParams};
use crate::config::{Protocol, ScenarioConfig};
use crate::dbr;
use crate::error::{Error, Result};
use crate::packet::{NodeId, PacketHeader, PacketKey, PacketKind};
use crate::qlfr::{self, Forward, HoldingParams, QlfrContext, RxAction, SuppressionState};
use crate::world::{self, DeployPlan, NodeKind, NodeState, SpatialGrid};

const STREAM_DEPLOY: u64 = 0;
const STREAM_MOBILITY: u64 = 1;
const STREAM_CHANNEL: u64 = 2;
const STREAM_HELLO: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Per-source generation bookkeeping.
#[derive(Debug, Clone, Copy, Default)]
struct SourceState {
    generated: u64,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    channel: ChannelParams,
    holding: HoldingParams,
    nodes: Vec<NodeState>,
    queue: EventQueue,
    now: f64,
    grid: SpatialGrid,
    rng_mobility: ChaCha8Rng,
    rng_channel: ChaCha8Rng,
    ledger: Vec<EnergyAccount>,
    sources: BTreeMap<NodeId, SourceState>,
    /// First sink arrival time minus creation time, per delivered packet.
    delivered: BTreeMap<PacketKey, f64>,
    /// Largest cumulative count each source has advertised to the sinks.
    advertised_totals: BTreeMap<NodeId, u64>,
    suppression: SuppressionState,
    /// List length the sinks last asked for, not yet stamped on a packet.
    pending_directive: Option<i32>,
    /// Data arrivals and hold timers still queued.
    in_flight: usize,
    transmissions: u64,
    suppressed: u64,
    void_drops: u64,
    first_death: Option<f64>,
    since_heading: f64,
    tracer: Option<Tracer>,
    finished: bool,
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation")
            .field("now", &self.now)
            .field("nodes", &self.nodes.len())
            .field("queued", &self.queue.len())
            .finish()
    }
}

fn context<'a>(cfg: &'a ScenarioConfig, holding: HoldingParams) -> QlfrContext<'a> {
    QlfrContext {
        region: &cfg.region,
        q: cfg.qlearning,
        d_max: cfg.network.range_m,
        initial_energy_j: cfg.network.initial_energy_j,
        staleness_s: cfg.hello.staleness_s(),
        holding,
    }
}

impl Simulation {
    /// Validates `cfg`, deploys nodes from its seed and primes the queue.
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = stream(cfg.seed, STREAM_DEPLOY);
        let plan = DeployPlan {
            region: cfg.region,
            sensors: cfg.network.sensors,
            sources: cfg.network.sources,
            sinks: cfg.network.sinks,
            initial_energy_j: cfg.network.initial_energy_j,
        };
        let nodes = world::deploy(&plan, &mut rng)?;
        let offsets: Vec<f64> = (0..cfg.network.sources)
            .map(|_| rng.random_range(0.0..cfg.traffic.generation_interval_s))
            .collect();
        let mut sim = Self::with_nodes(cfg, nodes)?;
        for (i, off) in offsets.into_iter().enumerate() {
            sim.queue.push(
                cfg.traffic.start_s + off,
                EventKind::SourceGen { source: i as NodeId },
            );
        }
        Ok(sim)
    }

    /// Uses a caller-supplied deployment. Node ids must equal their index.
    /// Every source starts generating at `traffic.start_s`.
    pub fn from_nodes(cfg: &ScenarioConfig, nodes: Vec<NodeState>) -> Result<Self> {
        cfg.validate()?;
        let mut sim = Self::with_nodes(cfg, nodes)?;
        let sources: Vec<NodeId> = sim.sources.keys().copied().collect();
        for s in sources {
            sim.queue
                .push(cfg.traffic.start_s, EventKind::SourceGen { source: s });
        }
        Ok(sim)
    }

    fn with_nodes(cfg: &ScenarioConfig, nodes: Vec<NodeState>) -> Result<Self> {
        for (i, n) in nodes.iter().enumerate() {
            if n.id as usize != i {
                return Err(Error::Config(format!("node at index {i} has id {}", n.id)));
            }
        }
        if !nodes.iter().any(|n| n.kind == NodeKind::Source) {
            return Err(Error::Config("deployment has no source".into()));
        }
        let channel = cfg.channel.resolve()?;
        let holding = cfg.holding_params()?;
        let grid = SpatialGrid::build(nodes.iter().map(|n| (n.id, &n.position)), cfg.network.range_m);
        let sources = nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Source)
            .map(|n| (n.id, SourceState::default()))
            .collect();
        let mut sim = Simulation {
            channel,
            holding,
            ledger: vec![EnergyAccount::default(); nodes.len()],
            queue: EventQueue::new(),
            now: 0.0,
            grid,
            rng_mobility: stream(cfg.seed, STREAM_MOBILITY),
            rng_channel: stream(cfg.seed, STREAM_CHANNEL),
            sources,
            delivered: BTreeMap::new(),
            advertised_totals: BTreeMap::new(),
            suppression: SuppressionState::new(
                cfg.suppression.initial_list_length,
                cfg.suppression.max_list_length,
                cfg.suppression.pdr_threshold,
            ),
            pending_directive: None,
            in_flight: 0,
            transmissions: 0,
            suppressed: 0,
            void_drops: 0,
            first_death: None,
            since_heading: 0.0,
            tracer: None,
            finished: false,
            nodes,
            cfg: cfg.clone(),
        };
        if sim.cfg.mobility.speed_mps > 0.0 {
            sim.queue.push(sim.cfg.mobility.tick_s, EventKind::MobilityTick);
        }
        if sim.cfg.protocol == Protocol::Qlfr {
            let mut rng = stream(cfg.seed, STREAM_HELLO);
            for id in 0..sim.nodes.len() {
                let at = rng.random_range(0.0..1.0);
                sim.queue.push(at, EventKind::HelloTick { node: id as NodeId });
            }
            if sim.cfg.suppression.enabled {
                sim.queue
                    .push(sim.cfg.suppression.review_period_s, EventKind::SuppressionReview);
            }
        }
        Ok(sim)
    }

    /// Streams every routing event to `out` as JSON lines.
    pub fn with_trace(mut self, out: Box<dyn Write>) -> Self {
        self.tracer = Some(Tracer::new(out));
        self
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.channel
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    fn trace(&mut self, rec: TraceRecord) {
        if let Some(t) = &mut self.tracer {
            // A broken trace sink must not alter the run.
            let _ = t.record(&rec);
        }
    }

    fn sources_exhausted(&self) -> bool {
        let cap = self.cfg.traffic.max_packets_per_source;
        self.sources.iter().all(|(&id, s)| {
            !self.nodes[id as usize].alive || cap.is_some_and(|c| s.generated >= c)
        })
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        debug_assert!(time >= self.now, "event scheduled in the past");
        if matches!(
            kind,
            EventKind::PacketArrival { ref pkt, .. } if pkt.kind == PacketKind::Data
        ) || matches!(kind, EventKind::HoldExpiry { .. })
        {
            self.in_flight += 1;
        }
        self.queue.push(time, kind);
    }

    /// Processes one event. Returns false once the run is over.
    pub fn step(&mut self) -> Result<bool> {
        if self.finished {
            return Ok(false);
        }
        if self.in_flight == 0 && self.sources_exhausted() {
            self.finished = true;
            return Ok(false);
        }
        let Some(ev) = self.queue.pop() else {
            self.finished = true;
            return Ok(false);
        };
        if ev.time > self.cfg.max_sim_time_s {
            self.now = self.cfg.max_sim_time_s;
            self.finished = true;
            return Ok(false);
        }
        self.now = ev.time;
        match ev.kind {
            EventKind::PacketArrival { to, pkt, decoded } => {
                if pkt.kind == PacketKind::Data {
                    self.in_flight -= 1;
                }
                self.on_arrival(to, &pkt, decoded)?;
            }
            EventKind::HoldExpiry { node, key } => {
                self.in_flight -= 1;
                self.on_hold_expiry(node, key)?;
            }
            EventKind::MobilityTick => self.on_mobility_tick(),
            EventKind::HelloTick { node } => self.on_hello(node),
            EventKind::SourceGen { source } => self.on_generate(source)?,
            EventKind::SuppressionReview => self.on_review(),
        }
        Ok(true)
    }

    /// Runs to completion and summarises.
    pub fn run_to_end(&mut self) -> Result<MetricsRecord> {
        while self.step()? {}
        if let Some(t) = &mut self.tracer {
            let _ = t.flush();
        }
        self.metrics()
    }

    fn kill(&mut self, id: NodeId) {
        let n = &mut self.nodes[id as usize];
        if !n.alive {
            return;
        }
        n.alive = false;
        n.pending.clear();
        if n.kind != NodeKind::Sink && self.first_death.is_none() {
            self.first_death = Some(self.now);
        }
        self.trace(TraceRecord::Death { t: self.now, node: id });
    }

    fn charges(&self, kind: PacketKind) -> bool {
        kind == PacketKind::Data || self.cfg.hello.charge_energy
    }

    /// Broadcasts `pkt` from `sender`; returns false if the sender could not
    /// afford it and died instead.
    fn transmit(&mut self, sender: NodeId, pkt: PacketHeader) -> bool {
        let air = self.channel.airtime();
        let s = sender as usize;
        if self.charges(pkt.kind) && self.nodes[s].kind != NodeKind::Sink {
            let cost = self.cfg.network.tx_power_w * air;
            if self.nodes[s].residual_energy_j < cost {
                self.kill(sender);
                return false;
            }
            self.nodes[s].residual_energy_j -= cost;
            self.ledger[s].spent_j += cost;
            self.ledger[s].tx_seconds += air;
        }
        if pkt.kind == PacketKind::Data {
            self.transmissions += 1;
            let key = pkt.key;
            let list = pkt.priority_list.clone();
            self.trace(TraceRecord::Transmit {
                t: self.now,
                node: sender,
                key: Some(key),
                list,
            });
        }
        let from = self.nodes[s].position;
        let hop_extra = if self.cfg.channel.serialization_delay { air } else { 0.0 };
        let pkt = Rc::new(pkt);
        for to in self.grid.within(&from, self.cfg.network.range_m, Some(sender)) {
            if !self.nodes[to as usize].alive {
                continue;
            }
            let d = from.distance(&self.nodes[to as usize].position);
            let p = channel::packet_delivery_prob(d, &self.channel).unwrap_or(0.0);
            let decoded = self.rng_channel.random::<f64>() < p;
            self.schedule(
                self.now + d / self.cfg.network.sound_speed_mps + hop_extra,
                EventKind::PacketArrival {
                    to,
                    pkt: Rc::clone(&pkt),
                    decoded,
                },
            );
        }
        true
    }

    /// Charges reception; returns false if the node died doing so.
    fn charge_reception(&mut self, id: NodeId, kind: PacketKind) -> bool {
        let i = id as usize;
        if !self.charges(kind) || self.nodes[i].kind == NodeKind::Sink {
            return true;
        }
        let air = self.channel.airtime();
        let psi = self.cfg.network.rx_power_w;
        let cost = psi * air;
        let n = &mut self.nodes[i];
        if n.residual_energy_j <= cost {
            let rest = n.residual_energy_j;
            n.residual_energy_j = 0.0;
            self.ledger[i].spent_j += rest;
            self.ledger[i].rx_seconds += rest / psi;
            self.kill(id);
            return false;
        }
        n.residual_energy_j -= cost;
        self.ledger[i].spent_j += cost;
        self.ledger[i].rx_seconds += air;
        true
    }

    fn on_arrival(&mut self, to: NodeId, pkt: &PacketHeader, decoded: bool) -> Result<()> {
        if !self.nodes[to as usize].alive {
            return Ok(());
        }
        if !self.charge_reception(to, pkt.kind) {
            return Ok(());
        }
        if pkt.kind == PacketKind::Data {
            self.trace(TraceRecord::Receive {
                t: self.now,
                node: to,
                from: pkt.sender,
                key: Some(pkt.key),
                decoded,
            });
        }
        if !decoded {
            return Ok(());
        }
        if self.nodes[to as usize].is_sink() {
            if pkt.kind == PacketKind::Data {
                let total = self.advertised_totals.entry(pkt.key.source).or_insert(0);
                *total = (*total).max(pkt.total_generated);
                if !self.delivered.contains_key(&pkt.key) {
                    let delay = self.now - pkt.created_at;
                    self.delivered.insert(pkt.key, delay);
                    self.trace(TraceRecord::Deliver {
                        t: self.now,
                        sink: to,
                        key: pkt.key,
                        delay,
                    });
                }
            }
            return Ok(());
        }
        let node = &mut self.nodes[to as usize];
        let action = match self.cfg.protocol {
            Protocol::Qlfr => {
                let ctx = context(&self.cfg, self.holding);
                qlfr::on_receive(node, pkt, self.now, &ctx)?
            }
            Protocol::Dbr => dbr::dbr_on_receive(
                node,
                pkt,
                &self.cfg.region,
                self.cfg.network.range_m,
                self.holding.t_max,
            ),
        };
        match action {
            RxAction::Schedule { delay, .. } => {
                self.trace(TraceRecord::Hold {
                    t: self.now,
                    node: to,
                    key: pkt.key,
                    delay,
                });
                self.schedule(self.now + delay, EventKind::HoldExpiry { node: to, key: pkt.key });
            }
            RxAction::Cancel => {
                self.suppressed += 1;
                self.trace(TraceRecord::Cancel {
                    t: self.now,
                    node: to,
                    key: pkt.key,
                });
            }
            RxAction::Ignore | RxAction::Corrupt | RxAction::Drop(_) => {}
        }
        Ok(())
    }

    fn on_hold_expiry(&mut self, id: NodeId, key: PacketKey) -> Result<()> {
        if !self.nodes[id as usize].alive {
            return Ok(());
        }
        let node = &mut self.nodes[id as usize];
        let out = match self.cfg.protocol {
            Protocol::Qlfr => {
                let ctx = context(&self.cfg, self.holding);
                qlfr::on_hold_expire(node, key, self.now, &ctx)?
            }
            Protocol::Dbr => dbr::dbr_on_hold_expire(node, key, &self.cfg.region).map(Forward::Transmit),
        };
        match out {
            Some(Forward::Transmit(h)) => {
                self.transmit(id, h);
            }
            Some(Forward::Void) => {
                self.void_drops += 1;
                self.trace(TraceRecord::Void { t: self.now, node: id, key });
            }
            None => {}
        }
        Ok(())
    }

    fn on_generate(&mut self, source: NodeId) -> Result<()> {
        let s = source as usize;
        if !self.nodes[s].alive {
            return Ok(());
        }
        let state = self.sources.get_mut(&source).expect("source registered");
        if self
            .cfg
            .traffic
            .max_packets_per_source
            .is_some_and(|c| state.generated >= c)
        {
            return Ok(());
        }
        state.generated += 1;
        let key = PacketKey {
            source,
            seq: state.generated - 1,
        };
        let total = state.generated;
        self.queue.push(
            self.now + self.cfg.traffic.generation_interval_s,
            EventKind::SourceGen { source },
        );
        self.trace(TraceRecord::Generate { t: self.now, node: source, key });

        let region = self.cfg.region;
        let knowledge = self.nodes[s].knowledge(&region);
        let base = PacketHeader {
            kind: PacketKind::Data,
            key,
            sender: source,
            knowledge,
            list_length: 0,
            priority_list: Vec::new(),
            total_generated: total,
            suppression_directive: None,
            created_at: self.now,
        };
        self.nodes[s].seen.touch(key);
        match self.cfg.protocol {
            Protocol::Qlfr => {
                let len = if self.cfg.suppression.enabled {
                    self.suppression.current_list_length
                } else {
                    self.cfg.suppression.initial_list_length
                };
                let base = PacketHeader {
                    suppression_directive: self.pending_directive.take(),
                    ..base
                };
                let ctx = context(&self.cfg, self.holding);
                match qlfr::prepare_transmission(&mut self.nodes[s], &base, len, self.now, &ctx)? {
                    Forward::Transmit(h) => {
                        self.transmit(source, h);
                    }
                    Forward::Void => {
                        self.void_drops += 1;
                        self.trace(TraceRecord::Void { t: self.now, node: source, key });
                    }
                }
            }
            Protocol::Dbr => {
                self.nodes[s].forwarded.touch(key);
                self.transmit(source, base);
            }
        }
        Ok(())
    }

    fn on_hello(&mut self, id: NodeId) {
        let i = id as usize;
        if !self.nodes[i].alive {
            return;
        }
        let pkt = PacketHeader::hello(id, self.nodes[i].knowledge(&self.cfg.region), self.now);
        self.queue
            .push(self.now + self.cfg.hello.period_s, EventKind::HelloTick { node: id });
        self.transmit(id, pkt);
    }

    fn on_mobility_tick(&mut self) {
        let m = &self.cfg.mobility;
        let (speed, tick, period) = (m.speed_mps, m.tick_s, m.heading_period_s);
        self.since_heading += tick;
        let turn = self.since_heading >= period - 1e-9;
        if turn {
            self.since_heading = 0.0;
        }
        for n in self.nodes.iter_mut().filter(|n| n.kind != NodeKind::Sink && n.alive) {
            if turn {
                n.heading = world::random_heading(&mut self.rng_mobility);
            }
            let (p, h) = world::random_walk_step(n.position, n.heading, speed, tick, &self.cfg.region);
            n.position = p;
            n.heading = h;
        }
        self.grid = SpatialGrid::build(
            self.nodes.iter().map(|n| (n.id, &n.position)),
            self.cfg.network.range_m,
        );
        self.queue.push(self.now + tick, EventKind::MobilityTick);
    }

    fn on_review(&mut self) {
        let total: u64 = self.advertised_totals.values().sum();
        let before = self.suppression.current_list_length;
        let after = qlfr::suppression_adjust(&mut self.suppression, self.delivered.len() as u64, total);
        if after != before {
            self.pending_directive = Some(after as i32);
            self.trace(TraceRecord::ListLength {
                t: self.now,
                length: after,
                pdr: self.suppression.observed_pdr,
            });
        }
        self.queue.push(
            self.now + self.cfg.suppression.review_period_s,
            EventKind::SuppressionReview,
        );
    }

    pub fn metrics(&self) -> Result<MetricsRecord> {
        let generated: u64 = self.sources.values().map(|s| s.generated).sum();
        if generated == 0 {
            return Err(Error::NoTraffic);
        }
        let delivered = self.delivered.len() as u64;
        let mean_delay = if delivered == 0 {
            f64::NAN
        } else {
            self.delivered.values().sum::<f64>() / delivered as f64
        };
        let per_node_energy: BTreeMap<NodeId, EnergyAccount> = self
            .nodes
            .iter()
            .zip(&self.ledger)
            .map(|(n, a)| (n.id, *a))
            .collect();
        let sensors = || self.nodes.iter().filter(|n| n.kind != NodeKind::Sink);
        let (lifetime, extrapolated) = match self.first_death {
            Some(t) => (t, false),
            None => (
                sensors()
                    .map(|n| {
                        crate::analysis::node_lifetime(
                            self.ledger[n.id as usize].spent_j,
                            self.now,
                            n.initial_energy_j,
                        )
                    })
                    .fold(f64::INFINITY, f64::min),
                true,
            ),
        };
        Ok(MetricsRecord {
            protocol: self.cfg.protocol,
            seed: self.cfg.seed,
            sensors: self.cfg.network.sensors,
            speed_mps: self.cfg.mobility.speed_mps,
            holding_k_s: self.holding.k,
            generated,
            delivered,
            pdr: delivered as f64 / generated as f64,
            mean_e2e_delay_s: mean_delay,
            total_energy_j: self.ledger.iter().map(|a| a.spent_j).sum(),
            network_lifetime_s: lifetime,
            lifetime_extrapolated: extrapolated,
            transmissions: self.transmissions,
            suppressed_forwards: self.suppressed,
            void_drops: self.void_drops,
            tx_seconds: self.ledger.iter().map(|a| a.tx_seconds).sum(),
            rx_seconds: self.ledger.iter().map(|a| a.rx_seconds).sum(),
            sim_time_s: self.now,
            per_node_energy,
        })
    }

    /// Freezes the current deployment into a candidate graph: links use true
    /// positions and the channel model, lists follow each protocol's ranking
    /// from ground-truth knowledge. Sources carry what they generated so far.
    pub fn snapshot(&self) -> StaticTopology {
        let region = &self.cfg.region;
        let range = self.cfg.network.range_m;
        let ctx = context(&self.cfg, self.holding);
        let alive: HashSet<NodeId> = self.nodes.iter().filter(|n| n.alive).map(|n| n.id).collect();
        let nodes = self
            .nodes
            .iter()
            .filter(|n| n.alive)
            .map(|n| {
                let neighbors: Vec<NodeId> = self
                    .grid
                    .within(&n.position, range, Some(n.id))
                    .into_iter()
                    .filter(|m| alive.contains(m))
                    .collect();
                let own = n.knowledge(region);
                let mut ids: Vec<NodeId> = if n.is_sink() {
                    Vec::new()
                } else {
                    match self.cfg.protocol {
                        Protocol::Qlfr => qlfr::rank_candidates(
                            &own,
                            neighbors.iter().map(|&m| (m, self.nodes[m as usize].knowledge(region))),
                            &ctx,
                        )
                        .map(|c| c.into_iter().map(|c| c.id).collect())
                        .unwrap_or_default(),
                        Protocol::Dbr => {
                            let mut v: Vec<(f64, NodeId)> = neighbors
                                .iter()
                                .map(|&m| (own.depth_m - self.nodes[m as usize].depth(region), m))
                                .filter(|(adv, _)| *adv > 0.0)
                                .collect();
                            v.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                            v.into_iter().map(|(_, m)| m).collect()
                        }
                    }
                };
                if self.cfg.protocol == Protocol::Qlfr {
                    ids.truncate(self.suppression.current_list_length);
                }
                let candidates = ids
                    .into_iter()
                    .map(|m| {
                        let d = n.position.distance(&self.nodes[m as usize].position);
                        Link {
                            to: m,
                            prob: channel::packet_delivery_prob(d, &self.channel).unwrap_or(0.0),
                            distance_m: d,
                        }
                    })
                    .collect();
                TopologyNode {
                    id: n.id,
                    kind: n.kind,
                    position: n.position,
                    candidates,
                    neighbors,
                    generated: self.sources.get(&n.id).map_or(0.0, |s| s.generated as f64),
                }
            })
            .collect();
        StaticTopology {
            nodes,
            holding_step_s: match self.cfg.protocol {
                Protocol::Qlfr => self.holding.k,
                // Depth-greedy holds are continuous; report the mean slot.
                Protocol::Dbr => self.holding.t_max,
            },
            sound_speed_mps: self.cfg.network.sound_speed_mps,
            airtime_s: self.channel.airtime(),
            airtime_in_delay: self.cfg.channel.serialization_delay,
            tx_power_w: self.cfg.network.tx_power_w,
            rx_power_w: self.cfg.network.rx_power_w,
            run_time_s: self.now,
            initial_energy_j: self.cfg.network.initial_energy_j,
        }
    }
}

/// Runs one scenario end to end.
pub fn run(cfg: &ScenarioConfig) -> Result<MetricsRecord> {
    Simulation::new(cfg)?.run_to_end()
}
