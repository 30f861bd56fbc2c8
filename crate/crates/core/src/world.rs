//! Deployment, mobility and neighbourhood bookkeeping.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use indexmap::IndexSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packet::{NodeId, PacketHeader, PacketKey, RoutingKnowledge};

/// Capacity of the per-node duplicate and forwarded caches.
pub const PACKET_CACHE_CAPACITY: usize = 1024;

/// Axis-aligned deployment box. `z` grows upward; the surface is `z = height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Region {
    pub width_m: f64,
    pub length_m: f64,
    pub height_m: f64,
}

impl Default for Region {
    fn default() -> Self {
        Region::cube(500.0)
    }
}

impl Region {
    pub fn cube(side_m: f64) -> Self {
        Region {
            width_m: side_m,
            length_m: side_m,
            height_m: side_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("width_m", self.width_m),
            ("length_m", self.length_m),
            ("height_m", self.height_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("region.{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn extent(&self) -> [f64; 3] {
        [self.width_m, self.length_m, self.height_m]
    }

    pub fn contains(&self, p: &Position) -> bool {
        let e = self.extent();
        p.coords().iter().zip(e).all(|(&c, hi)| (0.0..=hi).contains(&c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Position { x, y, z }
    }

    fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    fn from_coords(c: [f64; 3]) -> Self {
        Position::new(c[0], c[1], c[2])
    }

    pub fn distance(&self, other: &Position) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn depth(&self, region: &Region) -> f64 {
        (region.height_m - self.z).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Sensor,
    Source,
    Sink,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Sensor => "sensor",
            NodeKind::Source => "source",
            NodeKind::Sink => "sink",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborEntry {
    pub knowledge: RoutingKnowledge,
    pub last_heard: f64,
}

/// Bounded set of packet keys; the least recently touched key is evicted first.
#[derive(Debug, Clone)]
pub struct RecentSet {
    keys: IndexSet<PacketKey>,
    capacity: usize,
}

impl RecentSet {
    pub fn new(capacity: usize) -> Self {
        RecentSet {
            keys: IndexSet::with_capacity(capacity.min(64)),
            capacity: capacity.max(1),
        }
    }

    pub fn contains(&self, key: &PacketKey) -> bool {
        self.keys.contains(key)
    }

    /// Inserts or refreshes `key`. Returns true if it was already present.
    pub fn touch(&mut self, key: PacketKey) -> bool {
        let present = self.keys.shift_remove(&key);
        if !present && self.keys.len() == self.capacity {
            self.keys.shift_remove_index(0);
        }
        self.keys.insert(key);
        present
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub kind: NodeKind,
    pub position: Position,
    /// Unit vector of the current random-walk direction.
    pub heading: [f64; 3],
    pub initial_energy_j: f64,
    pub residual_energy_j: f64,
    pub alive: bool,
    pub v_value: f64,
    pub q_table: BTreeMap<NodeId, f64>,
    pub neighbors: BTreeMap<NodeId, NeighborEntry>,
    pub seen: RecentSet,
    pub forwarded: RecentSet,
    /// Received packets waiting for their hold timer.
    pub pending: BTreeMap<PacketKey, PacketHeader>,
}

impl NodeState {
    pub fn new(id: NodeId, kind: NodeKind, position: Position, initial_energy_j: f64) -> Self {
        NodeState {
            id,
            kind,
            position,
            heading: [0.0, 0.0, 0.0],
            initial_energy_j,
            residual_energy_j: initial_energy_j,
            alive: true,
            v_value: 0.0,
            q_table: BTreeMap::new(),
            neighbors: BTreeMap::new(),
            seen: RecentSet::new(PACKET_CACHE_CAPACITY),
            forwarded: RecentSet::new(PACKET_CACHE_CAPACITY),
            pending: BTreeMap::new(),
        }
    }

    pub fn is_sink(&self) -> bool {
        self.kind == NodeKind::Sink
    }

    pub fn depth(&self, region: &Region) -> f64 {
        self.position.depth(region)
    }

    pub fn knowledge(&self, region: &Region) -> RoutingKnowledge {
        RoutingKnowledge {
            v_value: self.v_value,
            depth_m: self.depth(region),
            residual_energy_j: self.residual_energy_j,
        }
    }

    /// Records the latest knowledge heard from `sender`, then drops entries
    /// not refreshed within `staleness_s`.
    pub fn update_neighbor_knowledge(
        &mut self,
        sender: NodeId,
        knowledge: RoutingKnowledge,
        now: f64,
        staleness_s: f64,
    ) {
        debug_assert_ne!(sender, self.id, "a node is never its own neighbour");
        if sender == self.id {
            return;
        }
        self.neighbors.insert(
            sender,
            NeighborEntry {
                knowledge,
                last_heard: now,
            },
        );
        self.evict_stale(now, staleness_s);
    }

    pub fn evict_stale(&mut self, now: f64, staleness_s: f64) {
        self.neighbors
            .retain(|_, e| now - e.last_heard <= staleness_s);
    }

    /// Neighbour entries heard within `staleness_s` of `now`, in id order.
    pub fn fresh_neighbors(
        &self,
        now: f64,
        staleness_s: f64,
    ) -> impl Iterator<Item = (NodeId, &NeighborEntry)> {
        self.neighbors
            .iter()
            .filter(move |(_, e)| now - e.last_heard <= staleness_s)
            .map(|(&id, e)| (id, e))
    }
}

/// What [`deploy`] needs to lay out a network.
#[derive(Debug, Clone, Copy)]
pub struct DeployPlan {
    pub region: Region,
    pub sensors: usize,
    pub sources: usize,
    pub sinks: usize,
    pub initial_energy_j: f64,
}

/// Places `sensors` nodes uniformly in the box (the first `sources` of them on
/// the bottom face, flagged as sources) and `sinks` stationary nodes on the
/// surface. Sensors take ids `0..sensors`, sinks follow.
pub fn deploy<R: Rng + ?Sized>(plan: &DeployPlan, rng: &mut R) -> Result<Vec<NodeState>> {
    plan.region.validate()?;
    if plan.sensors == 0 || plan.sinks == 0 || plan.sources == 0 {
        return Err(Error::Config(
            "sensor, source and sink counts must all be > 0".into(),
        ));
    }
    if plan.sources > plan.sensors {
        return Err(Error::Config(format!(
            "{} sources requested but only {} sensors",
            plan.sources, plan.sensors
        )));
    }
    let r = &plan.region;
    let mut nodes = Vec::with_capacity(plan.sensors + plan.sinks);
    for i in 0..plan.sensors {
        let x = rng.random_range(0.0..=r.width_m);
        let y = rng.random_range(0.0..=r.length_m);
        let (kind, z) = if i < plan.sources {
            (NodeKind::Source, 0.0)
        } else {
            (NodeKind::Sensor, rng.random_range(0.0..=r.height_m))
        };
        let mut node = NodeState::new(i as NodeId, kind, Position::new(x, y, z), plan.initial_energy_j);
        node.heading = random_heading(rng);
        nodes.push(node);
    }
    for j in 0..plan.sinks {
        let x = rng.random_range(0.0..=r.width_m);
        let y = rng.random_range(0.0..=r.length_m);
        nodes.push(NodeState::new(
            (plan.sensors + j) as NodeId,
            NodeKind::Sink,
            Position::new(x, y, r.height_m),
            plan.initial_energy_j,
        ));
    }
    Ok(nodes)
}

/// Uniformly distributed unit vector.
pub fn random_heading<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let rho = (1.0 - z * z).max(0.0).sqrt();
    [rho * phi.cos(), rho * phi.sin(), z]
}

/// Moves `speed * dt` metres along `heading`, reflecting specularly off the
/// region walls. Returns the new position and the (possibly mirrored) heading.
pub fn random_walk_step(
    position: Position,
    heading: [f64; 3],
    speed: f64,
    dt: f64,
    region: &Region,
) -> (Position, [f64; 3]) {
    let step = speed * dt;
    let mut c = position.coords();
    let mut h = heading;
    for (axis, hi) in region.extent().into_iter().enumerate() {
        let raw = c[axis] + h[axis] * step;
        // Folding handles steps longer than the box side too.
        let period = 2.0 * hi;
        let mut v = raw.rem_euclid(period);
        if v > hi {
            v = period - v;
        }
        // An odd number of wall hits flips the direction of travel.
        if (raw / hi).floor().rem_euclid(2.0) == 1.0 {
            h[axis] = -h[axis];
        }
        c[axis] = v;
    }
    (Position::from_coords(c), h)
}

/// Uniform grid over node positions with cells of side `range`, so a range
/// query only inspects the 27 surrounding cells.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    cell: f64,
    cells: HashMap<[i64; 3], Vec<(NodeId, Position)>>,
}

impl SpatialGrid {
    pub fn build<'a>(points: impl IntoIterator<Item = (NodeId, &'a Position)>, range: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<(NodeId, Position)>> = HashMap::new();
        for (id, p) in points {
            cells.entry(Self::key(p, range)).or_default().push((id, *p));
        }
        SpatialGrid { cell: range, cells }
    }

    fn key(p: &Position, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    /// Ids within `range` (inclusive) of `center`, excluding `exclude`, sorted.
    pub fn within(&self, center: &Position, range: f64, exclude: Option<NodeId>) -> Vec<NodeId> {
        debug_assert!(range <= self.cell + 1e-9);
        let k = Self::key(center, self.cell);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) else {
                        continue;
                    };
                    for &(id, ref p) in bucket {
                        if Some(id) != exclude && center.distance(p) <= range {
                            out.push(id);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Ids of every other node within `range` of `node`.
pub fn neighbors_in_range(node: &NodeState, all: &[NodeState], range: f64) -> Vec<NodeId> {
    let grid = SpatialGrid::build(all.iter().map(|n| (n.id, &n.position)), range);
    grid.within(&node.position, range, Some(node.id))
}

/// Writes `id,kind,x,y,z,depth,residual_energy_j` rows.
pub fn write_deployment_csv<W: Write>(nodes: &[NodeState], region: &Region, mut w: W) -> std::io::Result<()> {
    writeln!(w, "id,kind,x,y,z,depth,residual_energy_j")?;
    for n in nodes {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            n.id,
            n.kind.as_str(),
            n.position.x,
            n.position.y,
            n.position.z,
            n.depth(region),
            n.residual_energy_j
        )?;
    }
    Ok(())
}
