//! Simulator and closed-form model for opportunistic forwarding in underwater
//! acoustic networks, where next hops are ranked by learned Q-values. A
//! depth-based forwarder serves as the baseline.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod config;
pub mod dbr;
pub mod engine;
pub mod error;
pub mod packet;
pub mod qlearning;
pub mod qlfr;
pub mod sweep;
pub mod world;

pub use analysis::{ModelReport, StaticTopology};
pub use channel::ChannelParams;
pub use config::{parse_config, Protocol, ScenarioConfig};
pub use engine::{run, MetricsRecord, Simulation};
pub use error::{Error, Result};
pub use packet::{NodeId, PacketHeader, PacketKey, RoutingKnowledge};
pub use qlearning::QParams;
pub use qlfr::{HoldingParams, SuppressionState};
pub use world::{NodeKind, NodeState, Position, Region};
