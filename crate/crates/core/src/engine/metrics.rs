use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::config::Protocol;
use crate::packet::NodeId;

/// Energy drawn by one node, split by activity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EnergyAccount {
    pub spent_j: f64,
    pub tx_seconds: f64,
    pub rx_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub protocol: Protocol,
    pub seed: u64,
    pub sensors: usize,
    pub speed_mps: f64,
    pub holding_k_s: f64,
    pub generated: u64,
    pub delivered: u64,
    pub pdr: f64,
    /// NaN when nothing was delivered.
    pub mean_e2e_delay_s: f64,
    pub total_energy_j: f64,
    pub network_lifetime_s: f64,
    /// True when no sensor died and the lifetime is a projection.
    pub lifetime_extrapolated: bool,
    pub transmissions: u64,
    pub suppressed_forwards: u64,
    pub void_drops: u64,
    pub tx_seconds: f64,
    pub rx_seconds: f64,
    pub sim_time_s: f64,
    pub per_node_energy: BTreeMap<NodeId, EnergyAccount>,
}

pub const CSV_HEADER: &str = "protocol,seed,sensors,speed_mps,holding_k_s,generated,delivered,pdr,mean_e2e_delay_s,total_energy_j,network_lifetime_s,lifetime_extrapolated,transmissions,suppressed_forwards,void_drops,tx_seconds,rx_seconds,sim_time_s";

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.protocol,
            self.seed,
            self.sensors,
            self.speed_mps,
            self.holding_k_s,
            self.generated,
            self.delivered,
            self.pdr,
            self.mean_e2e_delay_s,
            self.total_energy_j,
            self.network_lifetime_s,
            self.lifetime_extrapolated,
            self.transmissions,
            self.suppressed_forwards,
            self.void_drops,
            self.tx_seconds,
            self.rx_seconds,
            self.sim_time_s
        )
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        writeln!(w, "{}", self.csv_row())
    }

    pub fn write_node_energy_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "id,spent_j,tx_seconds,rx_seconds")?;
        for (id, a) in &self.per_node_energy {
            writeln!(w, "{id},{},{},{}", a.spent_j, a.tx_seconds, a.rx_seconds)?;
        }
        Ok(())
    }

    /// Named scalar metrics, in a fixed order, for aggregation.
    pub fn scalars(&self) -> [(&'static str, f64); 9] {
        [
            ("pdr", self.pdr),
            ("mean_e2e_delay_s", self.mean_e2e_delay_s),
            ("total_energy_j", self.total_energy_j),
            ("network_lifetime_s", self.network_lifetime_s),
            ("generated", self.generated as f64),
            ("delivered", self.delivered as f64),
            ("transmissions", self.transmissions as f64),
            ("suppressed_forwards", self.suppressed_forwards as f64),
            ("void_drops", self.void_drops as f64),
        ]
    }
}
