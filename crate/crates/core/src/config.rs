//! Scenario configuration. Files are TOML; every key has a default, unknown
//! keys are rejected, and the fully resolved configuration can be written back
//! out next to results.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelParams};
use crate::error::{Error, Result};
use crate::qlearning::QParams;
use crate::qlfr::HoldingParams;
use crate::world::Region;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Qlfr,
    Dbr,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Qlfr => "qlfr",
            Protocol::Dbr => "dbr",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qlfr" => Ok(Protocol::Qlfr),
            "dbr" => Ok(Protocol::Dbr),
            other => Err(Error::Config(format!("unknown protocol `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub sensors: usize,
    pub sources: usize,
    pub sinks: usize,
    pub range_m: f64,
    pub sound_speed_mps: f64,
    pub initial_energy_j: f64,
    pub tx_power_w: f64,
    pub rx_power_w: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            sensors: 100,
            sources: 5,
            sinks: 5,
            range_m: 150.0,
            sound_speed_mps: channel::NOMINAL_SOUND_SPEED,
            initial_energy_j: 100.0,
            tx_power_w: 2.0,
            rx_power_w: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityConfig {
    pub speed_mps: f64,
    pub tick_s: f64,
    pub heading_period_s: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            speed_mps: 3.0,
            tick_s: 1.0,
            heading_period_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub generation_interval_s: f64,
    pub start_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_packets_per_source: Option<u64>,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            generation_interval_s: 10.0,
            start_s: 2.0,
            max_packets_per_source: None,
        }
    }
}

/// Either `k_s` or `h` fixes the holding step; `h` wins the derivation
/// `k = 2 R / (v0 h)` when given. An empty section means the default step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<u32>,
}

const DEFAULT_HOLDING_STEP_S: f64 = 0.05;

impl Default for HoldingConfig {
    fn default() -> Self {
        HoldingConfig {
            k_s: Some(DEFAULT_HOLDING_STEP_S),
            h: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuppressionConfig {
    pub enabled: bool,
    pub initial_list_length: usize,
    pub max_list_length: usize,
    pub pdr_threshold: f64,
    pub review_period_s: f64,
}

impl Default for SuppressionConfig {
    fn default() -> Self {
        SuppressionConfig {
            enabled: true,
            initial_list_length: 2,
            max_list_length: 4,
            pdr_threshold: 0.9,
            review_period_s: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HelloConfig {
    pub period_s: f64,
    /// Whether Hello broadcasts draw transmit/receive energy.
    pub charge_energy: bool,
}

impl Default for HelloConfig {
    fn default() -> Self {
        HelloConfig {
            period_s: 2.0,
            charge_energy: false,
        }
    }
}

impl HelloConfig {
    /// Neighbour entries older than this are ignored.
    pub fn staleness_s(&self) -> f64 {
        2.0 * self.period_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub frequency_khz: f64,
    pub spreading: f64,
    pub atten_const: f64,
    pub noise_density: f64,
    pub packet_bits: u32,
    pub bit_rate_bps: f64,
    /// Explicit `e_b`; calibrated from the two fields below when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_per_bit: Option<f64>,
    pub calibration_distance_m: f64,
    pub calibration_target: f64,
    /// Add `M / mu` to every hop's latency.
    pub serialization_delay: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        let p = ChannelParams::default();
        ChannelConfig {
            frequency_khz: p.frequency_khz,
            spreading: p.spreading,
            atten_const: p.atten_const,
            noise_density: p.noise_density,
            packet_bits: p.packet_bits,
            bit_rate_bps: p.bit_rate,
            energy_per_bit: None,
            calibration_distance_m: 100.0,
            calibration_target: 0.9,
            serialization_delay: true,
        }
    }
}

impl ChannelConfig {
    /// Channel parameters with `e_b` filled in, calibrating if needed.
    pub fn resolve(&self) -> Result<ChannelParams> {
        let mut p = ChannelParams {
            frequency_khz: self.frequency_khz,
            spreading: self.spreading,
            atten_const: self.atten_const,
            energy_per_bit: self.energy_per_bit.unwrap_or(1.0),
            noise_density: self.noise_density,
            packet_bits: self.packet_bits,
            bit_rate: self.bit_rate_bps,
        };
        p.validate()?;
        if self.energy_per_bit.is_none() {
            p.energy_per_bit = channel::calibrate_energy_per_bit(
                &p,
                self.calibration_distance_m,
                self.calibration_target,
            )?;
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub replicates: u32,
    pub protocol: Protocol,
    pub max_sim_time_s: f64,
    pub region: Region,
    pub network: NetworkConfig,
    pub mobility: MobilityConfig,
    pub traffic: TrafficConfig,
    pub qlearning: QParams,
    pub holding: HoldingConfig,
    pub suppression: SuppressionConfig,
    pub hello: HelloConfig,
    pub channel: ChannelConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            replicates: 1,
            protocol: Protocol::Qlfr,
            max_sim_time_s: 1000.0,
            region: Region::cube(500.0),
            network: NetworkConfig::default(),
            mobility: MobilityConfig::default(),
            traffic: TrafficConfig::default(),
            qlearning: QParams::default(),
            holding: HoldingConfig::default(),
            suppression: SuppressionConfig::default(),
            hello: HelloConfig::default(),
            channel: ChannelConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be > 0, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        positive("max_sim_time_s", self.max_sim_time_s)?;
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        let n = &self.network;
        if n.sensors == 0 || n.sources == 0 || n.sinks == 0 {
            return Err(Error::Config("network counts must all be >= 1".into()));
        }
        if n.sources > n.sensors {
            return Err(Error::Config(format!(
                "network.sources ({}) exceeds network.sensors ({})",
                n.sources, n.sensors
            )));
        }
        positive("network.range_m", n.range_m)?;
        positive("network.sound_speed_mps", n.sound_speed_mps)?;
        positive("network.initial_energy_j", n.initial_energy_j)?;
        positive("network.tx_power_w", n.tx_power_w)?;
        positive("network.rx_power_w", n.rx_power_w)?;
        let m = &self.mobility;
        if !(m.speed_mps.is_finite() && m.speed_mps >= 0.0) {
            return Err(Error::Config(format!(
                "mobility.speed_mps must be >= 0, got {}",
                m.speed_mps
            )));
        }
        positive("mobility.tick_s", m.tick_s)?;
        positive("mobility.heading_period_s", m.heading_period_s)?;
        positive("traffic.generation_interval_s", self.traffic.generation_interval_s)?;
        if !(self.traffic.start_s >= 0.0) {
            return Err(Error::Config("traffic.start_s must be >= 0".into()));
        }
        self.qlearning.validate()?;
        self.holding_params()?;
        let s = &self.suppression;
        if s.initial_list_length == 0 || s.max_list_length == 0 {
            return Err(Error::Config("priority list lengths must be >= 1".into()));
        }
        if s.initial_list_length > s.max_list_length {
            return Err(Error::Config(
                "suppression.initial_list_length exceeds max_list_length".into(),
            ));
        }
        if !(s.pdr_threshold > 0.0 && s.pdr_threshold < 1.0) {
            return Err(Error::Config(format!(
                "suppression.pdr_threshold must lie in (0, 1), got {}",
                s.pdr_threshold
            )));
        }
        positive("suppression.review_period_s", s.review_period_s)?;
        positive("hello.period_s", self.hello.period_s)?;
        positive("channel.calibration_distance_m", self.channel.calibration_distance_m)?;
        if let Some(eb) = self.channel.energy_per_bit {
            positive("channel.energy_per_bit", eb)?;
        }
        Ok(())
    }

    pub fn holding_params(&self) -> Result<HoldingParams> {
        let (r, v0) = (self.network.range_m, self.network.sound_speed_mps);
        match (self.holding.h, self.holding.k_s) {
            (Some(h), _) => HoldingParams::from_h(h, r, v0),
            (None, Some(k)) => HoldingParams::from_k(k, r, v0),
            (None, None) => HoldingParams::from_k(DEFAULT_HOLDING_STEP_S, r, v0),
        }
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config always serialises")
    }
}

/// Reads, parses and validates a scenario file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioConfig::from_toml_str(&text, path)
}
