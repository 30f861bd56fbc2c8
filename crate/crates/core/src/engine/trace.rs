use std::io::Write;

use serde::Serialize;

use crate::packet::{NodeId, PacketKey};

/// One line of the optional event trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceRecord {
    Generate { t: f64, node: NodeId, key: PacketKey },
    Transmit { t: f64, node: NodeId, key: Option<PacketKey>, list: Vec<NodeId> },
    Receive { t: f64, node: NodeId, from: NodeId, key: Option<PacketKey>, decoded: bool },
    Hold { t: f64, node: NodeId, key: PacketKey, delay: f64 },
    Cancel { t: f64, node: NodeId, key: PacketKey },
    Void { t: f64, node: NodeId, key: PacketKey },
    Deliver { t: f64, sink: NodeId, key: PacketKey, delay: f64 },
    Death { t: f64, node: NodeId },
    ListLength { t: f64, length: usize, pdr: f64 },
}

/// JSON-lines sink for [`TraceRecord`]s.
pub struct Tracer {
    out: Box<dyn Write>,
}

impl Tracer {
    pub fn new(out: Box<dyn Write>) -> Self {
        Tracer { out }
    }

    pub fn record(&mut self, rec: &TraceRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, rec)?;
        self.out.write_all(b"\n")
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

impl std::fmt::Debug for Tracer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Tracer")
    }
}
