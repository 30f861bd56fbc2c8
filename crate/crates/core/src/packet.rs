use serde::{Deserialize, Serialize};

pub type NodeId = u32;

/// Network-wide identity of a data packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PacketKey {
    pub source: NodeId,
    pub seq: u64,
}

/// The `<V, depth, e_res>` tuple a node advertises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingKnowledge {
    pub v_value: f64,
    pub depth_m: f64,
    pub residual_energy_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PacketKind {
    Data,
    /// Payload-free routing knowledge broadcast.
    Hello,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketHeader {
    pub kind: PacketKind,
    pub key: PacketKey,
    /// Routing knowledge of the node that transmitted this copy.
    pub sender: NodeId,
    pub knowledge: RoutingKnowledge,
    pub list_length: usize,
    pub priority_list: Vec<NodeId>,
    /// Cumulative packets generated by `key.source` when this one was created.
    pub total_generated: u64,
    pub suppression_directive: Option<i32>,
    /// Generation time at the source; simulator bookkeeping, not a wire field.
    pub created_at: f64,
}

impl PacketHeader {
    pub fn hello(sender: NodeId, knowledge: RoutingKnowledge, now: f64) -> Self {
        PacketHeader {
            kind: PacketKind::Hello,
            key: PacketKey {
                source: sender,
                seq: 0,
            },
            sender,
            knowledge,
            list_length: 0,
            priority_list: Vec::new(),
            total_generated: 0,
            suppression_directive: None,
            created_at: now,
        }
    }

    /// 1-based position of `node` in the priority list.
    pub fn priority_of(&self, node: NodeId) -> Option<usize> {
        self.priority_list.iter().position(|&n| n == node).map(|i| i + 1)
    }

    /// Structural checks a receiver applies before acting on a header.
    pub fn is_well_formed(&self) -> bool {
        let k = &self.knowledge;
        if !(k.depth_m.is_finite() && k.depth_m >= 0.0)
            || !(k.residual_energy_j.is_finite() && k.residual_energy_j >= 0.0)
            || !k.v_value.is_finite()
        {
            return false;
        }
        if self.priority_list.len() > self.list_length {
            return false;
        }
        let mut seen = self.priority_list.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(list: Vec<NodeId>, len: usize) -> PacketHeader {
        PacketHeader {
            kind: PacketKind::Data,
            key: PacketKey { source: 1, seq: 7 },
            sender: 1,
            knowledge: RoutingKnowledge {
                v_value: -0.5,
                depth_m: 100.0,
                residual_energy_j: 50.0,
            },
            list_length: len,
            priority_list: list,
            total_generated: 7,
            suppression_directive: None,
            created_at: 0.0,
        }
    }

    #[test]
    fn priority_is_one_based() {
        let h = header(vec![4, 9, 2], 3);
        assert_eq!(h.priority_of(4), Some(1));
        assert_eq!(h.priority_of(2), Some(3));
        assert_eq!(h.priority_of(5), None);
    }

    #[test]
    fn malformed_headers_are_detected() {
        assert!(header(vec![4, 9], 2).is_well_formed());
        assert!(!header(vec![4, 4], 2).is_well_formed());
        assert!(!header(vec![4, 9, 2], 2).is_well_formed());
        let mut h = header(vec![], 2);
        h.knowledge.depth_m = -1.0;
        assert!(!h.is_well_formed());
    }
}
