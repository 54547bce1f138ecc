use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::router::RouterTree;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    DistanceP2p,
    CorrelationP2p,
    Network,
    HybridDistance,
    HybridCorrelation,
}

/// How peers are ranked when building peer-to-peer edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeerBasis {
    Distance,
    Correlation,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 5] = [
        TopologyKind::DistanceP2p,
        TopologyKind::CorrelationP2p,
        TopologyKind::Network,
        TopologyKind::HybridDistance,
        TopologyKind::HybridCorrelation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::DistanceP2p => "distance_p2p",
            TopologyKind::CorrelationP2p => "correlation_p2p",
            TopologyKind::Network => "network",
            TopologyKind::HybridDistance => "hybrid_distance",
            TopologyKind::HybridCorrelation => "hybrid_correlation",
        }
    }

    pub fn uses_routers(self) -> bool {
        matches!(
            self,
            TopologyKind::Network | TopologyKind::HybridDistance | TopologyKind::HybridCorrelation
        )
    }

    pub fn peer_basis(self) -> Option<PeerBasis> {
        match self {
            TopologyKind::DistanceP2p | TopologyKind::HybridDistance => Some(PeerBasis::Distance),
            TopologyKind::CorrelationP2p | TopologyKind::HybridCorrelation => Some(PeerBasis::Correlation),
            TopologyKind::Network => None,
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            let valid: Vec<_> = Self::ALL.iter().map(|k| k.as_str()).collect();
            Error::param(format!("unknown topology {s:?}; valid kinds: {}", valid.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    Undirected,
    DirectedNodeToNeighbors,
    DirectedNeighborsToNode,
}

impl EdgeMode {
    pub const ALL: [EdgeMode; 3] = [
        EdgeMode::Undirected,
        EdgeMode::DirectedNodeToNeighbors,
        EdgeMode::DirectedNeighborsToNode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeMode::Undirected => "undirected",
            EdgeMode::DirectedNodeToNeighbors => "directed_node_to_neighbors",
            EdgeMode::DirectedNeighborsToNode => "directed_neighbors_to_node",
        }
    }
}

impl fmt::Display for EdgeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            let valid: Vec<_> = Self::ALL.iter().map(|k| k.as_str()).collect();
            Error::param(format!("unknown edge mode {s:?}; valid modes: {}", valid.join(", ")))
        })
    }
}

/// Full description of how a group's graphs are built.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    /// Peers per node for the peer-to-peer part.
    pub n: usize,
    pub edge_mode: EdgeMode,
    pub router_tree: Option<RouterTree>,
    /// Fraction of edges dropped at every timestamp.
    pub loss_fraction: f64,
}

impl TopologySpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.loss_fraction) {
            return Err(Error::param(format!("loss fraction must be in [0, 1], got {}", self.loss_fraction)));
        }
        if self.kind.uses_routers() {
            if self.router_tree.is_none() {
                return Err(Error::param(format!("{} topology requires a router tree", self.kind)));
            }
            if self.edge_mode != EdgeMode::Undirected {
                return Err(Error::param(format!("{} topology only supports undirected edges", self.kind)));
            }
        }
        if self.kind.peer_basis().is_some() && self.n == 0 {
            return Err(Error::param("neighbors per node must be >= 1"));
        }
        Ok(())
    }

    pub fn num_routers(&self) -> usize {
        match (&self.router_tree, self.kind.uses_routers()) {
            (Some(t), true) => t.num_routers(),
            _ => 0,
        }
    }
}
