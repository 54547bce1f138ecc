//! Graph construction over a node group: peer-to-peer, router and hybrid
//! edges, connection loss, router feature aggregation and the normalized
//! propagation operator.

mod adjacency;
mod edges;
mod loss;
mod p2p;
mod router;
mod snapshot;
mod spec;

pub use adjacency::{normalize_adjacency, NormalizedAdjacency};
pub use edges::{build_hybrid, EdgeSet};
pub use loss::{drop_edges, dropped_count};
pub use p2p::{build_correlation_p2p, build_distance_p2p, pearson};
pub use router::{aggregate_router_features, build_network_topology, RouterTree};
pub use snapshot::{build_base_edges, build_snapshots, iot_features, GraphSnapshot, Standardizer};
pub use spec::{EdgeMode, PeerBasis, TopologyKind, TopologySpec};
