use std::io::Write;

use chrono::NaiveDateTime;
use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adjacency::NormalizedAdjacency;
use super::edges::{build_hybrid, EdgeSet};
use super::loss::drop_edges;
use super::p2p::{build_correlation_p2p, build_distance_p2p};
use super::router::{aggregate_router_features, build_network_topology};
use super::spec::{PeerBasis, TopologySpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::traffic::{TrafficTable, NUM_FEATURES};

/// One timestamp of the fleet as a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSnapshot<T> {
    pub time: NaiveDateTime,
    pub num_iot: usize,
    pub num_routers: usize,
    /// `(num_iot + num_routers) x F`, IoT rows first.
    pub features: Array2<T>,
    /// Edges remaining after connection loss.
    pub edges: EdgeSet,
    /// Attack label per IoT node.
    pub labels: Vec<bool>,
    /// True for IoT rows, false for router rows.
    pub iot_mask: Vec<bool>,
}

impl<T: Scalar> GraphSnapshot<T> {
    pub fn num_nodes(&self) -> usize {
        self.num_iot + self.num_routers
    }

    pub fn adjacency(&self) -> Result<NormalizedAdjacency<T>> {
        NormalizedAdjacency::from_edges(&self.edges, self.num_nodes())
    }

    /// Labels padded with `false` over router rows.
    pub fn node_labels(&self) -> Vec<bool> {
        let mut l = self.labels.clone();
        l.resize(self.num_nodes(), false);
        l
    }

    /// Writes a plain-text dump: header line, feature rows, then one `source target` line per edge.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# time={} iot={} routers={} features={} edges={} undirected={}",
            self.time.format("%Y-%m-%d %H:%M:%S"),
            self.num_iot,
            self.num_routers,
            self.features.ncols(),
            self.edges.len(),
            self.edges.is_undirected()
        )?;
        for (i, row) in self.features.rows().into_iter().enumerate() {
            let vals: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let tag = if i < self.num_iot {
                format!("iot label={}", self.labels[i] as u8)
            } else {
                "router".to_string()
            };
            writeln!(w, "node {i} {tag} {}", vals.join(" "))?;
        }
        for (s, t) in self.edges.iter() {
            writeln!(w, "edge {s} {t}")?;
        }
        Ok(())
    }
}

/// Static edges for a node group, before any loss.
///
/// Peer-to-peer parts use node positions and the group's attack-free traffic;
/// router parts come from the spec's router tree.
pub fn build_base_edges(spec: &TopologySpec, benign: &TrafficTable) -> Result<EdgeSet> {
    spec.validate()?;
    let p2p = match spec.kind.peer_basis() {
        Some(PeerBasis::Distance) => Some(build_distance_p2p(benign.nodes(), spec.n, spec.edge_mode)?),
        Some(PeerBasis::Correlation) => Some(build_correlation_p2p(benign, spec.n, spec.edge_mode)?),
        None => None,
    };
    let network = if spec.kind.uses_routers() {
        let tree = spec.router_tree.as_ref().expect("validated");
        if tree.num_iot() != benign.num_nodes() {
            return Err(Error::input(format!(
                "router tree assigns {} IoT nodes but the group has {}",
                tree.num_iot(),
                benign.num_nodes()
            )));
        }
        Some(build_network_topology(tree)?)
    } else {
        None
    };
    match (p2p, network) {
        (Some(p), Some(n)) => build_hybrid(&p, &n),
        (Some(p), None) => Ok(p),
        (None, Some(n)) => Ok(n),
        (None, None) => unreachable!("every kind has a peer or router part"),
    }
}

/// IoT feature matrix of one slot.
pub fn iot_features<T: Scalar>(table: &TrafficTable, slot: usize) -> Array2<T> {
    let n = table.num_nodes();
    let mut x = Array2::<T>::zeros((n, NUM_FEATURES));
    for i in 0..n {
        for (c, v) in table.features(i, slot).iter().enumerate() {
            x[[i, c]] = T::from_f64_lossy(*v);
        }
    }
    x
}

/// One snapshot per timestamp of `table`: features (with router rows when the
/// spec has routers), the static `base` edges after a fresh loss draw, labels.
pub fn build_snapshots<T: Scalar, R: Rng + ?Sized>(
    table: &TrafficTable,
    spec: &TopologySpec,
    base: &EdgeSet,
    rng: &mut R,
) -> Result<Vec<GraphSnapshot<T>>> {
    spec.validate()?;
    let num_iot = table.num_nodes();
    let num_routers = spec.num_routers();
    let total = num_iot + num_routers;
    if base.min_nodes() > total {
        return Err(Error::input("base edges reference nodes outside the group"));
    }
    let mut iot_mask = vec![true; num_iot];
    iot_mask.resize(total, false);

    (0..table.num_slots())
        .map(|slot| {
            let x = iot_features::<T>(table, slot);
            let features = match (&spec.router_tree, num_routers) {
                (Some(tree), r) if r > 0 => aggregate_router_features(&x, tree)?,
                _ => x,
            };
            Ok(GraphSnapshot {
                time: table.time(slot),
                num_iot,
                num_routers,
                features,
                edges: drop_edges(base, spec.loss_fraction, rng)?,
                labels: (0..num_iot).map(|i| table.label(i, slot)).collect(),
                iot_mask: iot_mask.clone(),
            })
        })
        .collect()
}

/// Per-feature z-scoring with statistics from the training split.
///
/// IoT rows and router rows are scaled with separate statistics since router
/// rows are sums over many nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub iot_mean: Vec<f64>,
    pub iot_std: Vec<f64>,
    pub router_mean: Vec<f64>,
    pub router_std: Vec<f64>,
}

fn finish_stats(sum: &[f64], sq: &[f64], count: f64) -> (Vec<f64>, Vec<f64>) {
    if count == 0.0 {
        return (vec![0.0; sum.len()], vec![1.0; sum.len()]);
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
    let std = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| {
            let var = (q / count - m * m).max(0.0);
            if var.sqrt() < 1e-12 {
                1.0
            } else {
                var.sqrt()
            }
        })
        .collect();
    (mean, std)
}

impl Standardizer {
    pub fn identity(num_features: usize) -> Self {
        Self {
            iot_mean: vec![0.0; num_features],
            iot_std: vec![1.0; num_features],
            router_mean: vec![0.0; num_features],
            router_std: vec![1.0; num_features],
        }
    }

    pub fn fit<'a, T: Scalar, I>(snapshots: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a GraphSnapshot<T>>,
    {
        let mut f = None;
        let (mut is, mut iq, mut rs, mut rq) = (vec![], vec![], vec![], vec![]);
        let (mut ic, mut rc) = (0.0, 0.0);
        for s in snapshots {
            let cols = s.features.ncols();
            if *f.get_or_insert(cols) != cols {
                return Err(Error::shape("snapshots disagree on feature count"));
            }
            if is.is_empty() {
                is = vec![0.0; cols];
                iq = vec![0.0; cols];
                rs = vec![0.0; cols];
                rq = vec![0.0; cols];
            }
            for (i, row) in s.features.rows().into_iter().enumerate() {
                let (sum, sq, cnt) = if s.iot_mask[i] {
                    (&mut is, &mut iq, &mut ic)
                } else {
                    (&mut rs, &mut rq, &mut rc)
                };
                for (c, v) in row.iter().enumerate() {
                    let v = v.to_f64_lossy();
                    sum[c] += v;
                    sq[c] += v * v;
                }
                *cnt += 1.0;
            }
        }
        f.ok_or_else(|| Error::input("cannot fit standardization on zero snapshots"))?;
        let (iot_mean, iot_std) = finish_stats(&is, &iq, ic);
        let (router_mean, router_std) = finish_stats(&rs, &rq, rc);
        Ok(Self {
            iot_mean,
            iot_std,
            router_mean,
            router_std,
        })
    }

    pub fn apply<T: Scalar>(&self, snapshot: &mut GraphSnapshot<T>) -> Result<()> {
        if snapshot.features.ncols() != self.iot_mean.len() {
            return Err(Error::shape(format!(
                "standardizer has {} features, snapshot {}",
                self.iot_mean.len(),
                snapshot.features.ncols()
            )));
        }
        let iot = (self.scale(&self.iot_mean), self.scale(&self.iot_std));
        let router = (self.scale(&self.router_mean), self.scale(&self.router_std));
        for (i, mut row) in snapshot.features.rows_mut().into_iter().enumerate() {
            let (mean, std): &(Array1<T>, Array1<T>) = if snapshot.iot_mask[i] { &iot } else { &router };
            row -= mean;
            row /= std;
        }
        Ok(())
    }

    fn scale<T: Scalar>(&self, v: &[f64]) -> Array1<T> {
        v.iter().map(|x| T::from_f64_lossy(*x)).collect()
    }
}
