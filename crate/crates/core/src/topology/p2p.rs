//! Peer-to-peer edges: each node picks its `n` best peers by geographic
//! distance or by benign-traffic Pearson correlation.

use std::cmp::Ordering;

use super::edges::EdgeSet;
use super::spec::EdgeMode;
use crate::error::{Error, Result};
use crate::traffic::{NodeMeta, TrafficTable};

/// For each node, the indices of its `n` highest-scoring peers.
/// Ties go to the smaller `node_id`.
pub(crate) fn top_n_peers<F>(ids: &[u32], n: usize, score: F) -> Vec<Vec<usize>>
where
    F: Fn(usize, usize) -> f64,
{
    (0..ids.len())
        .map(|i| {
            let mut cand: Vec<(f64, u32, usize)> = (0..ids.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let s = score(i, j);
                    (if s.is_nan() { f64::NEG_INFINITY } else { s }, ids[j], j)
                })
                .collect();
            cand.sort_by(|a, b| match b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal) {
                Ordering::Equal => a.1.cmp(&b.1),
                o => o,
            });
            cand.into_iter().take(n).map(|c| c.2).collect()
        })
        .collect()
}

pub(crate) fn orient(choices: &[Vec<usize>], mode: EdgeMode) -> EdgeSet {
    let pairs = choices
        .iter()
        .enumerate()
        .flat_map(|(i, peers)| peers.iter().map(move |&j| (i, j)));
    let set = match mode {
        EdgeMode::Undirected => EdgeSet::undirected(pairs),
        EdgeMode::DirectedNodeToNeighbors => EdgeSet::directed(pairs),
        EdgeMode::DirectedNeighborsToNode => EdgeSet::directed(pairs.map(|(i, j)| (j, i))),
    };
    set.expect("peer selection never yields self-loops")
}

fn check_n(n: usize, nodes: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("neighbors per node must be >= 1"));
    }
    if n >= nodes {
        return Err(Error::param(format!(
            "{n} neighbors per node needs at least {} nodes, have {nodes}",
            n + 1
        )));
    }
    Ok(())
}

/// Links each node to its `n` nearest nodes (Euclidean on raw lat/lng).
pub fn build_distance_p2p(nodes: &[NodeMeta], n: usize, mode: EdgeMode) -> Result<EdgeSet> {
    check_n(n, nodes.len())?;
    let ids: Vec<u32> = nodes.iter().map(|m| m.node_id).collect();
    let choices = top_n_peers(&ids, n, |i, j| {
        let dl = nodes[i].lat - nodes[j].lat;
        let dg = nodes[i].lng - nodes[j].lng;
        -(dl * dl + dg * dg)
    });
    Ok(orient(&choices, mode))
}

/// Pearson correlation; NaN when either series has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    sab / (saa * sbb).sqrt()
}

/// Links each node to the `n` peers whose benign packet series correlate best with its own.
pub fn build_correlation_p2p(benign: &TrafficTable, n: usize, mode: EdgeMode) -> Result<EdgeSet> {
    check_n(n, benign.num_nodes())?;
    if benign.num_slots() < 2 {
        return Err(Error::input("correlation needs at least 2 timestamps per node"));
    }
    if benign.positive_count() > 0 {
        return Err(Error::input("correlation topology must be built from attack-free traffic"));
    }
    let nn = benign.num_nodes();
    let mut corr = vec![f64::NAN; nn * nn];
    for i in 0..nn {
        for j in (i + 1)..nn {
            let c = pearson(benign.packet_series(i), benign.packet_series(j));
            corr[i * nn + j] = c;
            corr[j * nn + i] = c;
        }
    }
    let ids: Vec<u32> = benign.nodes().iter().map(|m| m.node_id).collect();
    let choices = top_n_peers(&ids, n, |i, j| corr[i * nn + j]);
    Ok(orient(&choices, mode))
}
