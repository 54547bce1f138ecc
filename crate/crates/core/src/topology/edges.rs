use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Graph edges between node indices.
///
/// Undirected sets store each edge once as `(min, max)`. Both kinds are kept
/// sorted and free of duplicates and self-loops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSet {
    edges: Vec<(usize, usize)>,
    undirected: bool,
}

impl EdgeSet {
    pub fn empty(undirected: bool) -> Self {
        Self {
            edges: Vec::new(),
            undirected,
        }
    }

    pub fn undirected<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Result<Self> {
        Self::build(pairs, true)
    }

    pub fn directed<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Result<Self> {
        Self::build(pairs, false)
    }

    fn build<I: IntoIterator<Item = (usize, usize)>>(pairs: I, undirected: bool) -> Result<Self> {
        let mut edges = Vec::new();
        for (s, t) in pairs {
            if s == t {
                return Err(Error::input(format!("self-loop on node {s}")));
            }
            edges.push(if undirected { (s.min(t), s.max(t)) } else { (s, t) });
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { edges, undirected })
    }

    pub(crate) fn from_sorted_unchecked(edges: Vec<(usize, usize)>, undirected: bool) -> Self {
        Self { edges, undirected }
    }

    pub fn is_undirected(&self) -> bool {
        self.undirected
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn as_slice(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn contains(&self, s: usize, t: usize) -> bool {
        let key = if self.undirected { (s.min(t), s.max(t)) } else { (s, t) };
        self.edges.binary_search(&key).is_ok()
    }

    /// Largest node index referenced plus one.
    pub fn min_nodes(&self) -> usize {
        self.edges.iter().map(|&(s, t)| s.max(t) + 1).max().unwrap_or(0)
    }

    pub fn out_degrees(&self, num_nodes: usize) -> Vec<usize> {
        let mut d = vec![0; num_nodes];
        for &(s, t) in &self.edges {
            d[s] += 1;
            if self.undirected {
                d[t] += 1;
            }
        }
        d
    }

    pub fn in_degrees(&self, num_nodes: usize) -> Vec<usize> {
        let mut d = vec![0; num_nodes];
        for &(s, t) in &self.edges {
            d[t] += 1;
            if self.undirected {
                d[s] += 1;
            }
        }
        d
    }

    /// Set union; both sets must be undirected.
    pub fn union(&self, other: &EdgeSet) -> Result<EdgeSet> {
        if !self.undirected || !other.undirected {
            return Err(Error::input("hybrid union requires undirected edge sets"));
        }
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_sorted_unchecked(edges, true))
    }
}

/// Hybrid topology: union of peer-to-peer and router edges.
pub fn build_hybrid(p2p_edges: &EdgeSet, network_edges: &EdgeSet) -> Result<EdgeSet> {
    p2p_edges.union(network_edges)
}
