//! Router hierarchy: IoT nodes hang off leaf routers, routers form a rooted tree.
//! In graph indexing, IoT nodes come first and router `r` is node `num_iot + r`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::edges::EdgeSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouterTree {
    /// Parent router of each router; `None` for the root.
    parents: Vec<Option<usize>>,
    /// Leaf router of each IoT node.
    assignment: Vec<usize>,
    depth: Vec<usize>,
}

impl RouterTree {
    pub fn new(parents: Vec<Option<usize>>, assignment: Vec<usize>) -> Result<Self> {
        let r = parents.len();
        if r == 0 {
            return Err(Error::input("router tree has no routers"));
        }
        let roots = parents.iter().filter(|p| p.is_none()).count();
        if roots != 1 {
            return Err(Error::input(format!("router tree must have exactly one root, found {roots}")));
        }
        let mut depth = vec![0; r];
        for start in 0..r {
            let (mut cur, mut d) = (start, 0);
            while let Some(p) = parents[cur] {
                if p >= r {
                    return Err(Error::input(format!("router {cur} has unknown parent {p}")));
                }
                d += 1;
                if d > r {
                    return Err(Error::input(format!("router cycle through router {start}")));
                }
                cur = p;
            }
            depth[start] = d;
        }
        let mut has_child = vec![false; r];
        for p in parents.iter().flatten() {
            has_child[*p] = true;
        }
        for (i, &a) in assignment.iter().enumerate() {
            if a >= r {
                return Err(Error::input(format!("IoT node {i} assigned to unknown router {a}")));
            }
            if has_child[a] {
                return Err(Error::input(format!("IoT node {i} assigned to non-leaf router {a}")));
            }
        }
        Ok(Self {
            parents,
            assignment,
            depth,
        })
    }

    /// One router with every IoT node attached to it.
    pub fn single(num_iot: usize) -> Self {
        Self::new(vec![None], vec![0; num_iot]).expect("single-router tree is well formed")
    }

    /// Builds a tree from a parent list and spreads IoT nodes over the leaves round-robin.
    pub fn round_robin(parents: Vec<Option<usize>>, num_iot: usize) -> Result<Self> {
        let r = parents.len();
        let mut has_child = vec![false; r];
        for p in parents.iter().flatten() {
            if *p < r {
                has_child[*p] = true;
            }
        }
        let leaves: Vec<usize> = (0..r).filter(|&i| !has_child[i]).collect();
        if leaves.is_empty() {
            return Err(Error::input("router tree has no leaf routers"));
        }
        let assignment = (0..num_iot).map(|i| leaves[i % leaves.len()]).collect();
        Self::new(parents, assignment)
    }

    pub fn num_routers(&self) -> usize {
        self.parents.len()
    }

    pub fn num_iot(&self) -> usize {
        self.assignment.len()
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }
}

/// Undirected IoT-to-router and router-to-parent edges.
pub fn build_network_topology(tree: &RouterTree) -> Result<EdgeSet> {
    let n = tree.num_iot();
    let iot = tree.assignment.iter().enumerate().map(|(i, &r)| (i, n + r));
    let up = tree
        .parents
        .iter()
        .enumerate()
        .filter_map(|(r, p)| p.map(|p| (n + r, n + p)));
    EdgeSet::undirected(iot.chain(up))
}

/// Appends router rows below the IoT rows: a leaf router holds the sum of its
/// IoT nodes' features, every higher router the sum of its child routers.
pub fn aggregate_router_features<T: Scalar>(iot_features: &Array2<T>, tree: &RouterTree) -> Result<Array2<T>> {
    let n = tree.num_iot();
    if iot_features.nrows() != n {
        return Err(Error::shape(format!(
            "router tree covers {n} IoT nodes but feature matrix has {} rows",
            iot_features.nrows()
        )));
    }
    let r = tree.num_routers();
    let f = iot_features.ncols();
    let mut out = Array2::<T>::zeros((n + r, f));
    out.slice_mut(ndarray::s![..n, ..]).assign(iot_features);
    for (i, &leaf) in tree.assignment.iter().enumerate() {
        for c in 0..f {
            out[[n + leaf, c]] = out[[n + leaf, c]] + iot_features[[i, c]];
        }
    }
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|a, b| tree.depth[*b].cmp(&tree.depth[*a]).then(a.cmp(b)));
    for child in order {
        if let Some(p) = tree.parents[child] {
            for c in 0..f {
                out[[n + p, c]] = out[[n + p, c]] + out[[n + child, c]];
            }
        }
    }
    Ok(out)
}
