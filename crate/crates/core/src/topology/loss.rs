use rand::seq::index;
use rand::Rng;

use super::edges::EdgeSet;
use crate::error::{Error, Result};

/// `floor(l * len)`, tolerant of the representation error in `l`.
pub fn dropped_count(l: f64, len: usize) -> usize {
    (((l * len as f64) + 1e-9).floor() as usize).min(len)
}

/// Removes `floor(l * |E|)` edges chosen uniformly without replacement.
/// An undirected edge is one unit. Surviving edges keep their order.
pub fn drop_edges<R: Rng + ?Sized>(edges: &EdgeSet, l: f64, rng: &mut R) -> Result<EdgeSet> {
    if !(0.0..=1.0).contains(&l) {
        return Err(Error::param(format!("loss fraction must be in [0, 1], got {l}")));
    }
    let drop = dropped_count(l, edges.len());
    if drop == 0 {
        return Ok(edges.clone());
    }
    let mut keep = vec![true; edges.len()];
    for i in index::sample(rng, edges.len(), drop) {
        keep[i] = false;
    }
    let kept = edges
        .iter()
        .zip(keep)
        .filter_map(|(e, k)| k.then_some(e))
        .collect();
    Ok(EdgeSet::from_sorted_unchecked(kept, edges.is_undirected()))
}
