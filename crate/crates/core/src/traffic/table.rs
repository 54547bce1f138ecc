use chrono::{NaiveDateTime, TimeDelta};

use crate::error::{Error, Result};

/// Width of one trace interval.
pub const SLOT_MINUTES: i64 = 10;

/// Rolling-average windows, minutes: 30 min, 1 h, 2 h, 4 h.
pub const WINDOW_MINUTES: [i64; 4] = [30, 60, 120, 240];

/// Number of per-node features: the packet volume plus one average per window.
pub const NUM_FEATURES: usize = 1 + WINDOW_MINUTES.len();

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMeta {
    pub node_id: u32,
    pub lat: f64,
    pub lng: f64,
}

/// One `(node, time)` record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficRow {
    pub node_id: u32,
    pub lat: f64,
    pub lng: f64,
    pub time: NaiveDateTime,
    pub active: bool,
    pub packet: f64,
    /// Rolling averages in [`WINDOW_MINUTES`] order.
    pub averages: [f64; 4],
    pub label: bool,
}

/// Per-node packet traces on a regular 10-minute grid.
///
/// Storage is columnar and node-major: the value for node `i` at slot `t`
/// lives at index `i * num_slots + t`. Nodes keep their insertion order, which
/// is also the node index used by the graph builders.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficTable {
    start: NaiveDateTime,
    slots: usize,
    nodes: Vec<NodeMeta>,
    active: Vec<bool>,
    packet: Vec<f64>,
    averages: [Vec<f64>; 4],
    label: Vec<bool>,
}

/// Trailing-window averages: the sum of the `W / 10` most recent slots
/// (current included, zero before the trace start) divided by `W / 10`.
pub fn rolling_averages(packet: &[f64]) -> [Vec<f64>; 4] {
    WINDOW_MINUTES.map(|w| {
        let width = (w / SLOT_MINUTES) as usize;
        (0..packet.len())
            .map(|t| {
                let from = (t + 1).saturating_sub(width);
                packet[from..=t].iter().sum::<f64>() / width as f64
            })
            .collect()
    })
}

pub fn slot_delta() -> TimeDelta {
    TimeDelta::minutes(SLOT_MINUTES)
}

impl TrafficTable {
    pub fn empty() -> Self {
        Self {
            start: NaiveDateTime::default(),
            slots: 0,
            nodes: Vec::new(),
            active: Vec::new(),
            packet: Vec::new(),
            averages: Default::default(),
            label: Vec::new(),
        }
    }

    /// Builds a table from raw per-node series and derives the rolling averages.
    ///
    /// `active`, `packet` and `label` are node-major with `nodes.len() * slots` entries.
    pub fn from_series(
        nodes: Vec<NodeMeta>,
        start: NaiveDateTime,
        slots: usize,
        active: Vec<bool>,
        packet: Vec<f64>,
        label: Vec<bool>,
    ) -> Result<Self> {
        let n = nodes.len() * slots;
        if active.len() != n || packet.len() != n || label.len() != n {
            return Err(Error::shape(format!(
                "series length mismatch: expected {n}, got active={} packet={} label={}",
                active.len(),
                packet.len(),
                label.len()
            )));
        }
        if n == 0 {
            return Ok(Self::empty());
        }
        let mut averages: [Vec<f64>; 4] = Default::default();
        for avg in averages.iter_mut() {
            avg.reserve(n);
        }
        for i in 0..nodes.len() {
            let series = &packet[i * slots..(i + 1) * slots];
            for (dst, src) in averages.iter_mut().zip(rolling_averages(series)) {
                dst.extend(src);
            }
        }
        let table = Self {
            start,
            slots,
            nodes,
            active,
            packet,
            averages,
            label,
        };
        table.check_invariants()?;
        Ok(table)
    }

    /// Assembles a table from complete rows; rows may arrive in any order but
    /// must cover every `(node, time)` pair of a regular grid exactly once.
    pub fn from_rows(rows: Vec<TrafficRow>) -> Result<Self> {
        if rows.is_empty() {
            return Ok(Self::empty());
        }
        let start = rows.iter().map(|r| r.time).min().unwrap();
        let end = rows.iter().map(|r| r.time).max().unwrap();
        let span = (end - start).num_seconds();
        if span % (SLOT_MINUTES * 60) != 0 {
            return Err(Error::input("timestamps are not on a 10-minute grid"));
        }
        let slots = (span / (SLOT_MINUTES * 60)) as usize + 1;

        let mut nodes: Vec<NodeMeta> = Vec::new();
        let mut index = std::collections::HashMap::new();
        for r in &rows {
            index.entry(r.node_id).or_insert_with(|| {
                nodes.push(NodeMeta {
                    node_id: r.node_id,
                    lat: r.lat,
                    lng: r.lng,
                });
                nodes.len() - 1
            });
        }
        let n = nodes.len() * slots;
        if rows.len() != n {
            return Err(Error::input(format!(
                "{} rows do not form a full grid of {} nodes x {slots} timestamps",
                rows.len(),
                nodes.len()
            )));
        }
        let mut seen = vec![false; n];
        let mut table = Self {
            start,
            slots,
            nodes,
            active: vec![false; n],
            packet: vec![0.0; n],
            averages: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            label: vec![false; n],
        };
        for r in rows {
            let secs = (r.time - start).num_seconds();
            if secs % (SLOT_MINUTES * 60) != 0 {
                return Err(Error::input(format!("timestamp {} is off the 10-minute grid", r.time)));
            }
            let node = index[&r.node_id];
            let meta = table.nodes[node];
            if meta.lat != r.lat || meta.lng != r.lng {
                return Err(Error::input(format!("node {} has inconsistent coordinates", r.node_id)));
            }
            let at = node * slots + (secs / (SLOT_MINUTES * 60)) as usize;
            if std::mem::replace(&mut seen[at], true) {
                return Err(Error::input(format!("duplicate row for node {} at {}", r.node_id, r.time)));
            }
            table.active[at] = r.active;
            table.packet[at] = r.packet;
            for (w, v) in r.averages.iter().enumerate() {
                table.averages[w][at] = *v;
            }
            table.label[at] = r.label;
        }
        table.check_invariants()?;
        Ok(table)
    }

    pub fn check_invariants(&self) -> Result<()> {
        for i in 0..self.active.len() {
            if !self.active[i] && self.packet[i] != 0.0 {
                return Err(Error::input(format!(
                    "node {} at {}: inactive with non-zero packet volume",
                    self.nodes[i / self.slots].node_id,
                    self.time(i % self.slots)
                )));
            }
            if self.label[i] && !self.active[i] {
                return Err(Error::input(format!(
                    "node {} at {}: labeled attacking while inactive",
                    self.nodes[i / self.slots].node_id,
                    self.time(i % self.slots)
                )));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.packet.is_empty()
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.packet.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_slots(&self) -> usize {
        self.slots
    }

    pub fn nodes(&self) -> &[NodeMeta] {
        &self.nodes
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn time(&self, slot: usize) -> NaiveDateTime {
        self.start + TimeDelta::minutes(SLOT_MINUTES * slot as i64)
    }

    pub fn node_index(&self, node_id: u32) -> Option<usize> {
        self.nodes.iter().position(|n| n.node_id == node_id)
    }

    #[inline]
    fn at(&self, node: usize, slot: usize) -> usize {
        node * self.slots + slot
    }

    pub fn packet_series(&self, node: usize) -> &[f64] {
        &self.packet[node * self.slots..(node + 1) * self.slots]
    }

    pub fn active(&self, node: usize, slot: usize) -> bool {
        self.active[self.at(node, slot)]
    }

    pub fn label(&self, node: usize, slot: usize) -> bool {
        self.label[self.at(node, slot)]
    }

    /// `[PACKET, avg_30m, avg_1h, avg_2h, avg_4h]` for one node at one slot.
    pub fn features(&self, node: usize, slot: usize) -> [f64; NUM_FEATURES] {
        let i = self.at(node, slot);
        [
            self.packet[i],
            self.averages[0][i],
            self.averages[1][i],
            self.averages[2][i],
            self.averages[3][i],
        ]
    }

    pub fn row(&self, i: usize) -> TrafficRow {
        let node = self.nodes[i / self.slots];
        TrafficRow {
            node_id: node.node_id,
            lat: node.lat,
            lng: node.lng,
            time: self.time(i % self.slots),
            active: self.active[i],
            packet: self.packet[i],
            averages: [
                self.averages[0][i],
                self.averages[1][i],
                self.averages[2][i],
                self.averages[3][i],
            ],
            label: self.label[i],
        }
    }

    /// Rows in node-major, time-ascending order.
    pub fn rows(&self) -> impl Iterator<Item = TrafficRow> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn positive_count(&self) -> usize {
        self.label.iter().filter(|l| **l).count()
    }
}
