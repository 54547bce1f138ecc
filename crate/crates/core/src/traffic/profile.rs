use std::collections::BTreeSet;

use chrono::{NaiveDateTime, TimeDelta};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cauchy::CauchyParams;
use crate::error::{Error, Result};

/// Static description of one IoT node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeProfile {
    pub node_id: u32,
    pub lat: f64,
    pub lng: f64,
    pub benign_params: CauchyParams<f64>,
    /// Length of one on/off activity cycle, minutes.
    pub activity_period: f64,
    /// Fraction of each cycle the node is active.
    pub activity_duty_cycle: f64,
    /// Offset of the cycle start, minutes.
    pub activity_phase: f64,
}

impl NodeProfile {
    pub fn validate(&self) -> Result<()> {
        self.benign_params.validate()?;
        if !(self.activity_duty_cycle > 0.0 && self.activity_duty_cycle <= 1.0) {
            return Err(Error::param(format!(
                "node {}: duty cycle must be in (0, 1], got {}",
                self.node_id, self.activity_duty_cycle
            )));
        }
        if !(self.activity_period > 0.0) {
            return Err(Error::param(format!(
                "node {}: activity period must be > 0, got {}",
                self.node_id, self.activity_period
            )));
        }
        if !self.lat.is_finite() || !self.lng.is_finite() || !self.activity_phase.is_finite() {
            return Err(Error::param(format!("node {}: non-finite profile field", self.node_id)));
        }
        Ok(())
    }

    /// Whether the periodic schedule has the node active at `time`.
    pub fn scheduled_active(&self, time: NaiveDateTime) -> bool {
        if self.activity_duty_cycle >= 1.0 {
            return true;
        }
        let minutes = time.and_utc().timestamp() as f64 / 60.0;
        let pos = (minutes - self.activity_phase).rem_euclid(self.activity_period);
        pos < self.activity_duty_cycle * self.activity_period
    }
}

pub fn validate_profiles(profiles: &[NodeProfile]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for p in profiles {
        p.validate()?;
        if !seen.insert(p.node_id) {
            return Err(Error::param(format!("duplicate node_id {}", p.node_id)));
        }
    }
    Ok(())
}

/// One DDoS attack instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    /// Intensity; attack parameters are benign parameters scaled by `1 + k`.
    pub k: f64,
    pub start_time: NaiveDateTime,
    pub duration_hours: f64,
    pub participation_ratio: f64,
    pub attacker_set: BTreeSet<u32>,
}

impl AttackScenario {
    /// Picks `round(ratio * N)` attackers uniformly without replacement.
    pub fn with_random_attackers<R: Rng + ?Sized>(
        k: f64,
        start_time: NaiveDateTime,
        duration_hours: f64,
        participation_ratio: f64,
        node_ids: &[u32],
        rng: &mut R,
    ) -> Result<Self> {
        if !(participation_ratio > 0.0 && participation_ratio <= 1.0) {
            return Err(Error::param(format!(
                "participation ratio must be in (0, 1], got {participation_ratio}"
            )));
        }
        let count = attacker_count(participation_ratio, node_ids.len());
        let attacker_set = index::sample(rng, node_ids.len(), count)
            .into_iter()
            .map(|i| node_ids[i])
            .collect();
        let s = Self {
            k,
            start_time,
            duration_hours,
            participation_ratio,
            attacker_set,
        };
        s.validate(node_ids.len())?;
        Ok(s)
    }

    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(Error::param(format!("attack intensity k must be >= 0, got {}", self.k)));
        }
        if !(self.duration_hours >= 0.0) || !self.duration_hours.is_finite() {
            return Err(Error::param(format!("attack duration must be >= 0, got {}", self.duration_hours)));
        }
        if !(self.participation_ratio > 0.0 && self.participation_ratio <= 1.0) {
            return Err(Error::param(format!(
                "participation ratio must be in (0, 1], got {}",
                self.participation_ratio
            )));
        }
        let expected = attacker_count(self.participation_ratio, num_nodes);
        if self.attacker_set.len() != expected {
            return Err(Error::param(format!(
                "attacker set has {} nodes, expected round({} * {num_nodes}) = {expected}",
                self.attacker_set.len(),
                self.participation_ratio
            )));
        }
        Ok(())
    }

    pub fn end_time(&self) -> NaiveDateTime {
        self.start_time + TimeDelta::seconds((self.duration_hours * 3600.0).round() as i64)
    }

    /// Whether `time` lies in `[start, start + duration)`.
    pub fn in_window(&self, time: NaiveDateTime) -> bool {
        time >= self.start_time && time < self.end_time()
    }

    pub fn is_attacking(&self, node_id: u32, time: NaiveDateTime) -> bool {
        self.in_window(time) && self.attacker_set.contains(&node_id)
    }
}

pub fn attacker_count(ratio: f64, num_nodes: usize) -> usize {
    ((ratio * num_nodes as f64).round() as usize).min(num_nodes)
}
