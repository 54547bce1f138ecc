use chrono::{NaiveDateTime, TimeDelta, Timelike};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::profile::{validate_profiles, AttackScenario, NodeProfile};
use super::table::{NodeMeta, TrafficTable, SLOT_MINUTES};
use crate::error::{Error, Result};

/// Time range `[start, start + slots * 10 min)` of a generated trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub start: NaiveDateTime,
    pub slots: usize,
}

impl Horizon {
    pub fn new(start: NaiveDateTime, slots: usize) -> Result<Self> {
        let h = Self { start, slots };
        h.validate()?;
        Ok(h)
    }

    pub fn from_hours(start: NaiveDateTime, hours: f64) -> Result<Self> {
        let slots = hours * 60.0 / SLOT_MINUTES as f64;
        if !(slots >= 0.0) || slots.fract() != 0.0 {
            return Err(Error::param(format!("horizon of {hours} h is not a whole number of 10-minute slots")));
        }
        Self::new(start, slots as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.start.second() != 0 || self.start.nanosecond() != 0 || self.start.minute() as i64 % SLOT_MINUTES != 0 {
            return Err(Error::param(format!("horizon start {} is not aligned to the 10-minute grid", self.start)));
        }
        Ok(())
    }

    pub fn time(&self, slot: usize) -> NaiveDateTime {
        self.start + TimeDelta::minutes(SLOT_MINUTES * slot as i64)
    }
}

/// Synthesizes one trace per node over `horizon`.
///
/// A node is active when its periodic schedule says so or when it is attacking.
/// Active non-attacking slots draw from the node's benign distribution,
/// attacking slots from the benign parameters scaled by `1 + k`; inactive slots
/// carry zero packets. Draws are taken node by node in time order, and only for
/// active slots.
pub fn generate_traffic<R: Rng + ?Sized>(
    profiles: &[NodeProfile],
    scenario: Option<&AttackScenario>,
    horizon: &Horizon,
    rng: &mut R,
) -> Result<TrafficTable> {
    horizon.validate()?;
    validate_profiles(profiles)?;
    if let Some(s) = scenario {
        s.validate(profiles.len())?;
        if let Some(unknown) = s.attacker_set.iter().find(|id| !profiles.iter().any(|p| p.node_id == **id)) {
            return Err(Error::input(format!("attacker set names unknown node_id {unknown}")));
        }
    }

    let slots = horizon.slots;
    let n = profiles.len() * slots;
    let mut active = Vec::with_capacity(n);
    let mut packet = Vec::with_capacity(n);
    let mut label = Vec::with_capacity(n);

    for p in profiles {
        let attack_params = match scenario {
            Some(s) if s.attacker_set.contains(&p.node_id) => Some(p.benign_params.scale_attack(s.k)?),
            _ => None,
        };
        for t in 0..slots {
            let time = horizon.time(t);
            let attacking = attack_params.is_some() && scenario.is_some_and(|s| s.in_window(time));
            let on = attacking || p.scheduled_active(time);
            let volume = match (on, attacking) {
                (false, _) => 0.0,
                (true, true) => attack_params.as_ref().unwrap().sample(rng),
                (true, false) => p.benign_params.sample(rng),
            };
            active.push(on);
            packet.push(volume);
            label.push(attacking);
        }
    }

    let nodes = profiles
        .iter()
        .map(|p| NodeMeta {
            node_id: p.node_id,
            lat: p.lat,
            lng: p.lng,
        })
        .collect();
    TrafficTable::from_series(nodes, horizon.start, slots, active, packet, label)
}
