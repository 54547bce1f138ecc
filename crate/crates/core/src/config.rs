//! Declarative experiment configuration (TOML).

use std::path::Path;

use chrono::{NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{validate_ratios, TrainConfig};
use crate::topology::{EdgeMode, RouterTree, TopologyKind};
use crate::traffic::{Horizon, NodeProfile, TIME_FORMAT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    #[serde(default)]
    pub groups: GroupsConfig,
    #[serde(default)]
    pub horizon: HorizonConfig,
    pub attack: AttackGrid,
    pub topology: TopologyGrid,
    #[serde(default)]
    pub n_sweep: Option<NSweepConfig>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub split: SplitConfig,
}

/// How node groups are populated. Without explicit `profiles`, each group is
/// synthesized: nodes scattered uniformly in a disc around `center`, assigned
/// round-robin to `clusters` that share a daily activity schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroupsConfig {
    pub count: usize,
    pub nodes: usize,
    pub clusters: usize,
    pub center: [f64; 2],
    pub radius_deg: f64,
    pub x0: [f64; 2],
    pub gamma: [f64; 2],
    pub m: [f64; 2],
    pub period_minutes: f64,
    pub duty_cycle: [f64; 2],
    pub phase_jitter_minutes: f64,
    /// Explicit node profiles used verbatim by every group.
    pub profiles: Option<Vec<NodeProfile>>,
}

impl Default for GroupsConfig {
    fn default() -> Self {
        Self {
            count: 10,
            nodes: 50,
            clusters: 5,
            center: [32.7767, -96.7970],
            radius_deg: 0.05,
            x0: [18.0, 22.0],
            gamma: [1.5, 2.5],
            m: [28.0, 32.0],
            period_minutes: 1440.0,
            duty_cycle: [0.25, 0.4],
            phase_jitter_minutes: 20.0,
            profiles: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HorizonConfig {
    pub start: String,
    pub hours: f64,
}

impl Default for HorizonConfig {
    fn default() -> Self {
        Self {
            start: "2021-01-01 00:00:00".into(),
            hours: 28.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackGrid {
    pub k_grid: Vec<f64>,
    /// `HH:MM` on the first day of the horizon.
    pub start_times: Vec<String>,
    pub durations_hours: Vec<f64>,
    pub participation_ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyGrid {
    pub kinds: Vec<TopologyKind>,
    /// Crossed with `kinds`; directed modes are skipped for router-based kinds.
    #[serde(default = "default_edge_modes")]
    pub edge_modes: Vec<EdgeMode>,
    #[serde(default = "default_n")]
    pub n: usize,
    pub loss: Vec<f64>,
    #[serde(default)]
    pub routers: RouterConfig,
}

fn default_edge_modes() -> Vec<EdgeMode> {
    vec![EdgeMode::Undirected]
}

fn default_n() -> usize {
    4
}

/// Router hierarchy: `parents[r]` is the parent of router `r` (-1 for the
/// root). IoT nodes go to leaf routers round-robin unless `assignment` lists
/// each node's leaf router.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RouterConfig {
    pub parents: Vec<i64>,
    pub assignment: Option<Vec<usize>>,
}

impl Default for RouterConfig {
    fn default() -> Self {
        Self {
            parents: vec![-1],
            assignment: None,
        }
    }
}

/// Edge-density sweep over `values` for a single topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NSweepConfig {
    pub values: Vec<usize>,
    #[serde(default = "default_sweep_kind")]
    pub kind: TopologyKind,
    #[serde(default = "default_sweep_mode")]
    pub edge_mode: EdgeMode,
    #[serde(default = "default_sweep_loss")]
    pub loss: Vec<f64>,
}

fn default_sweep_kind() -> TopologyKind {
    TopologyKind::CorrelationP2p
}

fn default_sweep_mode() -> EdgeMode {
    EdgeMode::Undirected
}

fn default_sweep_loss() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden: usize,
    pub dropout: f64,
    pub precision: Precision,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: 1024,
            dropout: 0.4,
            precision: Precision::F64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub threshold: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 1024,
            learning_rate: 1e-3,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitConfig {
    pub fn ratios(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }
}

/// Pulls the field name out of serde's "missing field `x`" style messages.
fn offending_key(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

fn check_range(key: &str, r: [f64; 2], positive: bool) -> Result<()> {
    let ok = r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && if positive { r[0] > 0.0 } else { r[0] >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, format!("expected an ordered [low, high] range, got {r:?}")))
    }
}

fn non_empty<T>(key: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(Error::config(key, "must not be empty"))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let key = offending_key(&msg).unwrap_or_else(|| "<root>".into());
            Error::config(key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.groups;
        if g.count == 0 {
            return Err(Error::config("groups.count", "must be >= 1"));
        }
        match &g.profiles {
            Some(p) => {
                non_empty("groups.profiles", p)?;
                crate::traffic::validate_profiles(p).map_err(|e| Error::config("groups.profiles", e.to_string()))?;
            }
            None => {
                if g.nodes < 2 {
                    return Err(Error::config("groups.nodes", "must be >= 2"));
                }
                if g.clusters == 0 || g.clusters > g.nodes {
                    return Err(Error::config("groups.clusters", "must lie in 1..=nodes"));
                }
                check_range("groups.x0", g.x0, false)?;
                check_range("groups.gamma", g.gamma, true)?;
                check_range("groups.m", g.m, true)?;
                check_range("groups.duty_cycle", g.duty_cycle, true)?;
                if g.duty_cycle[1] > 1.0 {
                    return Err(Error::config("groups.duty_cycle", "must not exceed 1"));
                }
                if !(g.period_minutes > 0.0) {
                    return Err(Error::config("groups.period_minutes", "must be > 0"));
                }
                if !(g.radius_deg >= 0.0) || !(g.phase_jitter_minutes >= 0.0) {
                    return Err(Error::config("groups.radius_deg", "radius and jitter must be >= 0"));
                }
            }
        }
        self.horizon()?;

        let a = &self.attack;
        non_empty("k_grid", &a.k_grid)?;
        if let Some(k) = a.k_grid.iter().find(|k| !(**k >= 0.0) || !k.is_finite()) {
            return Err(Error::config("k_grid", format!("k must be >= 0, got {k}")));
        }
        non_empty("start_times", &a.start_times)?;
        self.attack_starts()?;
        non_empty("durations_hours", &a.durations_hours)?;
        if let Some(d) = a.durations_hours.iter().find(|d| !(**d > 0.0)) {
            return Err(Error::config("durations_hours", format!("durations must be > 0, got {d}")));
        }
        non_empty("participation_ratios", &a.participation_ratios)?;
        if let Some(r) = a.participation_ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return Err(Error::config("participation_ratios", format!("ratios must lie in (0, 1], got {r}")));
        }

        let t = &self.topology;
        non_empty("topology.kinds", &t.kinds)?;
        non_empty("topology.edge_modes", &t.edge_modes)?;
        if t.n == 0 {
            return Err(Error::config("topology.n", "must be >= 1"));
        }
        non_empty("topology.loss", &t.loss)?;
        check_loss("topology.loss", &t.loss)?;
        if self.topology_pairs().is_empty() {
            return Err(Error::config("topology.edge_modes", "no valid (kind, edge_mode) combination"));
        }
        if t.kinds.iter().any(|k| k.uses_routers()) || self.n_sweep.as_ref().is_some_and(|s| s.kind.uses_routers()) {
            self.router_tree()?;
        }
        if let Some(s) = &self.n_sweep {
            non_empty("n_sweep.values", &s.values)?;
            if s.values.contains(&0) {
                return Err(Error::config("n_sweep.values", "n must be >= 1"));
            }
            non_empty("n_sweep.loss", &s.loss)?;
            check_loss("n_sweep.loss", &s.loss)?;
            if s.kind.uses_routers() && s.edge_mode != EdgeMode::Undirected {
                return Err(Error::config("n_sweep.edge_mode", "router-based kinds are undirected only"));
            }
        }
        let nodes = self.nodes_per_group();
        if let Some(bad) = std::iter::once(t.n)
            .chain(self.n_sweep.iter().flat_map(|s| s.values.iter().copied()))
            .find(|n| *n >= nodes)
        {
            return Err(Error::config("topology.n", format!("n = {bad} needs more than {nodes} nodes per group")));
        }

        let m = &self.model;
        if m.hidden == 0 {
            return Err(Error::config("model.hidden", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&m.dropout) {
            return Err(Error::config("model.dropout", "must lie in [0, 1)"));
        }
        self.train_config()
            .validate()
            .map_err(|e| Error::config("training", e.to_string()))?;
        validate_ratios(self.split.ratios()).map_err(|e| Error::config("split", e.to_string()))?;
        Ok(())
    }

    pub fn nodes_per_group(&self) -> usize {
        match &self.groups.profiles {
            Some(p) => p.len(),
            None => self.groups.nodes,
        }
    }

    pub fn horizon(&self) -> Result<Horizon> {
        let start = NaiveDateTime::parse_from_str(&self.horizon.start, TIME_FORMAT)
            .map_err(|e| Error::config("horizon.start", format!("expected `{TIME_FORMAT}`: {e}")))?;
        Horizon::from_hours(start, self.horizon.hours).map_err(|e| Error::config("horizon", e.to_string()))
    }

    pub fn attack_starts(&self) -> Result<Vec<NaiveDateTime>> {
        let day = self.horizon()?.start.date();
        self.attack
            .start_times
            .iter()
            .map(|s| {
                NaiveTime::parse_from_str(s, "%H:%M")
                    .map(|t| day.and_time(t))
                    .map_err(|e| Error::config("start_times", format!("`{s}` is not HH:MM: {e}")))
            })
            .collect()
    }

    /// Valid (kind, edge_mode) pairs of the main grid, in config order.
    pub fn topology_pairs(&self) -> Vec<(TopologyKind, EdgeMode)> {
        let mut out = Vec::new();
        for &k in &self.topology.kinds {
            for &m in &self.topology.edge_modes {
                if !(k.uses_routers() && m != EdgeMode::Undirected) && !out.contains(&(k, m)) {
                    out.push((k, m));
                }
            }
        }
        out
    }

    pub fn router_tree(&self) -> Result<RouterTree> {
        let r = &self.topology.routers;
        let parents = r
            .parents
            .iter()
            .map(|&p| match p {
                -1 => Ok(None),
                p if p >= 0 => Ok(Some(p as usize)),
                p => Err(Error::config("topology.routers.parents", format!("invalid parent {p}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let nodes = self.nodes_per_group();
        let tree = match &r.assignment {
            Some(a) => {
                if a.len() != nodes {
                    return Err(Error::config(
                        "topology.routers.assignment",
                        format!("lists {} nodes, groups have {nodes}", a.len()),
                    ));
                }
                RouterTree::new(parents, a.clone())
            }
            None => RouterTree::round_robin(parents, nodes),
        };
        tree.map_err(|e| Error::config("topology.routers", e.to_string()))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            batch_size: self.training.batch_size,
            learning_rate: self.training.learning_rate,
            threshold: self.training.threshold,
        }
    }
}

fn check_loss(key: &str, loss: &[f64]) -> Result<()> {
    match loss.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        Some(l) => Err(Error::config(key, format!("loss fractions must lie in [0, 1], got {l}"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
master_seed = 7
[attack]
k_grid = [0.0, 1.0]
start_times = ["02:00"]
durations_hours = [4]
participation_ratios = [0.5]
[topology]
kinds = ["hybrid_correlation", "distance_p2p"]
edge_modes = ["undirected", "directed_node_to_neighbors"]
loss = [0.0]
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.groups.count, 10);
        assert_eq!(c.training.epochs, 100);
        assert_eq!(c.topology.n, 4);
        assert_eq!(c.horizon().unwrap().slots, 168);
        assert_eq!(
            c.topology_pairs(),
            vec![
                (TopologyKind::HybridCorrelation, EdgeMode::Undirected),
                (TopologyKind::DistanceP2p, EdgeMode::Undirected),
                (TopologyKind::DistanceP2p, EdgeMode::DirectedNodeToNeighbors),
            ]
        );
    }

    #[test]
    fn missing_k_grid_names_the_key() {
        let text = MINIMAL.replace("k_grid = [0.0, 1.0]\n", "");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("k_grid"), "{err}");
    }

    #[test]
    fn bad_values_name_the_key() {
        for (from, to, key) in [
            ("k_grid = [0.0, 1.0]", "k_grid = [-1.0]", "k_grid"),
            ("k_grid = [0.0, 1.0]", "k_grid = []", "k_grid"),
            ("loss = [0.0]", "loss = [1.5]", "topology.loss"),
            ("start_times = [\"02:00\"]", "start_times = [\"2am\"]", "start_times"),
            ("kinds = [", "kinds = [\"mesh\", ", "distance_p2p"),
            ("master_seed = 7", "master_seed = 7\nbogus = 1", "bogus"),
        ] {
            let err = ExperimentConfig::from_toml_str(&MINIMAL.replace(from, to)).unwrap_err();
            assert!(err.is_config_error(), "{err}");
            assert!(err.to_string().contains(key), "{key}: {err}");
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }
}
