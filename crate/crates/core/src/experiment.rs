//! Experiment driver: node-group synthesis, scenario enumeration, per-cell
//! training and evaluation, sweeps and report aggregation.
//!
//! Every random stream is seeded from the master seed and a label naming what
//! it is for, so a cell's result does not depend on which other cells ran or
//! in what order.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use chrono::NaiveDateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, GroupsConfig, Precision};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate, split_scenarios, train, write_history, BinaryMetrics, ConfigKey, EpochRecord, KMetrics, MetricsReport,
    PreparedSnapshot, Split,
};
use crate::gcn::{Checkpoint, GcnModel};
use crate::scalar::Scalar;
use crate::topology::{
    build_base_edges, build_snapshots, EdgeMode, EdgeSet, GraphSnapshot, Standardizer, TopologyKind, TopologySpec,
};
use crate::traffic::{
    generate_traffic, read_dataset, write_dataset, AttackScenario, CauchyParams, NodeProfile, TrafficTable,
    NUM_FEATURES, TIME_FORMAT,
};

/// 64-bit seed from the first 8 bytes of `sha256(master || label)`.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(master.to_le_bytes())
        .chain_update(label.as_bytes())
        .finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn seeded_rng(master: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label))
}

fn draw<R: Rng + ?Sized>(rng: &mut R, r: [f64; 2]) -> f64 {
    r[0] + (r[1] - r[0]) * rng.random::<f64>()
}

/// Synthetic node group. Cluster `c` is on for `duty * period` minutes per
/// period starting at `c * period / clusters`; members jitter that phase
/// slightly. Positions ignore cluster membership.
pub fn synthesize_profiles<R: Rng + ?Sized>(g: &GroupsConfig, rng: &mut R) -> Result<Vec<NodeProfile>> {
    let clusters: Vec<(f64, f64)> = (0..g.clusters)
        .map(|c| {
            (
                c as f64 * g.period_minutes / g.clusters as f64,
                draw(rng, g.duty_cycle),
            )
        })
        .collect();
    (0..g.nodes)
        .map(|i| {
            let (phase, duty) = clusters[i % g.clusters];
            let r = g.radius_deg * rng.random::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            let benign = CauchyParams::new(draw(rng, g.x0), draw(rng, g.gamma), draw(rng, g.m))?;
            let jitter = g.phase_jitter_minutes * (2.0 * rng.random::<f64>() - 1.0);
            let p = NodeProfile {
                node_id: i as u32,
                lat: g.center[0] + r * theta.cos(),
                lng: g.center[1] + r * theta.sin(),
                benign_params: benign,
                activity_period: g.period_minutes,
                activity_duty_cycle: duty,
                activity_phase: (phase + jitter).rem_euclid(g.period_minutes),
            };
            p.validate()?;
            Ok(p)
        })
        .collect()
}

pub fn group_profiles(cfg: &ExperimentConfig, group: usize) -> Result<Vec<NodeProfile>> {
    match &cfg.groups.profiles {
        Some(p) => Ok(p.clone()),
        None => synthesize_profiles(&cfg.groups, &mut seeded_rng(cfg.master_seed, &format!("profiles/g{group}"))),
    }
}

/// One point of the attack grid, before attackers are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPoint {
    pub k: f64,
    pub start_time: NaiveDateTime,
    pub duration_hours: f64,
    pub participation_ratio: f64,
}

/// The full attack grid, `k` outermost.
pub fn scenario_grid(cfg: &ExperimentConfig) -> Result<Vec<ScenarioPoint>> {
    let starts = cfg.attack_starts()?;
    let mut out = Vec::new();
    for &k in &cfg.attack.k_grid {
        for &start_time in &starts {
            for &duration_hours in &cfg.attack.durations_hours {
                for &participation_ratio in &cfg.attack.participation_ratios {
                    out.push(ScenarioPoint {
                        k,
                        start_time,
                        duration_hours,
                        participation_ratio,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    pub scenario: AttackScenario,
    pub table: TrafficTable,
}

/// Everything generated for one node group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupData {
    pub group: usize,
    /// Attack-free trace the peer-to-peer topologies are built from.
    pub benign: TrafficTable,
    pub scenarios: Vec<ScenarioData>,
}

pub fn generate_group(cfg: &ExperimentConfig, group: usize) -> Result<GroupData> {
    let profiles = group_profiles(cfg, group)?;
    let ids: Vec<u32> = profiles.iter().map(|p| p.node_id).collect();
    let horizon = cfg.horizon()?;
    let master = cfg.master_seed;
    let benign = generate_traffic(&profiles, None, &horizon, &mut seeded_rng(master, &format!("benign/g{group}")))?;
    let scenarios = scenario_grid(cfg)?
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = seeded_rng(master, &format!("scenario/g{group}/s{i}"));
            let scenario = AttackScenario::with_random_attackers(
                p.k,
                p.start_time,
                p.duration_hours,
                p.participation_ratio,
                &ids,
                &mut rng,
            )?;
            let table = generate_traffic(&profiles, Some(&scenario), &horizon, &mut rng)?;
            Ok(ScenarioData { scenario, table })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupData {
        group,
        benign,
        scenarios,
    })
}

pub const DATASET_DIR: &str = "datasets";
pub const SCENARIO_INDEX: &str = "datasets/scenarios.csv";
pub const CELL_DIR: &str = "cells";
pub const METRICS_FILE: &str = "metrics.csv";
pub const NSWEEP_METRICS_FILE: &str = "metrics_nsweep.csv";

pub fn scenario_file(group: usize, index: usize) -> String {
    format!("{DATASET_DIR}/g{group:02}/s{index:03}.csv")
}

pub fn benign_file(group: usize) -> String {
    format!("reference/g{group:02}_benign.csv")
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioIndexRow {
    group: usize,
    scenario: usize,
    file: String,
    k: f64,
    start_time: String,
    duration_hours: f64,
    participation_ratio: f64,
    attackers: String,
}

/// Writes every group's traces under `out_dir` and returns the relative paths
/// written. Groups are consumed one at a time.
pub fn write_groups<I>(groups: I, out_dir: &Path) -> Result<Vec<String>>
where
    I: IntoIterator<Item = Result<GroupData>>,
{
    let mut written = Vec::new();
    let index_path = out_dir.join(SCENARIO_INDEX);
    create_parent(&index_path)?;
    let mut index = csv::Writer::from_path(&index_path)?;
    for g in groups {
        let g = g?;
        let rel = benign_file(g.group);
        let path = out_dir.join(&rel);
        create_parent(&path)?;
        write_dataset(&g.benign, &path)?;
        written.push(rel);
        for (i, s) in g.scenarios.iter().enumerate() {
            let rel = scenario_file(g.group, i);
            let path = out_dir.join(&rel);
            create_parent(&path)?;
            write_dataset(&s.table, &path)?;
            index.serialize(ScenarioIndexRow {
                group: g.group,
                scenario: i,
                file: rel.clone(),
                k: s.scenario.k,
                start_time: s.scenario.start_time.format(TIME_FORMAT).to_string(),
                duration_hours: s.scenario.duration_hours,
                participation_ratio: s.scenario.participation_ratio,
                attackers: s.scenario.attacker_set.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";"),
            })?;
            written.push(rel);
        }
    }
    index.flush().map_err(|e| Error::io(&index_path, e))?;
    written.push(SCENARIO_INDEX.to_string());
    Ok(written)
}

fn generate_hint(out_dir: &Path) -> String {
    format!("run `ddos-gcn generate --config <config> --out {}` first", out_dir.display())
}

/// Reads one group's traces back from a `generate` output directory.
pub fn load_group(cfg: &ExperimentConfig, out_dir: &Path, group: usize) -> Result<GroupData> {
    let index_path = out_dir.join(SCENARIO_INDEX);
    if !index_path.exists() {
        return Err(Error::Dataset {
            path: index_path,
            msg: format!("missing; {}", generate_hint(out_dir)),
        });
    }
    let mut rows: Vec<ScenarioIndexRow> = Vec::new();
    for r in csv::Reader::from_path(&index_path)?.deserialize() {
        let r: ScenarioIndexRow = r?;
        if r.group == group {
            rows.push(r);
        }
    }
    let expected = scenario_grid(cfg)?.len();
    if rows.len() != expected {
        return Err(Error::Dataset {
            path: index_path,
            msg: format!(
                "group {group} has {} scenarios but the config defines {expected}; {}",
                rows.len(),
                generate_hint(out_dir)
            ),
        });
    }
    let read = |rel: &str| {
        let path = out_dir.join(rel);
        if !path.exists() {
            return Err(Error::Dataset {
                path,
                msg: format!("missing; {}", generate_hint(out_dir)),
            });
        }
        read_dataset(&path)
    };
    let benign = read(&benign_file(group))?;
    let scenarios = rows
        .iter()
        .map(|r| {
            let start_time = NaiveDateTime::parse_from_str(&r.start_time, TIME_FORMAT).map_err(|e| Error::Dataset {
                path: index_path.clone(),
                msg: format!("bad start_time {:?}: {e}", r.start_time),
            })?;
            let attacker_set = r
                .attackers
                .split(';')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<u32>())
                .collect::<std::result::Result<BTreeSet<_>, _>>()
                .map_err(|e| Error::Dataset {
                    path: index_path.clone(),
                    msg: format!("bad attacker list: {e}"),
                })?;
            Ok(ScenarioData {
                scenario: AttackScenario {
                    k: r.k,
                    start_time,
                    duration_hours: r.duration_hours,
                    participation_ratio: r.participation_ratio,
                    attacker_set,
                },
                table: read(&r.file)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupData {
        group,
        benign,
        scenarios,
    })
}

/// One unit of work: a node group under one topology configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub group: usize,
    pub topology: TopologyKind,
    pub edge_mode: EdgeMode,
    pub n: usize,
    pub l: f64,
}

impl Cell {
    pub fn key(&self) -> ConfigKey {
        ConfigKey {
            topology: self.topology,
            edge_mode: self.edge_mode,
            n: self.n,
            l: self.l,
        }
    }

    pub fn id(&self) -> String {
        format!(
            "g{:02}-{}-{}-n{}-l{}",
            self.group,
            self.topology.as_str(),
            self.edge_mode.as_str(),
            self.n,
            self.l
        )
    }

    pub fn dir(&self, out_dir: &Path) -> PathBuf {
        out_dir.join(CELL_DIR).join(self.id())
    }

    /// Parses `key=value` pairs separated by commas, e.g.
    /// `group=3,topology=network,l=0.5`. Omitted keys take the first group,
    /// undirected edges, the config's `n` and its first loss fraction.
    pub fn parse_selector(s: &str, cfg: &ExperimentConfig) -> Result<Self> {
        let mut cell = Cell {
            group: 0,
            topology: TopologyKind::HybridCorrelation,
            edge_mode: EdgeMode::Undirected,
            n: cfg.topology.n,
            l: cfg.topology.loss[0],
        };
        let bad = |msg: String| Error::config("cell", msg);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {part:?}")))?;
            let value = value.trim();
            match key.trim() {
                "group" => cell.group = value.parse().map_err(|_| bad(format!("bad group {value:?}")))?,
                "topology" => cell.topology = value.parse().map_err(|e: Error| bad(e.to_string()))?,
                "edge_mode" => cell.edge_mode = value.parse().map_err(|e: Error| bad(e.to_string()))?,
                "n" => cell.n = value.parse().map_err(|_| bad(format!("bad n {value:?}")))?,
                "l" => cell.l = value.parse().map_err(|_| bad(format!("bad l {value:?}")))?,
                other => {
                    return Err(bad(format!(
                        "unknown selector key {other:?}; expected group, topology, edge_mode, n or l"
                    )))
                }
            }
        }
        if cell.group >= cfg.groups.count {
            return Err(bad(format!("group {} out of range (config has {})", cell.group, cfg.groups.count)));
        }
        cell.spec(cfg).map_err(|e| bad(e.to_string()))?;
        Ok(cell)
    }

    pub fn spec(&self, cfg: &ExperimentConfig) -> Result<TopologySpec> {
        let spec = TopologySpec {
            kind: self.topology,
            n: self.n,
            edge_mode: self.edge_mode,
            router_tree: if self.topology.uses_routers() {
                Some(cfg.router_tree()?)
            } else {
                None
            },
            loss_fraction: self.l,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Configurations of the main grid and of the edge-density sweep, in report order.
pub fn grid_keys(cfg: &ExperimentConfig) -> (Vec<ConfigKey>, Vec<ConfigKey>) {
    let mut main = Vec::new();
    for (topology, edge_mode) in cfg.topology_pairs() {
        for &l in &cfg.topology.loss {
            main.push(ConfigKey {
                topology,
                edge_mode,
                n: cfg.topology.n,
                l,
            });
        }
    }
    let mut sweep = Vec::new();
    if let Some(s) = &cfg.n_sweep {
        for &l in &s.loss {
            for &n in &s.values {
                sweep.push(ConfigKey {
                    topology: s.kind,
                    edge_mode: s.edge_mode,
                    n,
                    l,
                });
            }
        }
    }
    (main, sweep)
}

/// Every cell a sweep runs, group-major, without duplicates.
pub fn sweep_cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let (main, sweep) = grid_keys(cfg);
    let mut keys: Vec<ConfigKey> = Vec::new();
    for k in main.into_iter().chain(sweep) {
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    (0..cfg.groups.count)
        .flat_map(|group| {
            keys.iter().map(move |k| Cell {
                group,
                topology: k.topology,
                edge_mode: k.edge_mode,
                n: k.n,
                l: k.l,
            })
        })
        .collect()
}

/// Standardized train / validation / test snapshots of one cell.
#[derive(Debug, Clone)]
pub struct PreparedCell<T> {
    pub train: Vec<PreparedSnapshot<T>>,
    pub val: Vec<PreparedSnapshot<T>>,
    pub test: Vec<PreparedSnapshot<T>>,
    pub standardizer: Standardizer,
    /// Scenario indices of each split.
    pub split: Split,
}

/// Scenario split of a group; shared by every cell of the group.
pub fn group_split(cfg: &ExperimentConfig, data: &GroupData) -> Result<Split> {
    let ks: Vec<f64> = data.scenarios.iter().map(|s| s.scenario.k).collect();
    let ratios: Vec<f64> = data.scenarios.iter().map(|s| s.scenario.participation_ratio).collect();
    split_scenarios(
        &ks,
        &ratios,
        cfg.split.ratios(),
        &mut seeded_rng(cfg.master_seed, &format!("split/g{}", data.group)),
    )
}

/// Raw (unstandardized) snapshots of scenario `index` exactly as `cell` sees them.
pub fn scenario_snapshots<T: Scalar>(
    cfg: &ExperimentConfig,
    data: &GroupData,
    cell: &Cell,
    base: &EdgeSet,
    index: usize,
) -> Result<Vec<GraphSnapshot<T>>> {
    let spec = cell.spec(cfg)?;
    let s = data
        .scenarios
        .get(index)
        .ok_or_else(|| Error::input(format!("group {} has no scenario {index}", data.group)))?;
    let mut rng = seeded_rng(cfg.master_seed, &format!("loss/{}/s{index}", cell.id()));
    build_snapshots::<T, _>(&s.table, &spec, base, &mut rng)
}

pub fn cell_base_edges(cfg: &ExperimentConfig, data: &GroupData, cell: &Cell) -> Result<EdgeSet> {
    build_base_edges(&cell.spec(cfg)?, &data.benign)
}

pub fn prepare_cell<T: Scalar>(cfg: &ExperimentConfig, data: &GroupData, cell: &Cell) -> Result<PreparedCell<T>> {
    let base = cell_base_edges(cfg, data, cell)?;
    let ks: Vec<f64> = data.scenarios.iter().map(|s| s.scenario.k).collect();
    let split = group_split(cfg, data)?;
    let snapshots = |i: usize| scenario_snapshots::<T>(cfg, data, cell, &base, i);
    let mut train_raw = Vec::new();
    for &i in &split.train {
        train_raw.push((snapshots(i)?, ks[i]));
    }
    let standardizer = Standardizer::fit(train_raw.iter().flat_map(|(s, _)| s.iter()))?;
    let finish = |raw: Vec<GraphSnapshot<T>>, k: f64| -> Result<Vec<PreparedSnapshot<T>>> {
        raw.into_iter()
            .map(|mut s| {
                standardizer.apply(&mut s)?;
                PreparedSnapshot::new(s, k)
            })
            .collect()
    };
    let mut train_set = Vec::new();
    for (raw, k) in train_raw {
        train_set.extend(finish(raw, k)?);
    }
    let other = |idx: &[usize]| -> Result<Vec<PreparedSnapshot<T>>> {
        let mut out = Vec::new();
        for &i in idx {
            out.extend(finish(snapshots(i)?, ks[i])?);
        }
        Ok(out)
    };
    let val = other(&split.val)?;
    let test = other(&split.test)?;
    Ok(PreparedCell {
        train: train_set,
        val,
        test,
        standardizer,
        split,
    })
}

/// Result of training and testing one cell.
#[derive(Debug, Clone)]
pub struct CellRun<T> {
    pub cell: Cell,
    pub metrics: Vec<KMetrics>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub checkpoint: Checkpoint<T>,
}

pub fn run_cell<T: Scalar>(cfg: &ExperimentConfig, data: &GroupData, cell: &Cell) -> Result<CellRun<T>> {
    let prepared = prepare_cell::<T>(cfg, data, cell)?;
    run_prepared(cfg, &prepared, cell)
}

pub fn run_prepared<T: Scalar>(cfg: &ExperimentConfig, prepared: &PreparedCell<T>, cell: &Cell) -> Result<CellRun<T>> {
    let id = cell.id();
    let model = GcnModel::<T>::init(
        NUM_FEATURES,
        cfg.model.hidden,
        cfg.model.dropout,
        &mut seeded_rng(cfg.master_seed, &format!("init/{id}")),
    )?;
    let tc = cfg.train_config();
    let mut rng = seeded_rng(cfg.master_seed, &format!("train/{id}"));
    let outcome = train(model, &prepared.train, &prepared.val, &tc, &mut rng)?;
    let metrics = evaluate(&outcome.model, &prepared.test, tc.threshold, tc.batch_size)?;
    Ok(CellRun {
        cell: *cell,
        metrics,
        history: outcome.history,
        best_epoch: outcome.best_epoch,
        checkpoint: Checkpoint {
            model: outcome.model,
            optimizer: outcome.optimizer,
            standardizer: prepared.standardizer.clone(),
        },
    })
}

pub const CELL_METRICS_FILE: &str = "metrics.csv";
pub const CELL_HISTORY_FILE: &str = "history.csv";
pub const CELL_CHECKPOINT_FILE: &str = "model.ckpt";

pub fn write_cell_metrics<W: std::io::Write>(metrics: &[KMetrics], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["k"];
    header.extend(BinaryMetrics::NAMES);
    header.push("samples");
    wr.write_record(&header)?;
    for m in metrics {
        let mut rec = vec![m.k.to_string()];
        rec.extend(m.metrics.values().iter().map(|v| v.to_string()));
        rec.push(m.samples.to_string());
        wr.write_record(&rec)?;
    }
    wr.flush().map_err(|e| Error::io("cell metrics", e))?;
    Ok(())
}

pub fn read_cell_metrics(path: &Path) -> Result<Vec<KMetrics>> {
    let mut rd = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Dataset {
                    path: path.to_path_buf(),
                    msg: format!("malformed row {:?}", rec),
                })
        };
        out.push(KMetrics {
            k: num(0)?,
            metrics: BinaryMetrics::from_values([num(1)?, num(2)?, num(3)?, num(4)?]),
            samples: num(5)? as usize,
        });
    }
    Ok(out)
}

fn write_file(path: &Path, f: impl FnOnce(BufWriter<fs::File>) -> Result<()>) -> Result<()> {
    create_parent(path)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f(BufWriter::new(file))
}

/// Writes a cell's metrics, history and checkpoint; returns the relative paths.
pub fn write_cell_outputs<T: Scalar>(run: &CellRun<T>, out_dir: &Path) -> Result<Vec<String>> {
    let rel = format!("{CELL_DIR}/{}", run.cell.id());
    let dir = out_dir.join(&rel);
    write_file(&dir.join(CELL_METRICS_FILE), |w| write_cell_metrics(&run.metrics, w))?;
    write_file(&dir.join(CELL_HISTORY_FILE), |w| write_history(&run.history, w))?;
    run.checkpoint.save(dir.join(CELL_CHECKPOINT_FILE))?;
    Ok([CELL_METRICS_FILE, CELL_HISTORY_FILE, CELL_CHECKPOINT_FILE]
        .iter()
        .map(|f| format!("{rel}/{f}"))
        .collect())
}

/// Outcome of one cell as recorded by drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub cell: Cell,
    pub metrics: Vec<KMetrics>,
    pub best_epoch: usize,
    pub files: Vec<String>,
    pub seconds: f64,
}

/// Trains one cell at the configured precision and writes its outputs.
pub fn execute_cell(cfg: &ExperimentConfig, data: &GroupData, cell: &Cell, out_dir: &Path) -> Result<CellReport> {
    let t0 = Instant::now();
    let (metrics, best_epoch, files) = match cfg.model.precision {
        Precision::F64 => {
            let run = run_cell::<f64>(cfg, data, cell)?;
            let files = write_cell_outputs(&run, out_dir)?;
            (run.metrics, run.best_epoch, files)
        }
        Precision::F32 => {
            let run = run_cell::<f32>(cfg, data, cell)?;
            let files = write_cell_outputs(&run, out_dir)?;
            (run.metrics, run.best_epoch, files)
        }
    };
    Ok(CellReport {
        cell: *cell,
        metrics,
        best_epoch,
        files,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Runs `cells` on a pool of `jobs` threads. Group traces are generated once
/// per group on first use. Results come back in input order.
pub type CellResult = std::result::Result<CellReport, String>;

pub fn run_cells(
    cfg: &ExperimentConfig,
    cells: &[Cell],
    out_dir: &Path,
    jobs: usize,
    on_done: &(dyn Fn(&Cell, &CellResult) + Sync),
) -> Result<Vec<CellResult>> {
    let cache: Vec<OnceLock<std::result::Result<Arc<GroupData>, String>>> =
        (0..cfg.groups.count).map(|_| OnceLock::new()).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::param(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let data = cache[cell.group]
                    .get_or_init(|| generate_group(cfg, cell.group).map(Arc::new).map_err(|e| e.to_string()))
                    .clone()?;
                let r = execute_cell(cfg, &data, cell, out_dir).map_err(|e| e.to_string());
                on_done(cell, &r);
                r
            })
            .collect()
    }))
}

/// Aggregated reports rebuilt from the per-cell metrics files under `out_dir`.
/// Configurations with a missing group are listed in the second element.
pub fn build_reports(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(MetricsReport, MetricsReport, Vec<String>)> {
    let (main, sweep) = grid_keys(cfg);
    let mut missing = Vec::new();
    let mut collect = |keys: &[ConfigKey]| -> Result<MetricsReport> {
        let mut report = MetricsReport::default();
        'keys: for key in keys {
            let mut per_group = Vec::new();
            for group in 0..cfg.groups.count {
                let cell = Cell {
                    group,
                    topology: key.topology,
                    edge_mode: key.edge_mode,
                    n: key.n,
                    l: key.l,
                };
                let path = cell.dir(out_dir).join(CELL_METRICS_FILE);
                if !path.exists() {
                    missing.push(cell.id());
                    continue 'keys;
                }
                per_group.push(read_cell_metrics(&path)?);
            }
            report.push(*key, &per_group)?;
        }
        Ok(report)
    };
    let main_report = collect(&main)?;
    let sweep_report = collect(&sweep)?;
    Ok((main_report, sweep_report, missing))
}

/// Writes `metrics.csv` (and `metrics_nsweep.csv` when the config has an
/// edge-density sweep); returns the relative paths written.
pub fn write_reports(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(Vec<String>, Vec<String>)> {
    let (main, sweep, missing) = build_reports(cfg, out_dir)?;
    let mut written = Vec::new();
    write_file(&out_dir.join(METRICS_FILE), |w| main.write_csv(w, false))?;
    written.push(METRICS_FILE.to_string());
    if cfg.n_sweep.is_some() {
        write_file(&out_dir.join(NSWEEP_METRICS_FILE), |w| sweep.write_csv(w, true))?;
        written.push(NSWEEP_METRICS_FILE.to_string());
    }
    Ok((written, missing))
}
