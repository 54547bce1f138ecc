use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ddos_gcn::experiment::{
    self, cell_base_edges, execute_cell, generate_group, group_split, load_group, run_cells, scenario_snapshots,
    sweep_cells, write_groups, write_reports, Cell,
};
use ddos_gcn::manifest::{CellStatus, RunManifest, Status};
use ddos_gcn::topology::GraphSnapshot;
use ddos_gcn::{Error, ExperimentConfig};

// Training allocates and frees large activation buffers every batch; glibc
// hands that memory back to the kernel each time, which costs more than the
// arithmetic.
#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(name = "ddos-gcn", version, about = "Synthetic IoT DDoS traces, graph construction and GCN detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; nothing is written outside it.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one dataset file per (group, scenario).
    Generate(Common),
    /// Train and test one cell from previously generated datasets.
    Train {
        #[command(flatten)]
        common: Common,
        /// e.g. `group=0,topology=hybrid_correlation,edge_mode=undirected,n=4,l=0.5`
        #[arg(long)]
        cell: String,
        /// Overrides the learning rate.
        #[arg(long)]
        lr: Option<f64>,
        /// Overrides the epoch count.
        #[arg(long)]
        epochs: Option<usize>,
        /// Also write the first test scenario's graph snapshots as text.
        #[arg(long)]
        dump_snapshots: bool,
    },
    /// Run every cell of the config's grids and aggregate across groups.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Cells trained concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Re-aggregate existing cell outputs into the metrics files.
    Report(Common),
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type CmdResult = Result<(), Failure>;

fn load_config(c: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(&c.config).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(seed) = c.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn ensure_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", path.display())))
}

/// Records the command in the manifest, saves it and passes `result` through.
fn finish(
    mut manifest: RunManifest,
    out: &Path,
    command: &str,
    started: Instant,
    result: CmdResult,
) -> CmdResult {
    let status = if result.is_ok() { Status::Ok } else { Status::Failed };
    manifest.record_command(command, status, started.elapsed().as_secs_f64());
    manifest.save(out)?;
    result
}

fn cmd_generate(c: &Common) -> CmdResult {
    let cfg = load_config(c)?;
    let started = Instant::now();
    ensure_dir(&c.out)?;
    let mut manifest = RunManifest::open(&cfg, &c.out)?;
    let groups = (0..cfg.groups.count).map(|g| {
        eprintln!("generating group {g}");
        generate_group(&cfg, g)
    });
    let result = write_groups(groups, &c.out).and_then(|files| {
        for f in &files {
            manifest.record_artifact(&c.out, f)?;
        }
        eprintln!("wrote {} files under {}", files.len(), c.out.display());
        Ok(())
    });
    finish(manifest, &c.out, "generate", started, result.map_err(Failure::from))
}

fn dump_snapshots(cfg: &ExperimentConfig, data: &experiment::GroupData, cell: &Cell, out: &Path) -> Result<String, Error> {
    let split = group_split(cfg, data)?;
    let base = cell_base_edges(cfg, data, cell)?;
    let index = split.test[0];
    let snaps: Vec<GraphSnapshot<f64>> = scenario_snapshots(cfg, data, cell, &base, index)?;
    let rel = format!("{}/{}/snapshots_s{index:03}.txt", experiment::CELL_DIR, cell.id());
    let path = out.join(&rel);
    let mut w = std::io::BufWriter::new(fs::File::create(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?);
    for s in &snaps {
        s.write_dump(&mut w).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    }
    Ok(rel)
}

fn cmd_train(c: &Common, selector: &str, lr: Option<f64>, epochs: Option<usize>, dump: bool) -> CmdResult {
    let mut cfg = load_config(c)?;
    if let Some(lr) = lr {
        cfg.training.learning_rate = lr;
    }
    if let Some(e) = epochs {
        cfg.training.epochs = e;
    }
    cfg.validate()?;
    let cell = Cell::parse_selector(selector, &cfg)?;
    let data = load_group(&cfg, &c.out, cell.group)?;
    let started = Instant::now();
    let mut manifest = RunManifest::open(&cfg, &c.out)?;
    let result = (|| -> Result<(), Error> {
        let report = execute_cell(&cfg, &data, &cell, &c.out);
        manifest.record_cell(CellStatus {
            id: cell.id(),
            status: if report.is_ok() { Status::Ok } else { Status::Failed },
            error: report.as_ref().err().map(|e| e.to_string()),
            seconds: started.elapsed().as_secs_f64(),
        });
        let report = report?;
        let mut files = report.files.clone();
        if dump {
            files.push(dump_snapshots(&cfg, &data, &cell, &c.out)?);
        }
        for f in &files {
            manifest.record_artifact(&c.out, f)?;
        }
        eprintln!("{}: best epoch {}, {:.1}s", cell.id(), report.best_epoch, report.seconds);
        for m in &report.metrics {
            println!(
                "k={} accuracy={:.4} f1={:.4} auc={:.4} recall={:.4}",
                m.k, m.metrics.binary_accuracy, m.metrics.f1, m.metrics.auc, m.metrics.recall
            );
        }
        Ok(())
    })();
    finish(manifest, &c.out, "train", started, result.map_err(Failure::from))
}

/// Writes the aggregated metrics files; returns them and the cells that had no outputs.
fn report_files(
    cfg: &ExperimentConfig,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<(Vec<String>, Vec<String>), Error> {
    let (files, missing) = write_reports(cfg, out)?;
    for f in &files {
        manifest.record_artifact(out, f)?;
    }
    Ok((files, missing))
}

fn cmd_sweep(c: &Common, jobs: usize) -> CmdResult {
    let cfg = load_config(c)?;
    let started = Instant::now();
    ensure_dir(&c.out)?;
    let mut manifest = RunManifest::open(&cfg, &c.out)?;
    let cells = sweep_cells(&cfg);
    eprintln!("sweep: {} cells on {} thread(s)", cells.len(), jobs.max(1));
    let progress = |cell: &Cell, r: &experiment::CellResult| match r {
        Ok(rep) => eprintln!("  {cell}: ok ({:.1}s, best epoch {})", rep.seconds, rep.best_epoch),
        Err(e) => eprintln!("  {cell}: FAILED: {e}"),
    };
    let result = (|| -> Result<usize, Error> {
        let results = run_cells(&cfg, &cells, &c.out, jobs, &progress)?;
        let mut failed = 0;
        for (cell, r) in cells.iter().zip(&results) {
            match r {
                Ok(rep) => {
                    for f in &rep.files {
                        manifest.record_artifact(&c.out, f)?;
                    }
                    manifest.record_cell(CellStatus {
                        id: cell.id(),
                        status: Status::Ok,
                        error: None,
                        seconds: rep.seconds,
                    });
                }
                Err(e) => {
                    failed += 1;
                    manifest.record_cell(CellStatus {
                        id: cell.id(),
                        status: Status::Failed,
                        error: Some(e.clone()),
                        seconds: 0.0,
                    });
                }
            }
        }
        for f in report_files(&cfg, &c.out, &mut manifest)?.0 {
            eprintln!("wrote {}", c.out.join(f).display());
        }
        Ok(failed)
    })();
    let result = match result {
        Ok(0) => Ok(()),
        Ok(n) => Err(Failure::Runtime(format!("{n} of {} cells failed; see manifest.json", cells.len()))),
        Err(e) => Err(e.into()),
    };
    finish(manifest, &c.out, "sweep", started, result)
}

fn cmd_report(c: &Common) -> CmdResult {
    let cfg = load_config(c)?;
    let started = Instant::now();
    ensure_dir(&c.out)?;
    let mut manifest = RunManifest::open(&cfg, &c.out)?;
    let result = report_files(&cfg, &c.out, &mut manifest).map_err(Failure::from).and_then(|(_, missing)| {
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Failure::Runtime(format!(
                "no outputs for {} cell(s), e.g. {}; their configurations were left out",
                missing.len(),
                missing[0]
            )))
        }
    });
    finish(manifest, &c.out, "report", started, result)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(c) => cmd_generate(c),
        Command::Train {
            common,
            cell,
            lr,
            epochs,
            dump_snapshots,
        } => cmd_train(common, cell, *lr, *epochs, *dump_snapshots),
        Command::Sweep { common, jobs } => cmd_sweep(common, *jobs),
        Command::Report(c) => cmd_report(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
