use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ddos_gcn::manifest::RunManifest;

const BIN: &str = env!("CARGO_BIN_EXE_ddos-gcn");

const SMALL: &str = r#"
master_seed = 17
[groups]
count = 2
nodes = 8
clusters = 2
[horizon]
hours = 6
[attack]
k_grid = [0.0, 1.0]
start_times = ["01:00", "02:00", "03:00"]
durations_hours = [2]
participation_ratios = [1.0]
[topology]
kinds = ["hybrid_correlation", "distance_p2p"]
n = 2
loss = [0.0, 0.5]
[n_sweep]
values = [1, 3]
[model]
hidden = 8
[training]
epochs = 2
batch_size = 16
"#;

struct Sandbox {
    root: tempfile::TempDir,
}

impl Sandbox {
    fn new() -> Self {
        let root = tempfile::tempdir().unwrap();
        fs::create_dir(root.path().join("cwd")).unwrap();
        Self { root }
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.root.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn out(&self, name: &str) -> PathBuf {
        self.root.path().join(name)
    }

    /// Runs the binary from an empty working directory.
    fn run(&self, args: &[&str]) -> Output {
        Command::new(BIN).args(args).current_dir(self.root.path().join("cwd")).output().unwrap()
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

fn checksums(out: &Path) -> Vec<(String, String)> {
    let m = RunManifest::load(out).unwrap();
    let mut v: Vec<(String, String)> = m.artifacts.iter().map(|a| (a.path.clone(), a.sha256.clone())).collect();
    v.sort();
    v
}

#[test]
fn ten_groups_of_one_scenario_give_ten_datasets() {
    let sb = Sandbox::new();
    let cfg = sb.config(
        "one.toml",
        r#"
master_seed = 1
[groups]
count = 10
nodes = 6
clusters = 2
[horizon]
hours = 4
[attack]
k_grid = [0.4]
start_times = ["01:00"]
durations_hours = [2]
participation_ratios = [0.5]
[topology]
kinds = ["network"]
loss = [0.0]
"#,
    );
    let out = sb.out("one");
    let o = sb.run(&["generate", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let datasets: Vec<PathBuf> = files_under(&out.join("datasets"))
        .into_iter()
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with('s'))
        .filter(|p| p.file_name().unwrap() != "scenarios.csv")
        .collect();
    assert_eq!(datasets.len(), 10, "{datasets:?}");
    RunManifest::load(&out).unwrap().verify(&out).unwrap();
}

#[test]
fn regeneration_reproduces_checksums() {
    let sb = Sandbox::new();
    let cfg = sb.config("small.toml", SMALL);
    let (a, b) = (sb.out("a"), sb.out("b"));
    for out in [&a, &b] {
        assert!(sb.run(&["generate", "--config", s(&cfg), "--out", s(out)]).status.success());
    }
    let (ca, cb) = (checksums(&a), checksums(&b));
    assert!(!ca.is_empty());
    assert_eq!(ca, cb);
    // a different seed changes the traces
    let c = sb.out("c");
    assert!(sb.run(&["generate", "--config", s(&cfg), "--out", s(&c), "--seed", "18"]).status.success());
    assert_ne!(ca, checksums(&c));
}

#[test]
fn missing_k_grid_is_a_config_error_naming_the_key() {
    let sb = Sandbox::new();
    let cfg = sb.config("bad.toml", &SMALL.replace("k_grid = [0.0, 1.0]\n", ""));
    let o = sb.run(&["generate", "--config", s(&cfg), "--out", s(&sb.out("x"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k_grid"), "{}", stderr(&o));
}

#[test]
fn unknown_topology_lists_the_valid_kinds() {
    let sb = Sandbox::new();
    let cfg = sb.config("small.toml", SMALL);
    let out = sb.out("o");
    assert!(sb.run(&["generate", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let o = sb.run(&["train", "--config", s(&cfg), "--out", s(&out), "--cell", "topology=mesh"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for kind in ["distance_p2p", "correlation_p2p", "network", "hybrid_distance", "hybrid_correlation"] {
        assert!(err.contains(kind), "{err}");
    }
}

#[test]
fn training_without_datasets_points_at_generate() {
    let sb = Sandbox::new();
    let cfg = sb.config("small.toml", SMALL);
    let o = sb.run(&["train", "--config", s(&cfg), "--out", s(&sb.out("empty")), "--cell", "group=0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("generate"), "{}", stderr(&o));
}

#[test]
fn train_is_repeatable_and_lr_zero_freezes_the_model() {
    let sb = Sandbox::new();
    let cfg = sb.config("small.toml", SMALL);
    let out = sb.out("o");
    assert!(sb.run(&["generate", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let cell = "group=1,topology=hybrid_correlation,l=0.5";
    let metrics = out.join("cells/g01-hybrid_correlation-undirected-n2-l0.5/metrics.csv");
    let mut seen = Vec::new();
    for _ in 0..2 {
        let o = sb.run(&["train", "--config", s(&cfg), "--out", s(&out), "--cell", cell, "--dump-snapshots"]);
        assert!(o.status.success(), "{}", stderr(&o));
        seen.push(fs::read(&metrics).unwrap());
    }
    assert_eq!(seen[0], seen[1]);
    RunManifest::load(&out).unwrap().verify(&out).unwrap();

    let o = sb.run(&["train", "--config", s(&cfg), "--out", s(&out), "--cell", cell, "--lr", "0", "--epochs", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let history = fs::read_to_string(metrics.with_file_name("history.csv")).unwrap();
    let val: Vec<&str> = history.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(val.len(), 3);
    // an unchanged model scores the validation set identically every epoch
    assert!(val.iter().all(|v| *v == val[0]), "{history}");
}

#[test]
fn sweep_is_parallelism_independent_and_report_rebuilds_it() {
    let sb = Sandbox::new();
    let cfg = sb.config("small.toml", SMALL);
    let (a, b) = (sb.out("a"), sb.out("b"));
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        let o = sb.run(&["sweep", "--config", s(&cfg), "--out", s(out), "--jobs", jobs]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["metrics.csv", "metrics_nsweep.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let main = fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert_eq!(main.lines().next().unwrap(), "topology,edge_mode,l,k,metric,mean,ci95");
    // 2 kinds x 2 loss levels x 2 k values x 4 metrics
    assert_eq!(main.lines().count(), 1 + 2 * 2 * 2 * 4);

    let before = fs::read(a.join("metrics.csv")).unwrap();
    fs::remove_file(a.join("metrics.csv")).unwrap();
    let o = sb.run(&["report", "--config", s(&cfg), "--out", s(&a)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(a.join("metrics.csv")).unwrap(), before);
    RunManifest::load(&a).unwrap().verify(&a).unwrap();
}

#[test]
fn report_with_missing_cells_fails_at_runtime() {
    let sb = Sandbox::new();
    let cfg = sb.config("small.toml", SMALL);
    let o = sb.run(&["report", "--config", s(&cfg), "--out", s(&sb.out("nothing"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn manifest_detects_tampering() {
    let sb = Sandbox::new();
    let cfg = sb.config("small.toml", SMALL);
    let out = sb.out("o");
    assert!(sb.run(&["generate", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let m = RunManifest::load(&out).unwrap();
    m.verify(&out).unwrap();
    let victim = out.join(&m.artifacts[0].path);
    let mut bytes = fs::read(&victim).unwrap();
    bytes.push(b'\n');
    fs::write(&victim, bytes).unwrap();
    assert!(m.verify(&out).is_err());
}

#[test]
fn nothing_is_written_outside_the_output_directory() {
    let sb = Sandbox::new();
    let cfg = sb.config("small.toml", SMALL);
    let out = sb.out("o");
    let before = files_under(sb.root.path());
    assert!(sb.run(&["generate", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let o = sb.run(&["train", "--config", s(&cfg), "--out", s(&out), "--cell", "topology=distance_p2p"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let after: Vec<PathBuf> = files_under(sb.root.path()).into_iter().filter(|p| !p.starts_with(&out)).collect();
    assert_eq!(before, after);
}

#[test]
fn usage_errors_exit_with_the_config_code() {
    let sb = Sandbox::new();
    assert_eq!(sb.run(&["sweep"]).status.code(), Some(2));
    let cfg = sb.config("neg.toml", &SMALL.replace("loss = [0.0, 0.5]", "loss = [1.5]"));
    let o = sb.run(&["sweep", "--config", s(&cfg), "--out", s(&sb.out("x"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("loss"), "{}", stderr(&o));
}
