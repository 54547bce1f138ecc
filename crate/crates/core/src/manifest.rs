//! Run manifest: what produced an output directory and a checksum for every file in it.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStatus {
    pub id: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub command: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub status: Status,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Configuration of the most recent command.
    pub config_hash: String,
    pub master_seed: u64,
    /// Subcommands that wrote into this directory, oldest first.
    pub commands: Vec<CommandRecord>,
    pub cells: Vec<CellStatus>,
    pub artifacts: Vec<Artifact>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex(&h.finalize()), total))
}

/// Hash of the fully resolved configuration (defaults and overrides applied).
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("config serializes");
    hex(&Sha256::digest(&json))
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash(cfg),
            master_seed: cfg.master_seed,
            commands: Vec::new(),
            cells: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    /// The directory's existing manifest (retargeted at `cfg`), or a fresh one.
    pub fn open(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Self> {
        match Self::load(out_dir) {
            Ok(mut m) => {
                m.tool_version = env!("CARGO_PKG_VERSION").to_string();
                m.config_hash = config_hash(cfg);
                m.master_seed = cfg.master_seed;
                Ok(m)
            }
            Err(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => Ok(Self::new(cfg)),
            Err(e) => Err(e),
        }
    }

    pub fn load(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    /// Hashes `rel` (relative to `out_dir`) and records or refreshes its entry.
    pub fn record_artifact(&mut self, out_dir: &Path, rel: &str) -> Result<()> {
        let (sha256, bytes) = sha256_file(&out_dir.join(rel))?;
        let entry = Artifact {
            path: rel.to_string(),
            sha256,
            bytes,
        };
        match self.artifacts.iter_mut().find(|a| a.path == rel) {
            Some(a) => *a = entry,
            None => self.artifacts.push(entry),
        }
        Ok(())
    }

    pub fn record_cell(&mut self, status: CellStatus) {
        match self.cells.iter_mut().find(|c| c.id == status.id) {
            Some(c) => *c = status,
            None => self.cells.push(status),
        }
    }

    pub fn record_command(&mut self, command: &str, status: Status, seconds: f64) {
        self.commands.push(CommandRecord {
            command: command.to_string(),
            config_hash: self.config_hash.clone(),
            master_seed: self.master_seed,
            status,
            seconds,
        });
    }

    /// Every listed artifact must exist with its recorded checksum.
    pub fn verify(&self, out_dir: &Path) -> Result<()> {
        for a in &self.artifacts {
            let path = out_dir.join(&a.path);
            let (sha, _) = sha256_file(&path)?;
            if sha != a.sha256 {
                return Err(Error::input(format!("checksum mismatch for {}", a.path)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("abc"), b"abc").unwrap();
        let (h, n) = sha256_file(&dir.path().join("abc")).unwrap();
        assert_eq!(h, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(n, 3);
    }

    #[test]
    fn verify_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), b"one").unwrap();
        let cfg = ExperimentConfig::from_toml_str(
            "master_seed = 1\n[attack]\nk_grid=[0.0]\nstart_times=[\"02:00\"]\ndurations_hours=[4]\nparticipation_ratios=[1.0]\n[topology]\nkinds=[\"network\"]\nloss=[0.0]\n",
        )
        .unwrap();
        let mut m = RunManifest::new(&cfg);
        m.record_artifact(dir.path(), "a.txt").unwrap();
        m.record_command("generate", Status::Ok, 0.5);
        m.save(dir.path()).unwrap();
        let loaded = RunManifest::open(&cfg, dir.path()).unwrap();
        assert_eq!(loaded, m);
        loaded.verify(dir.path()).unwrap();
        fs::write(dir.path().join("a.txt"), b"two").unwrap();
        assert!(loaded.verify(dir.path()).is_err());
    }
}
