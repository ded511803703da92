//! Content-hash stage cache: a stage is skipped when the hash of its
//! parameters and input files matches the one recorded at its last run and
//! all of its outputs still exist.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::PipelineError;

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String, PipelineError> {
    let mut f = fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| PipelineError::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

/// Derives an independent seed for a named stage from the master seed.
pub fn stage_seed(master: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stage.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

pub struct StageCache {
    dir: PathBuf,
}

impl StageCache {
    pub fn new(workdir: &Path) -> Result<Self, PipelineError> {
        let dir = workdir.join(".cache");
        fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
        Ok(StageCache { dir })
    }

    fn key_path(&self, stage: &str) -> PathBuf {
        self.dir.join(format!("{}.key", stage.replace(':', "-")))
    }

    pub fn key<P: Serialize>(&self, stage: &str, params: &P, inputs: &[&Path]) -> Result<String, PipelineError> {
        let mut h = Sha256::new();
        h.update(env!("CARGO_PKG_VERSION").as_bytes());
        h.update(stage.as_bytes());
        let p = serde_json::to_vec(params).map_err(|e| PipelineError::Config(e.to_string()))?;
        h.update((p.len() as u64).to_le_bytes());
        h.update(&p);
        for i in inputs {
            h.update(file_digest(i)?.as_bytes());
        }
        Ok(hex(&h.finalize()))
    }

    pub fn is_fresh(&self, stage: &str, key: &str, outputs: &[&Path]) -> bool {
        outputs.iter().all(|p| p.exists())
            && fs::read_to_string(self.key_path(stage)).is_ok_and(|k| k == key)
    }

    pub fn record(&self, stage: &str, key: &str) -> Result<(), PipelineError> {
        let p = self.key_path(stage);
        fs::write(&p, key).map_err(|e| PipelineError::io(&p, e))
    }

    /// Drops the record before a stage reruns, so an interrupted run is never
    /// mistaken for a finished one.
    pub fn invalidate(&self, stage: &str) {
        let _ = fs::remove_file(self.key_path(stage));
    }
}
