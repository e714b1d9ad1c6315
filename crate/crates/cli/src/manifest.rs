//! Run manifests: config echo, input fingerprints, output hashes, timing.
//! Every output directory gets exactly one `manifest.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub schema_version: String,
    pub seed: u64,
    /// Config echo in the key=value syntax.
    pub config: String,
    /// Input path -> sha256 of the file bytes.
    pub inputs: BTreeMap<String, String>,
    /// Compact description of the loaded dataset, when one was loaded.
    pub dataset: Option<String>,
    /// Output file name -> sha256 of the written bytes.
    pub outputs: BTreeMap<String, String>,
    pub wall_time_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn hash_file(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Collects output files for a run directory, hashing as it writes.
pub struct OutputDir {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> std::io::Result<OutputDir> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            hashes: BTreeMap::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.hashes.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn finish(
        self,
        command: &str,
        seed: u64,
        config_echo: String,
        inputs: BTreeMap<String, String>,
        dataset: Option<String>,
        started: std::time::Instant,
    ) -> std::io::Result<()> {
        let manifest = RunManifest {
            command: command.to_string(),
            schema_version: SCHEMA_VERSION.to_string(),
            seed,
            config: config_echo,
            inputs,
            dataset,
            outputs: self.hashes,
            wall_time_seconds: started.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(self.dir.join("manifest.json"), json)
    }
}
