//! Atomic artifact writing and the per-run manifest.
//!
//! Files land via temp-file-plus-rename; `manifest.json` records the
//! command, its configuration, the seed, and the SHA-256 of every artifact
//! the run produced. Nothing timestamped goes into hashed content, so
//! reruns with identical inputs are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use strengthlab::error::Error;

pub struct RunWriter {
    out_dir: PathBuf,
    artifacts: Vec<(String, String)>,
}

impl RunWriter {
    pub fn new(out_dir: &Path) -> Result<Self, Error> {
        fs::create_dir_all(out_dir)?;
        Ok(RunWriter {
            out_dir: out_dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn write_atomic(&self, name: &str, bytes: &[u8]) -> Result<(), Error> {
        let target = self.out_dir.join(name);
        let tmp = self.out_dir.join(format!("{name}.tmp"));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &target)?;
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Error> {
        self.write_atomic(name, bytes)?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = hasher.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.artifacts.push((name.to_string(), hex));
        Ok(())
    }

    pub fn finish(
        self,
        command: &str,
        config: serde_json::Value,
        seed: Option<u64>,
    ) -> Result<(), Error> {
        let manifest = json!({
            "command": command,
            "config": config,
            "seed": seed,
            "artifacts": self
                .artifacts
                .iter()
                .map(|(path, sha256)| json!({"path": path, "sha256": sha256}))
                .collect::<Vec<_>>(),
        });
        let body = serde_json::to_string_pretty(&manifest)?;
        self.write_atomic("manifest.json", body.as_bytes())?;
        Ok(())
    }
}
