use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::io::{write_field, write_mask};
use crate::grid::{GridMask, Window};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Wall-clock data; the only part of a run that may differ between identical configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_secs: u64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub outputs: Vec<OutputFile>,
    pub summary: Map<String, Value>,
    pub timing: Timing,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Manifest> {
        let path = dir.join("manifest.json");
        let bytes = fs::read(&path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    /// Recomputes every checksum under `dir`; returns the paths that differ.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.outputs {
            let bytes = fs::read(dir.join(&f.path))?;
            if sha256_hex(&bytes) != f.sha256 {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory under construction: files go to a hidden sibling that is renamed onto
/// the target once the manifest has been written.
pub struct Staging {
    dir: PathBuf,
    target: PathBuf,
    files: Vec<PathBuf>,
}

impl Staging {
    pub fn new(target: &Path) -> Result<Self> {
        if target.exists() {
            let previous_run = target.join("manifest.json").exists();
            let empty = target.is_dir() && fs::read_dir(target)?.next().is_none();
            if !previous_run && !empty {
                return Err(Error::Config(format!(
                    "{} exists and is not an experiment directory",
                    target.display()
                )));
            }
        }
        let name = target
            .file_name()
            .ok_or_else(|| Error::Config(format!("bad output path {}", target.display())))?;
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)?;
        let mut tmp_name = std::ffi::OsString::from(".");
        tmp_name.push(name);
        tmp_name.push(format!(".tmp-{}", std::process::id()));
        let dir = parent.join(tmp_name);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        Ok(Staging {
            dir,
            target: target.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn track(&mut self, paths: Vec<PathBuf>) {
        self.files.extend(paths);
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, bytes)?;
        self.track(vec![p]);
        Ok(())
    }

    pub fn write_json(&mut self, rel: &str, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    pub fn mask(&mut self, stem: &str, mask: &GridMask) -> Result<()> {
        let p = self.dir.join(stem);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        let paths = write_mask(mask, &p)?;
        self.track(paths);
        Ok(())
    }

    pub fn field(&mut self, stem: &str, window: &Window, values: &[f64]) -> Result<()> {
        let paths = write_field(window, values, &self.dir.join(stem))?;
        self.track(paths);
        Ok(())
    }

    /// Checksums the outputs, writes the manifest last, and moves the directory into place.
    pub fn finish(
        self,
        kind: &str,
        config_sha256: String,
        seed: u64,
        summary: Map<String, Value>,
        timing: Timing,
    ) -> Result<Manifest> {
        let mut outputs = Vec::with_capacity(self.files.len());
        for p in &self.files {
            let bytes = fs::read(p)?;
            let rel = p
                .strip_prefix(&self.dir)
                .expect("tracked files live in the staging dir")
                .to_string_lossy()
                .replace('\\', "/");
            outputs.push(OutputFile {
                path: rel,
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            });
        }
        outputs.sort_by(|a, b| a.path.cmp(&b.path));
        outputs.dedup_by(|a, b| a.path == b.path);
        let manifest = Manifest {
            kind: kind.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256,
            seed,
            outputs,
            summary,
            timing,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(self.dir.join("manifest.json"), bytes)?;
        if self.target.exists() {
            fs::remove_dir_all(&self.target)?;
        }
        fs::rename(&self.dir, &self.target)?;
        Ok(manifest)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if self.dir.exists() {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}
