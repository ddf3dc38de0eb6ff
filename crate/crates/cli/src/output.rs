//! Output directory, atomic writes and provenance records.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use hbcsense_core::ingest::write_atomic;
use hbcsense_core::Result;

pub const OUT_DIR_ENV: &str = "HBCSENSE_OUT_DIR";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Output {
    pub dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    /// `HBCSENSE_OUT_DIR` wins over the config's `output_dir`, which is
    /// resolved against the config file's directory.
    pub fn resolve(configured: Option<&Path>, config_dir: &Path) -> Output {
        let dir = match std::env::var_os(OUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => match configured {
                Some(p) if p.is_absolute() => p.to_path_buf(),
                Some(p) => config_dir.join(p),
                None => config_dir.join("hbcsense-out"),
            },
        };
        Output { dir, written: Vec::new() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.path(rel);
        write_atomic(&p, bytes)?;
        self.written.push(rel.to_string());
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<PathBuf> {
        let mut v = serde_json::to_vec_pretty(value)?;
        v.push(b'\n');
        self.write(rel, &v)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

#[derive(Debug, Serialize)]
pub struct Provenance<'a> {
    pub command: &'a str,
    pub config_path: String,
    pub config_hash: &'a str,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub versions: Versions,
    pub outputs: &'a [String],
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub hbcsense: &'static str,
    pub model_format: u32,
}

impl Versions {
    pub fn current() -> Versions {
        Versions {
            hbcsense: env!("CARGO_PKG_VERSION"),
            model_format: hbcsense_core::models::MODEL_FORMAT_VERSION,
        }
    }
}

pub fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}
