use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Values written into the `#` header of every CSV.
#[derive(Debug, Clone)]
pub struct Meta {
    pub command: &'static str,
    pub config_sha256: String,
    pub horizon: Option<u64>,
    pub seed: Option<u64>,
    pub tolerances: Vec<(&'static str, String)>,
}

impl Meta {
    pub fn new<T: Serialize>(command: &'static str, effective: &T) -> Result<Self> {
        let bytes = serde_json::to_vec(effective)?;
        Ok(Self {
            command,
            config_sha256: hex::encode(Sha256::digest(&bytes)),
            horizon: None,
            seed: None,
            tolerances: Vec::new(),
        })
    }

    fn header(&self) -> String {
        let mut s = format!("# hypershift {}\n", env!("CARGO_PKG_VERSION"));
        s.push_str(&format!("# command: {}\n", self.command));
        s.push_str(&format!("# config_sha256: {}\n", self.config_sha256));
        if let Some(h) = self.horizon {
            s.push_str(&format!("# horizon: {h}\n"));
        }
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed: {seed}\n"));
        }
        if !self.tolerances.is_empty() {
            let t: Vec<String> = self.tolerances.iter().map(|(k, v)| format!("{k}={v}")).collect();
            s.push_str(&format!("# tolerances: {}\n", t.join(", ")));
        }
        s
    }
}

pub struct Outputs {
    dir: PathBuf,
    meta: Meta,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path, meta: Meta) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            meta,
            written: Vec::new(),
        })
    }

    /// Temp file in the target directory, then rename.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn csv<I>(&mut self, name: &str, columns: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut out = self.meta.header().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(columns)?;
            for row in rows {
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        self.write(name, &out)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}
