//! Run directory: outputs tagged with the manifest and seed, then the manifest
//! itself with a SHA-256 per output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use phi4::Field;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub path: String,
    pub entries: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    /// Every option after merging the config file and the flags.
    pub resolved: serde_json::Value,
    pub config: Option<ConfigRecord>,
    /// Flags exactly as given on the command line.
    pub flags: Vec<String>,
    pub outputs: Vec<OutputEntry>,
    /// Set when the run stopped early; outputs hold what was produced.
    pub incomplete: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Output {
    dir: PathBuf,
    header: String,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path, command: &str, seed: Option<u64>, stream: Option<u64>) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        let mut header = format!("# manifest={MANIFEST} command={command}");
        if let Some(s) = seed {
            header.push_str(&format!(" seed={s}"));
        }
        if let Some(s) = stream {
            header.push_str(&format!(" stream={s}"));
        }
        Ok(Self { dir: dir.to_path_buf(), header, files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    /// CSV with a leading `# manifest=...` comment line.
    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<PathBuf> {
        let mut w = self.open(name)?;
        writeln!(w, "{}", self.header)?;
        let mut csv = csv::Writer::from_writer(w);
        for row in rows {
            csv.serialize(row)?;
        }
        csv.flush()?;
        Ok(self.dir.join(name))
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let mut w = self.open(name)?;
        writeln!(w, "{}", self.header)?;
        w.write_all(body.as_bytes())?;
        if !body.ends_with('\n') {
            writeln!(w)?;
        }
        w.flush()?;
        Ok(self.dir.join(name))
    }

    pub fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<PathBuf> {
        let mut value = value.clone();
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("manifest".into(), MANIFEST.into());
        }
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, &value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(self.dir.join(name))
    }

    /// Field files keep the binary format; the manifest lists their checksums.
    pub fn field(&mut self, name: &str, f: &Field) -> Result<PathBuf> {
        let mut w = self.open(name)?;
        f.write_to(&mut w)?;
        w.flush()?;
        Ok(self.dir.join(name))
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest> {
        manifest.outputs = self
            .files
            .iter()
            .map(|name| {
                let bytes = fs::read(self.dir.join(name))?;
                Ok(OutputEntry { path: name.clone(), sha256: sha256_hex(&bytes) })
            })
            .collect::<Result<_>>()?;
        let path = self.dir.join(MANIFEST);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}
