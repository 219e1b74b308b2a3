use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use patflow::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

/// Format with six significant digits in `%g` style: fixed notation for
/// decimal exponents in [-4, 6), scientific otherwise, trailing zeros
/// trimmed. Non-finite values print as `NA`.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return "NA".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn opt6(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), sig6)
}

/// Collects artifacts for one run; files are written in call order.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let err = |source| Error::Csv {
            file: name.to_string(),
            source,
        };
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| io(&self.dir.join(name), e.into_error()))?;
        self.write(name, &bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Record files written by generators that bypass [`Artifacts::write`].
    pub fn adopt(&mut self, name: &str) {
        self.written.push(self.dir.join(name));
    }

    /// Merge this run's files into the directory manifest, rehashing every
    /// listed file that still exists.
    pub fn finish(self) -> Result<()> {
        let path = self.dir.join(MANIFEST);
        let mut names: Vec<String> = match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str::<Manifest>(&text)
                .map(|m| m.artifacts.into_iter().map(|a| a.path).collect())
                .unwrap_or_default(),
            Err(_) => Vec::new(),
        };
        for p in &self.written {
            names.push(p.file_name().expect("artifact file name").to_string_lossy().into_owned());
        }
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for name in names {
            let file = self.dir.join(&name);
            let Ok(bytes) = fs::read(&file) else { continue };
            entries.insert(
                name.clone(),
                Entry {
                    path: name,
                    sha256: sha256_hex(&bytes),
                    bytes: bytes.len() as u64,
                },
            );
        }
        let manifest = Manifest {
            artifacts: entries.into_values().collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io(&path, e))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Entry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn io(path: &Path, source: std::io::Error) -> Error {
    Error::io(path, source)
}
