//! Seeded synthetic corpora and dyad panels with recorded ground truth.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), a
//! counter-based generator whose output is identical on every platform.
//! Independent streams are split off one seed with `set_stream`, so adding
//! draws to one stream never shifts another.

mod corpus;
mod panel;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use corpus::{gen_corpus, SyntheticCorpus, PLANTED_OVERLAP, PLANTED_UNCITED_RATE};
pub use panel::{default_beta, default_selection, gen_panel, SelectionTruth, SyntheticPanel};

pub const GENERATOR: &str = "ChaCha8";

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelDims {
    pub countries: Vec<String>,
    pub years: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusDims {
    pub firms: usize,
    pub patents: usize,
    pub classes: usize,
}

/// Facts planted in a synthetic corpus, with the exact values the index and
/// survival operations must reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedFacts {
    pub country_counts: BTreeMap<String, u64>,
    pub unlinked_patents: u64,
    pub total_counts: BTreeMap<String, u64>,
    pub world_total: u64,
    pub monopoly_sector: String,
    pub monopoly_cr5: f64,
    pub overlap_pair: (String, String),
    pub overlap_proximity: f64,
    pub uncited_rate: f64,
    pub families: usize,
    pub uncited_families: usize,
    pub window_end: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub seed: u64,
    pub generator: String,
    pub beta_true: Option<BTreeMap<String, f64>>,
    pub gamma_true: Option<BTreeMap<String, f64>>,
    pub delta_true: Option<f64>,
    pub panel: Option<PanelDims>,
    pub corpus: Option<CorpusDims>,
    pub planted: Option<PlantedFacts>,
}

impl TruthRecord {
    pub(crate) fn new(seed: u64) -> Self {
        Self {
            seed,
            generator: GENERATOR.into(),
            beta_true: None,
            gamma_true: None,
            delta_true: None,
            panel: None,
            corpus: None,
            planted: None,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

pub(crate) fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        file: path.display().to_string(),
        source,
    }
}
