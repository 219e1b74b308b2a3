use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::corpus::LinkedCorpus;
use crate::error::{Error, Result};
use crate::indices::{min_complement_proximity, portfolio_vector_through, Holder, PortfolioVector};
use crate::{par, registry};

/// One row of `bilateral.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilateralRow {
    pub origin: String,
    pub dest: String,
    pub year: i32,
    pub distance_km: f64,
    pub common_language: f64,
    pub common_legal: f64,
    pub common_religion: f64,
    pub colonial: f64,
    pub contiguous: f64,
    pub rta: f64,
    pub eu_pair: f64,
}

/// One row of `macro.csv`. Blank fields deserialize to `None` and cause
/// listwise deletion of the dyads that need them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroRow {
    pub country: String,
    pub year: i32,
    pub gdp: Option<f64>,
    pub gdp_pc: Option<f64>,
    pub rd_share: Option<f64>,
    pub ai_patent_stock: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadObservation {
    pub origin: String,
    pub dest: String,
    pub year: i32,
    pub citations: f64,
    pub distance_km: f64,
    pub common_language: f64,
    pub common_legal: f64,
    pub colonial: f64,
    pub contiguous: f64,
    pub rta: f64,
    pub eu_i: f64,
    pub eu_j: f64,
    pub eu_ij: f64,
    pub common_religion: f64,
    pub gdp_i: f64,
    pub gdp_j: f64,
    pub gdp_pc_i: f64,
    pub gdp_pc_j: f64,
    pub rd_share_i: f64,
    pub rd_share_j: f64,
    pub ai_patents_i: f64,
    pub ai_patents_j: f64,
    pub proximity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Panel {
    pub rows: Vec<DyadObservation>,
    /// Bilateral rows dropped for missing macro covariates.
    pub dropped_missing_macro: usize,
    /// Dyad-years with citations but no covariate row.
    pub dropped_citation_dyads: usize,
    /// Dated, deduplicated citations that fell in dropped dyad-years.
    pub dropped_citations: f64,
    /// Deduplicated citation pairs without a date (no year to assign).
    pub undated_citations: usize,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    rdr.deserialize()
        .map(|r| r.map_err(|source| Error::Csv { file: label.clone(), source }))
        .collect()
}

pub fn read_bilateral(path: &Path) -> Result<Vec<BilateralRow>> {
    read_csv(path)
}

pub fn read_macro(path: &Path) -> Result<Vec<MacroRow>> {
    read_csv(path)
}

/// Where the `ai_patents` covariates come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AiStock {
    /// Corpus patents first published up to and including year t.
    #[default]
    Cumulative,
    /// Corpus patents first published in year t.
    Annual,
    /// The `ai_patent_stock` column of `macro.csv`, taken as given.
    Macro,
}

/// Whether proximity is one value per dyad or recomputed each year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ProximityMode {
    /// Portfolios over the whole corpus.
    #[default]
    Static,
    /// Portfolios over patents first published up to and including year t.
    Yearly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PanelOptions {
    pub class_level: usize,
    pub ai_stock: AiStock,
    pub proximity: ProximityMode,
}

impl Default for PanelOptions {
    fn default() -> Self {
        Self {
            class_level: crate::indices::DEFAULT_CLASS_LEVEL,
            ai_stock: AiStock::default(),
            proximity: ProximityMode::default(),
        }
    }
}

/// Read the covariate files and build the dyad-year panel.
pub fn build_panel(
    corpus: &LinkedCorpus,
    bilateral_path: &Path,
    macro_path: &Path,
    opts: &PanelOptions,
) -> Result<Panel> {
    let bilateral = read_bilateral(bilateral_path)?;
    let macros = read_macro(macro_path)?;
    build_panel_from(corpus, &bilateral, &macros, opts)
}

fn check_flag(row: usize, column: &str, v: f64) -> Result<()> {
    if v == 0.0 || v == 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidCovariate {
            row,
            column: column.into(),
            value: v,
            reason: "binary flag must be 0 or 1",
        })
    }
}

/// Family-level citation counts per (citing country, cited country, year),
/// split by attribution weights; same-country pairs are skipped.
pub fn dyad_year_flows(corpus: &LinkedCorpus) -> Result<(BTreeMap<(String, String, i32), f64>, usize)> {
    corpus.links()?;
    let mut flows: BTreeMap<(String, String, i32), f64> = BTreeMap::new();
    let mut undated = 0;
    for e in corpus.dedup_citations() {
        let Some(date) = e.citation_date else {
            undated += 1;
            continue;
        };
        for (i, wi) in &e.citing.countries {
            for (j, wj) in &e.cited.countries {
                if i != j {
                    *flows.entry((i.clone(), j.clone(), date.year())).or_default() += wi * wj;
                }
            }
        }
    }
    Ok((flows, undated))
}

/// Portfolio per (country, year); `None` when the country holds no patents.
/// Static portfolios are stored under every year.
fn country_portfolios(
    corpus: &LinkedCorpus,
    countries: &[String],
    years: &[i32],
    opts: &PanelOptions,
) -> Result<BTreeMap<(String, i32), Option<PortfolioVector>>> {
    let cells: Vec<(String, Option<i32>)> = match opts.proximity {
        ProximityMode::Static => countries.iter().map(|c| (c.clone(), None)).collect(),
        ProximityMode::Yearly => countries
            .iter()
            .flat_map(|c| years.iter().map(move |&y| (c.clone(), Some(y))))
            .collect(),
    };
    let vecs = par::map(&cells, |(c, y)| {
        match portfolio_vector_through(corpus, &Holder::Country(c.clone()), opts.class_level, *y) {
            Ok(v) => Ok(Some(v)),
            Err(Error::EmptyPortfolio(_)) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut out = BTreeMap::new();
    for ((c, y), v) in cells.into_iter().zip(vecs) {
        let v = v?;
        match y {
            Some(y) => {
                out.insert((c, y), v);
            }
            None => {
                for &y in years {
                    out.insert((c.clone(), y), v.clone());
                }
            }
        }
    }
    Ok(out)
}

/// Corpus AI patent counts per (country, year) under `mode`; fractional
/// attribution, unlinked patents skipped.
fn ai_counts(corpus: &LinkedCorpus, years: &[i32], mode: AiStock) -> Result<BTreeMap<(String, i32), f64>> {
    let links = corpus.links()?;
    let mut annual: BTreeMap<(String, i32), f64> = BTreeMap::new();
    for (p, link) in corpus.patents.iter().zip(links) {
        for (c, w) in &link.attribution.countries {
            *annual.entry((c.clone(), p.earliest_pub_date.year())).or_default() += w;
        }
    }
    if mode == AiStock::Annual {
        return Ok(annual);
    }
    let countries: BTreeSet<&String> = annual.keys().map(|(c, _)| c).collect();
    let mut out = BTreeMap::new();
    for c in countries {
        for &y in years {
            let total: f64 = annual
                .range((c.clone(), i32::MIN)..=(c.clone(), y))
                .map(|(_, v)| v)
                .sum();
            out.insert((c.clone(), y), total);
        }
    }
    Ok(out)
}

/// Join bilateral and macro covariates with corpus citation flows. One row
/// per bilateral (origin, dest, year) with origin != dest; rows are sorted
/// by (origin, dest, year).
pub fn build_panel_from(
    corpus: &LinkedCorpus,
    bilateral: &[BilateralRow],
    macros: &[MacroRow],
    opts: &PanelOptions,
) -> Result<Panel> {
    let mut unknown: BTreeSet<String> = BTreeSet::new();
    for b in bilateral {
        for c in [&b.origin, &b.dest] {
            if !registry::is_country(c) {
                unknown.insert(c.clone());
            }
        }
    }
    for m in macros {
        if !registry::is_country(&m.country) {
            unknown.insert(m.country.clone());
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownCountries(unknown.into_iter().collect()));
    }
    corpus.links()?;

    let macro_by: BTreeMap<(&str, i32), &MacroRow> =
        macros.iter().map(|m| ((m.country.as_str(), m.year), m)).collect();
    let (flows, undated) = dyad_year_flows(corpus)?;

    let countries: Vec<String> = bilateral
        .iter()
        .flat_map(|b| [b.origin.clone(), b.dest.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let years: Vec<i32> = bilateral.iter().map(|b| b.year).collect::<BTreeSet<_>>().into_iter().collect();
    let portfolios = country_portfolios(corpus, &countries, &years, opts)?;
    let proximity = |i: &str, j: &str, y: i32| {
        match (&portfolios[&(i.to_string(), y)], &portfolios[&(j.to_string(), y)]) {
            (Some(a), Some(b)) => min_complement_proximity(a, b),
            _ => 0.0,
        }
    };
    let corpus_ai = match opts.ai_stock {
        AiStock::Macro => None,
        mode => Some(ai_counts(corpus, &years, mode)?),
    };
    let ai_of = |c: &str, y: i32, m: &MacroRow| match &corpus_ai {
        None => m.ai_patent_stock,
        Some(counts) => Some(counts.get(&(c.to_string(), y)).copied().unwrap_or(0.0)),
    };

    let mut sorted: Vec<(usize, &BilateralRow)> = bilateral.iter().enumerate().collect();
    sorted.sort_by(|a, b| {
        (&a.1.origin, &a.1.dest, a.1.year).cmp(&(&b.1.origin, &b.1.dest, b.1.year))
    });

    let mut rows = Vec::with_capacity(bilateral.len());
    let mut covered: BTreeSet<(String, String, i32)> = BTreeSet::new();
    let mut dropped_missing_macro = 0;
    for (idx, b) in sorted {
        let row = idx + 1;
        if b.origin == b.dest {
            continue;
        }
        for (col, v) in [
            ("common_language", b.common_language),
            ("common_legal", b.common_legal),
            ("colonial", b.colonial),
            ("contiguous", b.contiguous),
            ("rta", b.rta),
            ("eu_pair", b.eu_pair),
        ] {
            check_flag(row, col, v)?;
        }
        if !(0.0..=1.0).contains(&b.common_religion) {
            return Err(Error::InvalidCovariate {
                row,
                column: "common_religion".into(),
                value: b.common_religion,
                reason: "religion index must lie in [0, 1]",
            });
        }
        let mi = macro_by.get(&(b.origin.as_str(), b.year));
        let mj = macro_by.get(&(b.dest.as_str(), b.year));
        let full = |m: Option<&&MacroRow>| {
            m.and_then(|m| Some((m.gdp?, m.gdp_pc?, m.rd_share?, ai_of(&m.country, m.year, m)?)))
        };
        let (Some(ci), Some(cj)) = (full(mi), full(mj)) else {
            dropped_missing_macro += 1;
            continue;
        };
        let key = (b.origin.clone(), b.dest.clone(), b.year);
        let citations = flows.get(&key).copied().unwrap_or(0.0);
        covered.insert(key);
        let eu = |c: &str| corpus.eu_members.contains(c) as u8 as f64;
        rows.push(DyadObservation {
            origin: b.origin.clone(),
            dest: b.dest.clone(),
            year: b.year,
            citations,
            distance_km: b.distance_km,
            common_language: b.common_language,
            common_legal: b.common_legal,
            colonial: b.colonial,
            contiguous: b.contiguous,
            rta: b.rta,
            eu_i: eu(&b.origin),
            eu_j: eu(&b.dest),
            eu_ij: b.eu_pair,
            common_religion: b.common_religion,
            gdp_i: ci.0,
            gdp_j: cj.0,
            gdp_pc_i: ci.1,
            gdp_pc_j: cj.1,
            rd_share_i: ci.2,
            rd_share_j: cj.2,
            ai_patents_i: ci.3,
            ai_patents_j: cj.3,
            proximity: proximity(&b.origin, &b.dest, b.year),
        });
    }
    let mut dropped_citation_dyads = 0;
    let mut dropped_citations = 0.0;
    for (key, v) in &flows {
        if !covered.contains(key) {
            dropped_citation_dyads += 1;
            dropped_citations += v;
        }
    }
    Ok(Panel {
        rows,
        dropped_missing_macro,
        dropped_citation_dyads,
        dropped_citations,
        undated_citations: undated,
    })
}
