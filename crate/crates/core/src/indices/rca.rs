use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Grouping, LinkedCorpus};
use crate::error::{Error, Result};
use crate::registry::{self, EU};

pub const REST_OF_WORLD: &str = "ROW";

/// AI and total patent counts of one holder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryPatentCounts {
    pub holder: String,
    pub ai_count: f64,
    pub total_count: f64,
}

/// Name of the optional world row in a totals file.
pub const WORLD: &str = "WORLD";

/// Read `country,total_count` rows (all patents, AI or not, per country).
/// A `WORLD` row, when present, is returned separately as the world total.
pub fn read_totals(path: &Path) -> Result<(BTreeMap<String, f64>, Option<f64>)> {
    #[derive(Deserialize)]
    struct Row {
        country: String,
        total_count: f64,
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut totals = BTreeMap::new();
    let mut world = None;
    let mut unknown = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|source| Error::Csv {
            file: label.clone(),
            source,
        })?;
        if !(row.total_count >= 0.0) {
            return Err(Error::InvalidCovariate {
                row: i + 1,
                column: "total_count".into(),
                value: row.total_count,
                reason: "patent totals must be non-negative",
            });
        }
        if row.country == WORLD {
            world = Some(row.total_count);
        } else if registry::is_country(&row.country) {
            totals.insert(row.country, row.total_count);
        } else {
            unknown.push(row.country);
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownCountries(unknown));
    }
    Ok((totals, world))
}

/// (AI share of own patents) / (AI share of world patents).
pub fn rca(counts: &CountryPatentCounts, world: &CountryPatentCounts) -> Result<f64> {
    if counts.total_count == 0.0 {
        return Err(Error::ZeroDenominator("country total_count"));
    }
    if world.total_count == 0.0 {
        return Err(Error::ZeroDenominator("world total_count"));
    }
    if world.ai_count == 0.0 {
        return Err(Error::ZeroDenominator("world ai_count"));
    }
    Ok((counts.ai_count / counts.total_count) / (world.ai_count / world.total_count))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RcaRow {
    pub country: String,
    pub ai_count: f64,
    pub total_count: f64,
    /// Unrounded AI share of the country's own patents.
    pub share: f64,
    pub rca: f64,
}

/// RCA table over every country in `totals`, plus `EU` when the corpus has
/// members. World AI count includes unlinked patents; the world total is
/// `world_total` when given, else the sum of country totals.
pub fn rca_table(
    corpus: &LinkedCorpus,
    totals: &BTreeMap<String, f64>,
    world_total: Option<f64>,
) -> Result<(Vec<RcaRow>, CountryPatentCounts)> {
    let counts = corpus.country_counts(Grouping::Applicant)?;
    let world = CountryPatentCounts {
        holder: WORLD.into(),
        ai_count: counts.total as f64,
        total_count: world_total.unwrap_or_else(|| totals.values().sum()),
    };
    let mut rows = Vec::with_capacity(totals.len() + 1);
    let mut push = |country: &str, total: f64| -> Result<()> {
        let c = CountryPatentCounts {
            holder: country.to_string(),
            ai_count: counts.per_country.get(country).copied().unwrap_or(0.0),
            total_count: total,
        };
        rows.push(RcaRow {
            country: country.to_string(),
            ai_count: c.ai_count,
            total_count: c.total_count,
            share: c.ai_count / c.total_count,
            rca: rca(&c, &world)?,
        });
        Ok(())
    };
    for (country, &total) in totals {
        if country != EU {
            push(country, total)?;
        }
    }
    if !corpus.eu_members.is_empty() {
        let eu_total: f64 = corpus
            .eu_members
            .iter()
            .filter_map(|m| totals.get(m))
            .sum();
        if eu_total > 0.0 {
            push(EU, eu_total)?;
        }
    }
    Ok((rows, world))
}

/// Merge countries holding less than `threshold` of world AI patents into a
/// single `ROW` row. The `EU` row is never merged.
pub fn collapse_rest_of_world(
    rows: Vec<RcaRow>,
    world: &CountryPatentCounts,
    threshold: f64,
) -> Result<Vec<RcaRow>> {
    let (mut keep, small): (Vec<RcaRow>, Vec<RcaRow>) = rows
        .into_iter()
        .partition(|r| r.country == EU || r.ai_count / world.ai_count >= threshold);
    if !small.is_empty() {
        let c = CountryPatentCounts {
            holder: REST_OF_WORLD.into(),
            ai_count: small.iter().map(|r| r.ai_count).sum(),
            total_count: small.iter().map(|r| r.total_count).sum(),
        };
        keep.push(RcaRow {
            country: REST_OF_WORLD.into(),
            ai_count: c.ai_count,
            total_count: c.total_count,
            share: c.ai_count / c.total_count,
            rca: rca(&c, world)?,
        });
    }
    Ok(keep)
}
