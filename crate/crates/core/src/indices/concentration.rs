use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::LinkedCorpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorConcentration {
    pub sector: String,
    pub total: f64,
    pub per_firm: BTreeMap<String, f64>,
    pub q: usize,
    pub cr: f64,
}

impl SectorConcentration {
    pub fn n_firms(&self) -> usize {
        self.per_firm.len()
    }
}

/// Share of the sector's patents held by its `q` largest firms. Firms are
/// ranked by (count desc, id asc), so ties at rank `q` are cut
/// deterministically.
pub fn concentration_ratio(per_firm: &BTreeMap<String, f64>, q: usize) -> Result<SectorConcentration> {
    if per_firm.is_empty() {
        return Err(Error::EmptySector);
    }
    if q == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    let mut ranked: Vec<(&String, f64)> = per_firm.iter().map(|(k, v)| (k, *v)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let total: f64 = ranked.iter().map(|(_, v)| v).sum();
    let cr = if q >= ranked.len() {
        1.0
    } else {
        let top: f64 = ranked[..q].iter().map(|(_, v)| v).sum();
        (top / total).clamp(0.0, 1.0)
    };
    Ok(SectorConcentration {
        sector: String::new(),
        total,
        per_firm: per_firm.clone(),
        q,
        cr,
    })
}

/// CR_q for every NACE sector with at least one patenting firm.
pub fn concentration_table(corpus: &LinkedCorpus, q: usize) -> Result<Vec<SectorConcentration>> {
    corpus
        .sector_firm_counts()?
        .into_iter()
        .map(|(sector, firms)| {
            let mut c = concentration_ratio(&firms, q)?;
            c.sector = sector;
            Ok(c)
        })
        .collect()
}
