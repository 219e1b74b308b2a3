//! Patent, applicant and citation tables, their linkage, and the EU
//! aggregate view.

mod link;
mod load;

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use crate::error::{Error, Result, RowIssue};
use crate::registry::{self, EU};

pub use link::{aggregate_eu, link_records};
pub use load::{load_corpus, load_corpus_with, read_applicants, read_citations, read_patents};

/// Country weights attached to a patent, family or citing side. Sorted by
/// code; weights sum to 1 when non-empty.
pub type Weights = Vec<(String, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatentRecord {
    pub patent_id: String,
    pub family_id: String,
    pub authority: String,
    pub grant_date: NaiveDate,
    pub earliest_pub_date: NaiveDate,
    /// Normalized, sorted, deduplicated class codes.
    pub cpc_classes: Vec<String>,
    /// One or more applicant ids (pipe-separated in the CSV); order is
    /// significant for first-applicant attribution.
    pub applicant_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApplicantRecord {
    pub applicant_id: String,
    pub name: String,
    pub country: Option<String>,
    pub nace: Option<String>,
    pub incorporation_year: Option<i32>,
    pub parent_id: Option<String>,
    pub parent_country: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CitationEdge {
    pub citing_family: String,
    pub cited_family: String,
    pub citing_applicant_ids: Vec<String>,
    pub citation_date: Option<NaiveDate>,
    /// Filled by [`link_records`].
    pub citing: Attribution,
    pub cited: Attribution,
}

/// One (citing family, cited family) pair after deduplication, dated by the
/// earliest of its edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniqueCitation<'a> {
    pub citing_family: &'a str,
    pub cited_family: &'a str,
    pub citation_date: Option<NaiveDate>,
    pub citing: &'a Attribution,
    pub cited: &'a Attribution,
}

/// How a patent with several applicants is split across countries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum AttributionRule {
    /// Each distinct applicant country receives an equal share.
    #[default]
    Fractional,
    /// The first applicant with a known country receives everything.
    FirstApplicant,
}

/// Applicant-country and parent-country views of one unit.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Attribution {
    pub countries: Weights,
    pub parent_countries: Weights,
}

impl Attribution {
    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    pub fn view(&self, grouping: Grouping) -> &Weights {
        match grouping {
            Grouping::Applicant => &self.countries,
            Grouping::Parent => &self.parent_countries,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Grouping {
    #[default]
    Applicant,
    Parent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LinkStatus {
    Linked,
    /// No applicant of the patent resolves to a known country.
    Unlinked,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatentLink {
    pub status: LinkStatus,
    pub attribution: Attribution,
    /// NACE codes of the resolved applicants.
    pub sectors: Vec<String>,
}

/// Missing count over a denominator, kept as exact integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MissingShare {
    pub missing: usize,
    pub total: usize,
}

impl MissingShare {
    pub fn share(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.missing as f64 / self.total as f64
        }
    }
}

/// One AI patent family: class union and country attribution over all its
/// member patents.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub family_id: String,
    pub patents: Vec<usize>,
    pub classes: BTreeSet<String>,
    pub attribution: Attribution,
    pub earliest_pub_date: NaiveDate,
    pub grant_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkedCorpus {
    pub patents: Vec<PatentRecord>,
    pub applicants: Vec<ApplicantRecord>,
    pub citations: Vec<CitationEdge>,
    pub eu_members: BTreeSet<String>,
    pub missing_report: BTreeMap<String, MissingShare>,
    /// Row diagnostics in file order, then row order.
    pub issues: Vec<RowIssue>,
    pub rule: AttributionRule,
    /// Parallel to `patents`; `None` until [`link_records`] runs.
    pub links: Option<Vec<PatentLink>>,
}

/// Per-holder patent totals with the unlinked remainder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryCounts {
    pub per_country: BTreeMap<String, f64>,
    pub unlinked: f64,
    pub total: usize,
}

impl LinkedCorpus {
    pub fn links(&self) -> Result<&[PatentLink]> {
        self.links
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("corpus has not been linked".into()))
    }

    /// Countries a holder stands for: the member set for `EU`, itself otherwise.
    pub fn holder_countries(&self, holder: &str) -> BTreeSet<String> {
        if holder == EU {
            self.eu_members.clone()
        } else {
            std::iter::once(holder.to_string()).collect()
        }
    }

    /// Weight of a holder within a country attribution.
    pub fn holder_weight(&self, weights: &Weights, holder: &str) -> f64 {
        if holder == EU {
            weights
                .iter()
                .filter(|(c, _)| self.eu_members.contains(c))
                .map(|(_, w)| w)
                .sum()
        } else {
            weights
                .iter()
                .find(|(c, _)| c == holder)
                .map_or(0.0, |(_, w)| *w)
        }
    }

    /// Patent counts per country (applicant view), plus `EU` when members
    /// are configured.
    pub fn country_counts(&self, grouping: Grouping) -> Result<CountryCounts> {
        let links = self.links()?;
        let mut per_country: BTreeMap<String, f64> = BTreeMap::new();
        let mut unlinked = 0.0;
        for link in links {
            match link.status {
                LinkStatus::Unlinked => unlinked += 1.0,
                LinkStatus::Linked => {
                    for (c, w) in link.attribution.view(grouping) {
                        *per_country.entry(c.clone()).or_default() += w;
                    }
                }
            }
        }
        if !self.eu_members.is_empty() {
            let eu: f64 = self
                .eu_members
                .iter()
                .filter_map(|m| per_country.get(m))
                .sum();
            per_country.insert(EU.to_string(), eu);
        }
        Ok(CountryCounts {
            per_country,
            unlinked,
            total: self.patents.len(),
        })
    }

    /// Family view in first-appearance order.
    pub fn families(&self) -> Result<Vec<Family>> {
        let _ = self.links()?;
        let mut order: Vec<String> = Vec::new();
        let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, p) in self.patents.iter().enumerate() {
            let slot = members.entry(p.family_id.as_str()).or_default();
            if slot.is_empty() {
                order.push(p.family_id.clone());
            }
            slot.push(i);
        }
        let index = link::ApplicantIndex::new(&self.applicants);
        Ok(order
            .into_iter()
            .map(|fid| {
                let idx = members[fid.as_str()].clone();
                let mut classes = BTreeSet::new();
                let mut ids: Vec<&str> = Vec::new();
                for &i in &idx {
                    classes.extend(self.patents[i].cpc_classes.iter().cloned());
                    for a in &self.patents[i].applicant_ids {
                        if !ids.contains(&a.as_str()) {
                            ids.push(a);
                        }
                    }
                }
                let attribution = index.attribute(&ids, self.rule);
                let earliest_pub_date = idx
                    .iter()
                    .map(|&i| self.patents[i].earliest_pub_date)
                    .min()
                    .expect("family has a patent");
                let grant_date = idx
                    .iter()
                    .map(|&i| self.patents[i].grant_date)
                    .min()
                    .expect("family has a patent");
                Family {
                    family_id: fid,
                    patents: idx,
                    classes,
                    attribution,
                    earliest_pub_date,
                    grant_date,
                }
            })
            .collect())
    }

    /// Citation edges deduplicated on (citing family, cited family). The
    /// first edge in row order is kept, carrying the earliest known date.
    pub fn dedup_citations(&self) -> Vec<UniqueCitation<'_>> {
        let mut seen: HashMap<(&str, &str), usize> = HashMap::with_capacity(self.citations.len());
        let mut out: Vec<UniqueCitation<'_>> = Vec::with_capacity(self.citations.len());
        for e in &self.citations {
            match seen.entry((e.citing_family.as_str(), e.cited_family.as_str())) {
                Entry::Occupied(k) => {
                    let kept = &mut out[*k.get()];
                    kept.citation_date = match (kept.citation_date, e.citation_date) {
                        (Some(a), Some(b)) => Some(a.min(b)),
                        (a, b) => a.or(b),
                    };
                }
                Entry::Vacant(slot) => {
                    slot.insert(out.len());
                    out.push(UniqueCitation {
                        citing_family: &e.citing_family,
                        cited_family: &e.cited_family,
                        citation_date: e.citation_date,
                        citing: &e.citing,
                        cited: &e.cited,
                    });
                }
            }
        }
        out
    }

    pub fn latest_publication(&self) -> Option<NaiveDate> {
        self.patents.iter().map(|p| p.earliest_pub_date).max()
    }

    /// Applicant ids grouped by NACE sector, with their patent counts
    /// (fractional per patent over its resolved applicants).
    pub fn sector_firm_counts(&self) -> Result<BTreeMap<String, BTreeMap<String, f64>>> {
        let _ = self.links()?;
        let index = link::ApplicantIndex::new(&self.applicants);
        let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for p in &self.patents {
            let resolved: Vec<&ApplicantRecord> = p
                .applicant_ids
                .iter()
                .filter_map(|a| index.get(a))
                .collect();
            if resolved.is_empty() {
                continue;
            }
            let w = 1.0 / resolved.len() as f64;
            for a in resolved {
                if let Some(nace) = &a.nace {
                    *out.entry(nace.clone())
                        .or_default()
                        .entry(a.applicant_id.clone())
                        .or_default() += w;
                }
            }
        }
        Ok(out)
    }
}

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidArgument(format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }

    /// Truncate a date to its month.
    pub fn of(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            month: date.month(),
        }
    }

    pub fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    /// Whole months from `self` to `later` (negative if `later` is earlier).
    pub fn months_until(self, later: YearMonth) -> i64 {
        later.index() - self.index()
    }
}

impl std::fmt::Display for YearMonth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl std::str::FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected YYYY-MM, got `{s}`"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month)
    }
}

pub(crate) fn validate_members(members: &BTreeSet<String>) -> Result<()> {
    if members.is_empty() {
        return Err(Error::InvalidArgument("EU member set is empty".into()));
    }
    let unknown: Vec<String> = members
        .iter()
        .filter(|m| !registry::is_country(m))
        .cloned()
        .collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(Error::UnknownCountries(unknown))
    }
}
