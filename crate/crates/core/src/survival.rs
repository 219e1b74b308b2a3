//! First-citation lags with right-censoring and Kaplan-Meier curves.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::corpus::{LinkedCorpus, YearMonth};
use crate::error::{Error, Result};
use crate::par;
use crate::registry::EU;

/// Default end of the observation window.
pub const DEFAULT_WINDOW_END: YearMonth = YearMonth { year: 2023, month: 12 };

/// Which family date starts the clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum LagOrigin {
    #[default]
    EarliestPublication,
    Grant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LagRecord {
    pub family_id: String,
    /// Dominant applicant country of the family; `None` when unlinked.
    pub group: Option<String>,
    pub duration: u32,
    /// `true` when the first citation was observed inside the window.
    pub event: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagOutcome {
    pub records: Vec<LagRecord>,
    /// Families excluded because their first citation predates the origin.
    pub invalid: Vec<String>,
}

/// One lag record per AI family. Families never cited inside the window are
/// censored at `window_end`.
pub fn first_citation_lags(
    corpus: &LinkedCorpus,
    window_end: YearMonth,
    origin: LagOrigin,
) -> Result<LagOutcome> {
    if let Some(latest) = corpus.latest_publication().map(YearMonth::of) {
        if window_end < latest {
            return Err(Error::WindowEnd {
                window_end: window_end.to_string(),
                latest: latest.to_string(),
            });
        }
    }
    let families = corpus.families()?;
    let mut first_cite: HashMap<&str, YearMonth> = HashMap::new();
    let edges = corpus.dedup_citations();
    for e in &edges {
        if let Some(d) = e.citation_date {
            let m = YearMonth::of(d);
            first_cite
                .entry(e.cited_family)
                .and_modify(|x| *x = (*x).min(m))
                .or_insert(m);
        }
    }

    enum Lag {
        Ok(LagRecord),
        Invalid(String),
    }
    let lags = par::map(&families, |f| {
        let start = YearMonth::of(match origin {
            LagOrigin::EarliestPublication => f.earliest_pub_date,
            LagOrigin::Grant => f.grant_date,
        });
        let group = dominant(&f.attribution.countries);
        let cited = first_cite.get(f.family_id.as_str()).copied();
        match cited {
            Some(c) if c < start => Lag::Invalid(f.family_id.clone()),
            Some(c) if c <= window_end => Lag::Ok(LagRecord {
                family_id: f.family_id.clone(),
                group,
                duration: start.months_until(c) as u32,
                event: true,
            }),
            _ => {
                let span = start.months_until(window_end);
                if span < 0 {
                    Lag::Invalid(f.family_id.clone())
                } else {
                    Lag::Ok(LagRecord {
                        family_id: f.family_id.clone(),
                        group,
                        duration: span as u32,
                        event: false,
                    })
                }
            }
        }
    });
    let mut out = LagOutcome {
        records: Vec::with_capacity(lags.len()),
        invalid: Vec::new(),
    };
    for lag in lags {
        match lag {
            Lag::Ok(r) => out.records.push(r),
            Lag::Invalid(id) => out.invalid.push(id),
        }
    }
    Ok(out)
}

/// Highest-weight country; ties go to the alphabetically first code.
fn dominant(weights: &[(String, f64)]) -> Option<String> {
    let mut best: Option<&(String, f64)> = None;
    for w in weights {
        if best.is_none_or(|b| w.1 > b.1) {
            best = Some(w);
        }
    }
    best.map(|(c, _)| c.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalStep {
    pub t: u32,
    pub d: usize,
    pub n: usize,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub group: String,
    pub steps: Vec<SurvivalStep>,
    pub plateau: f64,
    pub subjects: usize,
    pub events: usize,
}

impl SurvivalCurve {
    /// Survival at month `t` (right-continuous step function).
    pub fn at(&self, t: u32) -> f64 {
        self.steps
            .iter()
            .take_while(|s| s.t <= t)
            .last()
            .map_or(1.0, |s| s.s)
    }
}

/// Product-limit estimate. Subjects censored at `t` remain at risk for
/// events at `t`.
pub fn km_estimate(lags: &[LagRecord]) -> Result<SurvivalCurve> {
    if lags.is_empty() {
        return Err(Error::EmptyInput("no lag records"));
    }
    let groups: BTreeSet<Option<&str>> = lags.iter().map(|l| l.group.as_deref()).collect();
    let group = match groups.into_iter().collect::<Vec<_>>().as_slice() {
        [Some(g)] => g.to_string(),
        _ => "ALL".to_string(),
    };
    let mut sorted: Vec<(u32, bool)> = lags.iter().map(|l| (l.duration, l.event)).collect();
    sorted.sort_unstable();

    let mut steps = Vec::new();
    let mut s = 1.0;
    let mut at_risk = sorted.len();
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        let mut j = i;
        let mut d = 0;
        while j < sorted.len() && sorted[j].0 == t {
            d += sorted[j].1 as usize;
            j += 1;
        }
        if d > 0 {
            s *= (at_risk - d) as f64 / at_risk as f64;
            steps.push(SurvivalStep { t, d, n: at_risk, s });
        }
        at_risk -= j - i;
        i = j;
    }
    Ok(SurvivalCurve {
        group,
        plateau: s,
        subjects: lags.len(),
        events: lags.iter().filter(|l| l.event).count(),
        steps,
    })
}

/// Share never cited within the window: the final survival value.
pub fn uncited_share(curve: &SurvivalCurve) -> f64 {
    curve.plateau
}

/// One curve per country group (unlinked families skipped), plus `EU` when
/// members are given. Sorted by group code with `EU` last.
pub fn group_curves(lags: &[LagRecord], eu_members: &BTreeSet<String>) -> Result<Vec<SurvivalCurve>> {
    let mut by_group: BTreeMap<String, Vec<LagRecord>> = BTreeMap::new();
    for l in lags {
        if let Some(g) = &l.group {
            by_group.entry(g.clone()).or_default().push(l.clone());
        }
    }
    let mut groups: Vec<(String, Vec<LagRecord>)> = by_group.into_iter().collect();
    if !eu_members.is_empty() {
        let eu: Vec<LagRecord> = lags
            .iter()
            .filter(|l| l.group.as_ref().is_some_and(|g| eu_members.contains(g)))
            .map(|l| LagRecord {
                group: Some(EU.to_string()),
                ..l.clone()
            })
            .collect();
        if !eu.is_empty() {
            groups.push((EU.to_string(), eu));
        }
    }
    par::map(&groups, |(_, recs)| km_estimate(recs))
        .into_iter()
        .collect()
}
