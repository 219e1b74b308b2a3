use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{
    validate_members, ApplicantRecord, Attribution, AttributionRule, LinkStatus, LinkedCorpus,
    MissingShare, PatentLink, Weights,
};
use crate::error::{Error, Result};

pub(crate) struct ApplicantIndex<'a> {
    by_id: HashMap<&'a str, &'a ApplicantRecord>,
}

impl<'a> ApplicantIndex<'a> {
    /// First occurrence wins for duplicate ids.
    pub(crate) fn new(applicants: &'a [ApplicantRecord]) -> Self {
        let mut by_id = HashMap::with_capacity(applicants.len());
        for a in applicants {
            by_id.entry(a.applicant_id.as_str()).or_insert(a);
        }
        Self { by_id }
    }

    pub(crate) fn get(&self, id: &str) -> Option<&'a ApplicantRecord> {
        self.by_id.get(id).copied()
    }

    pub(crate) fn attribute<S: AsRef<str>>(&self, ids: &[S], rule: AttributionRule) -> Attribution {
        let mut own: Vec<&str> = Vec::new();
        let mut parent: Vec<&str> = Vec::new();
        for id in ids {
            let Some(a) = self.get(id.as_ref()) else { continue };
            let Some(c) = a.country.as_deref() else { continue };
            own.push(c);
            parent.push(a.parent_country.as_deref().unwrap_or(c));
        }
        Attribution {
            countries: split(&own, rule),
            parent_countries: split(&parent, rule),
        }
    }
}

fn split(countries: &[&str], rule: AttributionRule) -> Weights {
    match rule {
        AttributionRule::FirstApplicant => countries
            .first()
            .map(|c| vec![(c.to_string(), 1.0)])
            .unwrap_or_default(),
        AttributionRule::Fractional => {
            let distinct: BTreeSet<&str> = countries.iter().copied().collect();
            let w = 1.0 / distinct.len() as f64;
            distinct.into_iter().map(|c| (c.to_string(), w)).collect()
        }
    }
}

fn conflicting_ids(applicants: &[ApplicantRecord]) -> Vec<String> {
    let mut seen: BTreeMap<&str, &Option<String>> = BTreeMap::new();
    let mut bad = BTreeSet::new();
    for a in applicants {
        match seen.get(a.applicant_id.as_str()) {
            Some(c) if *c != &a.country => {
                bad.insert(a.applicant_id.clone());
            }
            Some(_) => {}
            None => {
                seen.insert(&a.applicant_id, &a.country);
            }
        }
    }
    bad.into_iter().collect()
}

/// Annotate patents and citation edges with applicant-country, parent-country
/// and sector information. Patents with no resolvable applicant country stay
/// in the corpus tagged [`LinkStatus::Unlinked`]. Idempotent.
pub fn link_records(mut corpus: LinkedCorpus) -> Result<LinkedCorpus> {
    let conflicts = conflicting_ids(&corpus.applicants);
    if !conflicts.is_empty() {
        return Err(Error::ConflictingApplicants(conflicts));
    }
    let index = ApplicantIndex::new(&corpus.applicants);
    let rule = corpus.rule;

    let links: Vec<PatentLink> = corpus
        .patents
        .iter()
        .map(|p| {
            let attribution = index.attribute(&p.applicant_ids, rule);
            let sectors: BTreeSet<String> = p
                .applicant_ids
                .iter()
                .filter_map(|id| index.get(id))
                .filter_map(|a| a.nace.clone())
                .collect();
            PatentLink {
                status: if attribution.is_empty() {
                    LinkStatus::Unlinked
                } else {
                    LinkStatus::Linked
                },
                attribution,
                sectors: sectors.into_iter().collect(),
            }
        })
        .collect();
    let unlinked = links.iter().filter(|l| l.status == LinkStatus::Unlinked).count();
    drop(index);

    corpus.links = Some(links);
    corpus.missing_report.insert(
        "applicant".into(),
        MissingShare {
            missing: unlinked,
            total: corpus.patents.len(),
        },
    );

    let family_attr: HashMap<String, Attribution> = corpus
        .families()?
        .into_iter()
        .map(|f| (f.family_id, f.attribution))
        .collect();
    let index = ApplicantIndex::new(&corpus.applicants);
    let mut citing_attr: HashMap<&[String], Attribution> = HashMap::new();
    let mut annotated: Vec<(Attribution, Attribution)> = Vec::with_capacity(corpus.citations.len());
    for e in &corpus.citations {
        let citing = citing_attr
            .entry(e.citing_applicant_ids.as_slice())
            .or_insert_with(|| index.attribute(&e.citing_applicant_ids, rule))
            .clone();
        let cited = family_attr.get(&e.cited_family).cloned().unwrap_or_default();
        annotated.push((citing, cited));
    }
    drop(citing_attr);
    drop(index);
    for (e, (citing, cited)) in corpus.citations.iter_mut().zip(annotated) {
        e.citing = citing;
        e.cited = cited;
    }
    Ok(corpus)
}

/// Register the EU pseudo-country. Member-level records stay untouched; the
/// `EU` holder resolves to the union of member portfolios.
pub fn aggregate_eu(mut corpus: LinkedCorpus, members: &BTreeSet<String>) -> Result<LinkedCorpus> {
    validate_members(members)?;
    corpus.eu_members = members.clone();
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_corpus_with, CitationEdge, Grouping, PatentRecord};
    use chrono::NaiveDate;

    fn patent(id: &str, fam: &str, apps: &[&str]) -> PatentRecord {
        let d = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        PatentRecord {
            patent_id: id.into(),
            family_id: fam.into(),
            authority: "US".into(),
            grant_date: d,
            earliest_pub_date: d,
            cpc_classes: vec!["G06N".into()],
            applicant_ids: apps.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn applicant(id: &str, country: &str, parent: Option<&str>) -> ApplicantRecord {
        ApplicantRecord {
            applicant_id: id.into(),
            name: id.into(),
            country: (!country.is_empty()).then(|| country.to_string()),
            nace: Some("62".into()),
            incorporation_year: None,
            parent_id: parent.map(|_| "PARENT".into()),
            parent_country: parent.map(str::to_string),
        }
    }

    fn corpus(patents: Vec<PatentRecord>, apps: Vec<ApplicantRecord>) -> LinkedCorpus {
        load_corpus_with(patents, apps, vec![], vec![]).unwrap()
    }

    #[test]
    fn direct_join_gives_applicant_country() {
        let c = link_records(corpus(
            vec![patent("P1", "F1", &["A1"])],
            vec![applicant("A1", "US", None)],
        ))
        .unwrap();
        let l = &c.links().unwrap()[0];
        assert_eq!(l.status, LinkStatus::Linked);
        assert_eq!(l.attribution.countries, vec![("US".to_string(), 1.0)]);
    }

    #[test]
    fn missing_applicant_is_unlinked_and_reported() {
        let c = link_records(corpus(
            vec![patent("P1", "F1", &["A1"]), patent("P2", "F2", &["NOPE"])],
            vec![applicant("A1", "US", None)],
        ))
        .unwrap();
        assert_eq!(c.links().unwrap()[1].status, LinkStatus::Unlinked);
        assert_eq!(c.missing_report["applicant"], MissingShare { missing: 1, total: 2 });
        let counts = c.country_counts(Grouping::Applicant).unwrap();
        assert_eq!(counts.unlinked, 1.0);
        assert_eq!(counts.per_country["US"], 1.0);
    }

    #[test]
    fn conflicting_duplicate_applicants_error() {
        let err = link_records(corpus(
            vec![patent("P1", "F1", &["A1"])],
            vec![applicant("A1", "DE", None), applicant("A1", "FR", None)],
        ))
        .unwrap_err();
        assert!(matches!(err, Error::ConflictingApplicants(ref ids) if ids == &["A1"]));
    }

    #[test]
    fn fractional_and_first_applicant_rules() {
        let mut c = corpus(
            vec![patent("P1", "F1", &["A1", "A2", "A3"])],
            vec![
                applicant("A1", "DE", Some("US")),
                applicant("A2", "FR", None),
                applicant("A3", "DE", None),
            ],
        );
        let frac = link_records(c.clone()).unwrap();
        let a = &frac.links().unwrap()[0].attribution;
        assert_eq!(a.countries, vec![("DE".into(), 0.5), ("FR".into(), 0.5)]);
        assert_eq!(
            a.parent_countries,
            vec![("DE".into(), 1.0 / 3.0), ("FR".into(), 1.0 / 3.0), ("US".into(), 1.0 / 3.0)]
        );
        c.rule = AttributionRule::FirstApplicant;
        let first = link_records(c).unwrap();
        let a = &first.links().unwrap()[0].attribution;
        assert_eq!(a.countries, vec![("DE".into(), 1.0)]);
        assert_eq!(a.parent_countries, vec![("US".into(), 1.0)]);
    }

    #[test]
    fn linking_is_idempotent() {
        let mut c = corpus(
            vec![patent("P1", "F1", &["A1"]), patent("P2", "F1", &["A2"])],
            vec![applicant("A1", "US", None), applicant("A2", "CN", None)],
        );
        c.citations.push(CitationEdge {
            citing_family: "X".into(),
            cited_family: "F1".into(),
            citing_applicant_ids: vec!["A2".into()],
            citation_date: None,
            citing: Attribution::default(),
            cited: Attribution::default(),
        });
        let once = link_records(c).unwrap();
        let twice = link_records(once.clone()).unwrap();
        assert_eq!(once, twice);
        let e = &once.citations[0];
        assert_eq!(e.citing.countries, vec![("CN".into(), 1.0)]);
        assert_eq!(e.cited.countries, vec![("CN".into(), 0.5), ("US".into(), 0.5)]);
    }

    #[test]
    fn eu_aggregation() {
        let pats = vec![
            patent("P1", "F1", &["D"]),
            patent("P2", "F2", &["D"]),
            patent("P3", "F3", &["F"]),
            patent("P4", "F4", &["F"]),
            patent("P5", "F5", &["F"]),
            patent("P6", "F6", &["U"]),
        ];
        let apps = vec![applicant("D", "DE", None), applicant("F", "FR", None), applicant("U", "US", None)];
        let c = link_records(corpus(pats, apps)).unwrap();
        let members: BTreeSet<String> = ["DE", "FR"].iter().map(|s| s.to_string()).collect();
        let eu = aggregate_eu(c.clone(), &members).unwrap();
        let counts = eu.country_counts(Grouping::Applicant).unwrap();
        assert_eq!(counts.per_country["EU"], 5.0);
        assert_eq!(counts.per_country["DE"], 2.0);

        let de: BTreeSet<String> = ["DE".to_string()].into();
        let single = aggregate_eu(c.clone(), &de).unwrap().country_counts(Grouping::Applicant).unwrap();
        assert_eq!(single.per_country["EU"], single.per_country["DE"]);

        assert!(aggregate_eu(c.clone(), &BTreeSet::new()).is_err());
        let bogus: BTreeSet<String> = ["XX".to_string()].into();
        assert!(matches!(aggregate_eu(c, &bogus), Err(Error::UnknownCountries(_))));
    }
}
