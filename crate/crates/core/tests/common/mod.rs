#![allow(dead_code)]

use chrono::NaiveDate;
use nalgebra::DMatrix;
use patflow::corpus::{
    aggregate_eu, link_records, load_corpus_with, ApplicantRecord, Attribution, CitationEdge, LinkedCorpus,
    PatentRecord,
};
use patflow::gravity::{DesignMatrix, DyadKey, DyadObservation, DEFAULT_OFFSET};
use patflow::registry;

pub fn date(s: &str) -> NaiveDate {
    s.parse().expect("ISO date")
}

pub fn patent(id: &str, family: &str, pub_date: &str, classes: &[&str], applicants: &[&str]) -> PatentRecord {
    PatentRecord {
        patent_id: id.into(),
        family_id: family.into(),
        authority: "EP".into(),
        grant_date: date(pub_date),
        earliest_pub_date: date(pub_date),
        cpc_classes: classes.iter().map(|c| c.to_string()).collect(),
        applicant_ids: applicants.iter().map(|a| a.to_string()).collect(),
    }
}

pub fn applicant(id: &str, country: &str, nace: Option<&str>) -> ApplicantRecord {
    ApplicantRecord {
        applicant_id: id.into(),
        name: id.into(),
        country: Some(country.into()),
        nace: nace.map(str::to_string),
        incorporation_year: Some(2000),
        parent_id: None,
        parent_country: None,
    }
}

pub fn cite(citing: &str, cited: &str, applicant: &str, on: Option<&str>) -> CitationEdge {
    CitationEdge {
        citing_family: citing.into(),
        cited_family: cited.into(),
        citing_applicant_ids: vec![applicant.into()],
        citation_date: on.map(date),
        citing: Attribution::default(),
        cited: Attribution::default(),
    }
}

/// Load, link and register the EU27.
pub fn linked(patents: Vec<PatentRecord>, applicants: Vec<ApplicantRecord>, citations: Vec<CitationEdge>) -> LinkedCorpus {
    let c = load_corpus_with(patents, applicants, citations, vec![]).expect("corpus");
    aggregate_eu(link_records(c).expect("link"), &registry::eu27()).expect("eu")
}

/// Design with a leading intercept; `clusters[r]` indexes `g` labels.
pub fn design(y: Vec<f64>, columns: &[(&str, Vec<f64>)], clusters: Vec<usize>) -> DesignMatrix {
    let n = y.len();
    let g = clusters.iter().max().map_or(0, |m| m + 1);
    let mut names = vec!["const".to_string()];
    names.extend(columns.iter().map(|(name, _)| name.to_string()));
    let x = DMatrix::from_fn(n, names.len(), |r, c| if c == 0 { 1.0 } else { columns[c - 1].1[r] });
    DesignMatrix {
        y,
        x,
        names,
        keys: (0..n)
            .map(|r| DyadKey {
                origin: format!("O{}", clusters[r]),
                dest: format!("D{r}"),
                year: 2020,
            })
            .collect(),
        clusters,
        cluster_labels: (0..g).map(|c| format!("C{c:05}")).collect(),
        offset: DEFAULT_OFFSET,
    }
}

pub fn obs(origin: &str, dest: &str, year: i32, citations: f64) -> DyadObservation {
    DyadObservation {
        origin: origin.into(),
        dest: dest.into(),
        year,
        citations,
        distance_km: 1000.0,
        common_language: 0.0,
        common_legal: 0.0,
        colonial: 0.0,
        contiguous: 0.0,
        rta: 0.0,
        eu_i: 0.0,
        eu_j: 0.0,
        eu_ij: 0.0,
        common_religion: 0.5,
        gdp_i: 1e12,
        gdp_j: 2e12,
        gdp_pc_i: 40_000.0,
        gdp_pc_j: 30_000.0,
        rd_share_i: 2.0,
        rd_share_j: 1.5,
        ai_patents_i: 10.0,
        ai_patents_j: 0.0,
        proximity: 0.4,
    }
}
