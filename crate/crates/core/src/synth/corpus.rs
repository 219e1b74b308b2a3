use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::{Datelike, Months, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{csv_err, csv_writer, stream, CorpusDims, PlantedFacts, TruthRecord};
use crate::corpus::{
    aggregate_eu, link_records, load_corpus_with, ApplicantRecord, Attribution, CitationEdge, LinkedCorpus, PatentRecord,
};
use crate::error::{Error, Result};
use crate::registry;

/// Share of families planted as never cited.
pub const PLANTED_UNCITED_RATE: f64 = 0.30;
/// Proximity of the two planted portfolios (0.5, 0.3, 0.2) and (0.2, 0.3, 0.5).
pub const PLANTED_OVERLAP: f64 = 0.7;

const COUNTRIES: &[&str] = &["US", "CN", "JP", "KR", "DE", "FR", "GB", "NL", "SE", "IE", "IT", "ES"];
const SECTORS: &[&str] = &["26", "28", "58", "62", "63", "72"];
const MONOPOLY_SECTOR: &str = "99";
const PAIR: (&str, &str) = ("IS", "NO");
/// Publication months run 2012-01..=2016-12 and first-citation lags are
/// capped at the shortest follow-up, so censoring never precedes an event.
const MAX_LAG: u32 = 84;
const WINDOW_END: &str = "2023-12";

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub patents: Vec<PatentRecord>,
    pub applicants: Vec<ApplicantRecord>,
    pub citations: Vec<CitationEdge>,
    pub totals: BTreeMap<String, u64>,
    pub world_total: u64,
    pub truth: TruthRecord,
}

impl SyntheticCorpus {
    /// Linked corpus with the EU27 registered as an aggregate holder.
    pub fn corpus(&self) -> Result<LinkedCorpus> {
        linked(&self.patents, &self.applicants, &self.citations)
    }

    /// Write `patents.csv`, `applicants.csv`, `citations.csv`, `totals.csv`
    /// and `truth.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_corpus_tables(dir, &self.patents, &self.applicants, &self.citations)?;
        write_totals(&dir.join("totals.csv"), &self.totals, self.world_total)?;
        self.truth.write(&dir.join("truth.json"))
    }
}

pub(crate) fn linked(
    patents: &[PatentRecord],
    applicants: &[ApplicantRecord],
    citations: &[CitationEdge],
) -> Result<LinkedCorpus> {
    let corpus = load_corpus_with(patents.to_vec(), applicants.to_vec(), citations.to_vec(), vec![])?;
    aggregate_eu(link_records(corpus)?, &registry::eu27())
}

pub(crate) fn class_code(k: usize) -> String {
    const SECTIONS: &[u8] = b"ABCDEFGH";
    format!(
        "{}{:02}{}",
        SECTIONS[k % 8] as char,
        1 + (k / 8) % 99,
        (b'A' + ((k / 792) % 26) as u8) as char
    )
}

pub(crate) fn write_corpus_tables(
    dir: &Path,
    patents: &[PatentRecord],
    applicants: &[ApplicantRecord],
    citations: &[CitationEdge],
) -> Result<()> {
    let path = dir.join("patents.csv");
    let mut w = csv_writer(&path)?;
    let e = csv_err(&path);
    w.write_record(["patent_id", "family_id", "authority", "grant_date", "earliest_pub_date", "cpc_classes", "applicant_id"])
        .map_err(&e)?;
    for p in patents {
        w.write_record([
            p.patent_id.as_str(),
            &p.family_id,
            &p.authority,
            &p.grant_date.to_string(),
            &p.earliest_pub_date.to_string(),
            &p.cpc_classes.join("|"),
            &p.applicant_ids.join("|"),
        ])
        .map_err(&e)?;
    }
    w.flush().map_err(|err| Error::io(&path, err))?;

    let path = dir.join("applicants.csv");
    let mut w = csv_writer(&path)?;
    let e = csv_err(&path);
    w.write_record(["applicant_id", "name", "country", "nace", "incorporation_year", "parent_id", "parent_country"])
        .map_err(&e)?;
    let s = |o: &Option<String>| o.clone().unwrap_or_default();
    for a in applicants {
        w.write_record([
            a.applicant_id.clone(),
            a.name.clone(),
            s(&a.country),
            s(&a.nace),
            a.incorporation_year.map(|y| y.to_string()).unwrap_or_default(),
            s(&a.parent_id),
            s(&a.parent_country),
        ])
        .map_err(&e)?;
    }
    w.flush().map_err(|err| Error::io(&path, err))?;

    let path = dir.join("citations.csv");
    let mut w = csv_writer(&path)?;
    let e = csv_err(&path);
    w.write_record(["citing_family", "cited_family", "citing_applicant_id", "citation_date"])
        .map_err(&e)?;
    for c in citations {
        w.write_record([
            c.citing_family.clone(),
            c.cited_family.clone(),
            c.citing_applicant_ids.join("|"),
            c.citation_date.map(|d| d.to_string()).unwrap_or_default(),
        ])
        .map_err(&e)?;
    }
    w.flush().map_err(|err| Error::io(&path, err))
}

fn write_totals(path: &Path, totals: &BTreeMap<String, u64>, world: u64) -> Result<()> {
    let mut w = csv_writer(path)?;
    let e = csv_err(path);
    w.write_record(["country", "total_count"]).map_err(&e)?;
    for (c, t) in totals {
        w.write_record([c.clone(), t.to_string()]).map_err(&e)?;
    }
    w.write_record(["WORLD".to_string(), world.to_string()]).map_err(&e)?;
    w.flush().map_err(|err| Error::io(path, err))
}

fn month_start(year: i32, month: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, month, 1).expect("valid month")
}

fn with_day(d: NaiveDate, day: u32) -> NaiveDate {
    d.with_day(day).expect("day 1..=28 is valid")
}

fn edge(citing: String, cited: &str, applicant: &str, date: NaiveDate) -> CitationEdge {
    CitationEdge {
        citing_family: citing,
        cited_family: cited.to_string(),
        citing_applicant_ids: vec![applicant.to_string()],
        citation_date: Some(date),
        citing: Attribution::default(),
        cited: Attribution::default(),
    }
}

/// Generate a corpus of `n_patents` random patents over `n_firms` firms and
/// `n_classes` classes, plus three planted blocks: a monopoly sector, a
/// country pair with known portfolio overlap, and a fixed never-cited rate.
pub fn gen_corpus(seed: u64, n_firms: usize, n_patents: usize, n_classes: usize) -> Result<SyntheticCorpus> {
    if n_firms == 0 || n_patents == 0 || n_classes == 0 {
        return Err(Error::InvalidArgument("corpus dimensions must be at least 1".into()));
    }
    let mut firms_rng = stream(seed, 1);
    let mut pat_rng = stream(seed, 2);
    let mut cite_rng = stream(seed, 3);
    let mut total_rng = stream(seed, 4);

    let mut applicants = Vec::with_capacity(n_firms + 3);
    for f in 0..n_firms {
        let country = COUNTRIES[firms_rng.random_range(0..COUNTRIES.len())];
        let has_parent = firms_rng.random_bool(0.2);
        applicants.push(ApplicantRecord {
            applicant_id: format!("F{f:05}"),
            name: format!("Firm {f}"),
            country: Some(country.to_string()),
            nace: firms_rng
                .random_bool(0.9)
                .then(|| SECTORS[firms_rng.random_range(0..SECTORS.len())].to_string()),
            incorporation_year: firms_rng.random_bool(0.89).then(|| firms_rng.random_range(1950..=2015)),
            parent_id: has_parent.then(|| format!("G{:04}", firms_rng.random_range(0..50))),
            parent_country: has_parent.then(|| COUNTRIES[firms_rng.random_range(0..COUNTRIES.len())].to_string()),
        });
    }
    let planted_firm = |id: &str, country: &str, nace: &str| ApplicantRecord {
        applicant_id: id.into(),
        name: id.into(),
        country: Some(country.into()),
        nace: Some(nace.into()),
        incorporation_year: Some(2000),
        parent_id: None,
        parent_country: None,
    };
    applicants.push(planted_firm("M-MONO", "US", MONOPOLY_SECTOR));
    applicants.push(planted_firm("P-IS", PAIR.0, "62"));
    applicants.push(planted_firm("P-NO", PAIR.1, "62"));

    let classes: Vec<String> = (0..n_classes).map(class_code).collect();
    let mut patents: Vec<PatentRecord> = Vec::new();
    let mut unlinked = 0u64;
    let random_date = |rng: &mut rand_chacha::ChaCha8Rng| {
        let m = month_start(2012, 1) + Months::new(rng.random_range(0..60));
        with_day(m, rng.random_range(1..=28))
    };
    for p in 0..n_patents {
        // squared uniform skews patents towards low-index firms
        let u: f64 = pat_rng.random();
        let firm = ((u * u) * n_firms as f64) as usize;
        let applicant = if pat_rng.random_bool(0.05) {
            unlinked += 1;
            format!("UNKNOWN{p:05}")
        } else {
            applicants[firm.min(n_firms - 1)].applicant_id.clone()
        };
        let n_cls = pat_rng.random_range(1..=3usize);
        let mut cls: BTreeSet<String> = BTreeSet::new();
        for _ in 0..n_cls {
            let c = &classes[pat_rng.random_range(0..classes.len())];
            cls.insert(format!("{c}{}/{:02}", pat_rng.random_range(1..10), pat_rng.random_range(0..100)));
        }
        // one patent in ten joins the previous family
        let family_id = if p > 0 && pat_rng.random_bool(0.1) {
            patents.last().map(|q: &PatentRecord| q.family_id.clone()).expect("p > 0")
        } else {
            format!("FAM{p:06}")
        };
        let pub_date = random_date(&mut pat_rng);
        patents.push(PatentRecord {
            patent_id: format!("P{p:06}"),
            family_id,
            authority: ["US", "CN", "EP", "JP", "KR"][pat_rng.random_range(0..5)].into(),
            grant_date: pub_date + Months::new(pat_rng.random_range(6..=30)),
            earliest_pub_date: pub_date,
            cpc_classes: cls.into_iter().collect(),
            applicant_ids: vec![applicant],
        });
    }
    let mut plant = |id: String, applicant: &str, class: &str, rng: &mut rand_chacha::ChaCha8Rng| {
        let d = random_date(rng);
        patents.push(PatentRecord {
            family_id: format!("FAM-{id}"),
            patent_id: id,
            authority: "EP".into(),
            grant_date: d + Months::new(12),
            earliest_pub_date: d,
            cpc_classes: vec![class.to_string()],
            applicant_ids: vec![applicant.to_string()],
        });
    };
    for i in 0..3 {
        plant(format!("MONO{i}"), "M-MONO", "G06N3/08", &mut pat_rng);
    }
    for (share, class) in [(5, "G06N3/04"), (3, "G06F17/16"), (2, "H04L9/40")] {
        for i in 0..share {
            plant(format!("IS-{class}-{i}"), "P-IS", class, &mut pat_rng);
        }
    }
    for (share, class) in [(2, "G06N5/02"), (3, "G06F18/24"), (5, "H04L67/10")] {
        for i in 0..share {
            plant(format!("NO-{class}-{i}"), "P-NO", class, &mut pat_rng);
        }
    }

    // citations at the family level
    let mut fam_pub: BTreeMap<&str, NaiveDate> = BTreeMap::new();
    let mut fam_order: Vec<&str> = Vec::new();
    for p in &patents {
        fam_pub
            .entry(p.family_id.as_str())
            .and_modify(|d| *d = (*d).min(p.earliest_pub_date))
            .or_insert_with(|| {
                fam_order.push(p.family_id.as_str());
                p.earliest_pub_date
            });
    }
    let lag = Exp::new(1.0 / 18.0).expect("positive rate");
    let mut citations = Vec::new();
    let mut uncited = 0;
    let mut citing_counter = 0usize;
    for fam in &fam_order {
        if cite_rng.random_bool(PLANTED_UNCITED_RATE) {
            uncited += 1;
            continue;
        }
        let start = month_start(fam_pub[fam].year(), fam_pub[fam].month());
        let n_cites = cite_rng.random_range(1..=4);
        let mut lags: Vec<u32> = (0..n_cites)
            .map(|_| (lag.sample(&mut cite_rng) as u32).min(MAX_LAG))
            .collect();
        lags.sort_unstable();
        for l in lags {
            let date = with_day(start + Months::new(l), cite_rng.random_range(1..=28));
            let citer = &applicants[cite_rng.random_range(0..n_firms)].applicant_id;
            citations.push(edge(format!("CIT{citing_counter:07}"), fam, citer, date));
            citing_counter += 1;
        }
    }

    let mut country_counts: BTreeMap<String, u64> = BTreeMap::new();
    let country_of: BTreeMap<&str, &str> = applicants
        .iter()
        .map(|a| (a.applicant_id.as_str(), a.country.as_deref().expect("planted countries")))
        .collect();
    for p in &patents {
        if let Some(c) = country_of.get(p.applicant_ids[0].as_str()) {
            *country_counts.entry(c.to_string()).or_default() += 1;
        }
    }
    let totals: BTreeMap<String, u64> = country_counts
        .iter()
        .map(|(c, &n)| (c.clone(), n * total_rng.random_range(10..=200u64)))
        .collect();
    let world_total = totals.values().sum::<u64>() + unlinked * 50;

    let mut truth = TruthRecord::new(seed);
    truth.corpus = Some(CorpusDims {
        firms: n_firms,
        patents: n_patents,
        classes: n_classes,
    });
    truth.planted = Some(PlantedFacts {
        country_counts,
        unlinked_patents: unlinked,
        total_counts: totals.clone(),
        world_total,
        monopoly_sector: MONOPOLY_SECTOR.into(),
        monopoly_cr5: 1.0,
        overlap_pair: (PAIR.0.into(), PAIR.1.into()),
        overlap_proximity: PLANTED_OVERLAP,
        uncited_rate: PLANTED_UNCITED_RATE,
        families: fam_order.len(),
        uncited_families: uncited,
        window_end: WINDOW_END.into(),
    });
    Ok(SyntheticCorpus {
        patents,
        applicants,
        citations,
        totals,
        world_total,
        truth,
    })
}
