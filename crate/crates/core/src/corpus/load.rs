use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Utc};

use super::{ApplicantRecord, Attribution, AttributionRule, CitationEdge, LinkedCorpus, MissingShare, PatentRecord};
use crate::error::{Error, Result, RowIssue};
use crate::registry;

const PATENT_HEADER: &[&str] = &[
    "patent_id",
    "family_id",
    "authority",
    "grant_date",
    "earliest_pub_date",
    "cpc_classes",
    "applicant_id",
];
const APPLICANT_HEADER: &[&str] = &[
    "applicant_id",
    "name",
    "country",
    "nace",
    "incorporation_year",
    "parent_id",
    "parent_country",
];
const CITATION_HEADER: &[&str] = &[
    "citing_family",
    "cited_family",
    "citing_applicant_id",
    "citation_date",
];

/// Load and validate the three corpus tables. Files are parsed concurrently;
/// diagnostics are reported in (file, row) order.
pub fn load_corpus(
    patents_path: &Path,
    applicants_path: &Path,
    citations_path: &Path,
) -> Result<LinkedCorpus> {
    let open = |p: &Path| File::open(p).map_err(|e| Error::io(p, e));
    let (pf, af, cf) = (open(patents_path)?, open(applicants_path)?, open(citations_path)?);
    let label = |p: &Path| {
        p.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| p.display().to_string())
    };
    let (pl, al, cl) = (label(patents_path), label(applicants_path), label(citations_path));
    let (patents, applicants, citations) = std::thread::scope(|s| {
        let p = s.spawn(|| read_patents(&pl, pf));
        let a = s.spawn(|| read_applicants(&al, af));
        let c = s.spawn(|| read_citations(&cl, cf));
        (
            p.join().expect("patent reader panicked"),
            a.join().expect("applicant reader panicked"),
            c.join().expect("citation reader panicked"),
        )
    });
    let (patents, mut issues) = patents?;
    let (applicants, a_issues) = applicants?;
    let (citations, c_issues) = citations?;
    issues.extend(a_issues);
    issues.extend(c_issues);
    load_corpus_with(patents, applicants, citations, issues)
}

/// Assemble a corpus from already-parsed tables. Citation edges whose cited
/// family is not in the patent table are dropped with a diagnostic.
pub fn load_corpus_with(
    patents: Vec<PatentRecord>,
    applicants: Vec<ApplicantRecord>,
    citations: Vec<CitationEdge>,
    mut issues: Vec<RowIssue>,
) -> Result<LinkedCorpus> {
    if patents.is_empty() {
        return Err(Error::NoPatents);
    }
    let families: BTreeSet<&str> = patents.iter().map(|p| p.family_id.as_str()).collect();
    let mut kept = Vec::with_capacity(citations.len());
    for (row, c) in citations.into_iter().enumerate() {
        if families.contains(c.cited_family.as_str()) {
            kept.push(c);
        } else {
            issues.push(RowIssue {
                file: "citations".into(),
                row: row + 1,
                message: format!("cited family `{}` is not in the AI corpus", c.cited_family),
            });
        }
    }
    let missing_report = missing_report(&applicants);
    Ok(LinkedCorpus {
        patents,
        applicants,
        citations: kept,
        eu_members: BTreeSet::new(),
        missing_report,
        issues,
        rule: AttributionRule::default(),
        links: None,
    })
}

fn missing_report(applicants: &[ApplicantRecord]) -> BTreeMap<String, MissingShare> {
    let total = applicants.len();
    let count = |f: &dyn Fn(&ApplicantRecord) -> bool| MissingShare {
        missing: applicants.iter().filter(|a| f(a)).count(),
        total,
    };
    let mut m = BTreeMap::new();
    m.insert("name".into(), count(&|a| a.name.is_empty()));
    m.insert("country".into(), count(&|a| a.country.is_none()));
    m.insert("nace".into(), count(&|a| a.nace.is_none()));
    m.insert("incorporation_year".into(), count(&|a| a.incorporation_year.is_none()));
    m.insert("parent_id".into(), count(&|a| a.parent_id.is_none()));
    m.insert("parent_country".into(), count(&|a| a.parent_country.is_none()));
    m
}

fn check_header(file: &str, rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|source| Error::Csv {
        file: file.into(),
        source,
    })?;
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != expected {
        return Err(Error::Header {
            file: file.into(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

/// Parse every record, collecting row issues; abort when more than half fail.
fn read_rows<R: Read, T>(
    file: &str,
    reader: R,
    expected: &[&str],
    parse: impl Fn(&csv::StringRecord) -> std::result::Result<T, String>,
) -> Result<(Vec<T>, Vec<RowIssue>)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    check_header(file, &mut rdr, expected)?;
    let mut rows = Vec::new();
    let mut issues = Vec::new();
    let mut total = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        total += 1;
        let row = i + 1;
        let outcome = match rec {
            Ok(rec) if rec.len() != expected.len() => {
                Err(format!("expected {} fields, found {}", expected.len(), rec.len()))
            }
            Ok(rec) => parse(&rec),
            Err(e) => Err(e.to_string()),
        };
        match outcome {
            Ok(v) => rows.push(v),
            Err(message) => issues.push(RowIssue {
                file: file.into(),
                row,
                message,
            }),
        }
    }
    if issues.len() * 2 > total {
        return Err(Error::TooManyBadRows {
            file: file.into(),
            failed: issues.len(),
            total,
            issues,
        });
    }
    Ok((rows, issues))
}

fn opt(s: &str) -> Option<String> {
    let s = s.trim();
    (!s.is_empty()).then(|| s.to_string())
}

fn date(field: &str, s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| format!("{field}: unparseable date `{s}`"))
}

fn ids(s: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for id in s.split('|').map(str::trim).filter(|x| !x.is_empty()) {
        if !out.iter().any(|o| o == id) {
            out.push(id.to_string());
        }
    }
    out
}

/// Uppercase, strip whitespace, keep codes whose first four characters are
/// alphanumeric.
pub(crate) fn normalize_classes(raw: &str) -> Vec<String> {
    let mut out: BTreeSet<String> = BTreeSet::new();
    for code in raw.split('|') {
        let c: String = code
            .chars()
            .filter(|ch| !ch.is_whitespace())
            .collect::<String>()
            .to_uppercase();
        if c.chars().count() >= 4 && c.chars().take(4).all(|ch| ch.is_ascii_alphanumeric()) {
            out.insert(c);
        }
    }
    out.into_iter().collect()
}

fn country(field: &str, s: &str) -> std::result::Result<Option<String>, String> {
    match opt(s) {
        None => Ok(None),
        Some(c) => {
            let c = c.to_uppercase();
            if registry::is_country(&c) {
                Ok(Some(c))
            } else {
                Err(format!("{field}: unknown country code `{c}`"))
            }
        }
    }
}

pub fn read_patents<R: Read>(file: &str, reader: R) -> Result<(Vec<PatentRecord>, Vec<RowIssue>)> {
    read_rows(file, reader, PATENT_HEADER, |r| {
        let patent_id = opt(&r[0]).ok_or("patent_id is blank")?;
        let family_id = opt(&r[1]).ok_or("family_id is blank")?;
        let grant_date = date("grant_date", &r[3])?;
        let earliest_pub_date = date("earliest_pub_date", &r[4])?;
        let cpc_classes = normalize_classes(&r[5]);
        if cpc_classes.is_empty() {
            return Err("no valid technology class".into());
        }
        Ok(PatentRecord {
            patent_id,
            family_id,
            authority: r[2].trim().to_uppercase(),
            grant_date,
            earliest_pub_date,
            cpc_classes,
            applicant_ids: ids(&r[6]),
        })
    })
}

pub fn read_applicants<R: Read>(
    file: &str,
    reader: R,
) -> Result<(Vec<ApplicantRecord>, Vec<RowIssue>)> {
    let this_year = Utc::now().year();
    read_rows(file, reader, APPLICANT_HEADER, |r| {
        let applicant_id = opt(&r[0]).ok_or("applicant_id is blank")?;
        let incorporation_year = match opt(&r[4]) {
            None => None,
            Some(y) => {
                let y: i32 = y
                    .parse()
                    .map_err(|_| format!("incorporation_year: not an integer `{y}`"))?;
                if !(1500..=this_year).contains(&y) {
                    return Err(format!("incorporation_year {y} outside 1500..={this_year}"));
                }
                Some(y)
            }
        };
        Ok(ApplicantRecord {
            applicant_id,
            name: r[1].trim().to_string(),
            country: country("country", &r[2])?,
            nace: opt(&r[3]),
            incorporation_year,
            parent_id: opt(&r[5]),
            parent_country: country("parent_country", &r[6])?,
        })
    })
}

pub fn read_citations<R: Read>(file: &str, reader: R) -> Result<(Vec<CitationEdge>, Vec<RowIssue>)> {
    read_rows(file, reader, CITATION_HEADER, |r| {
        let citation_date = match opt(&r[3]) {
            None => None,
            Some(d) => Some(date("citation_date", &d)?),
        };
        Ok(CitationEdge {
            citing_family: opt(&r[0]).ok_or("citing_family is blank")?,
            cited_family: opt(&r[1]).ok_or("cited_family is blank")?,
            citing_applicant_ids: ids(&r[2]),
            citation_date,
            citing: Attribution::default(),
            cited: Attribution::default(),
        })
    })
}
