use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::Serialize;

use super::corpus::{linked, write_corpus_tables};
use super::{csv_err, csv_writer, stream, PanelDims, TruthRecord};
use crate::corpus::{ApplicantRecord, Attribution, CitationEdge, LinkedCorpus, PatentRecord};
use crate::error::{Error, Result};
use crate::gravity::{build_panel_from, BilateralRow, MacroRow, Panel, PanelOptions, DEFAULT_OFFSET};
use crate::registry;

const POOL: &[&str] = &[
    "US", "CN", "JP", "KR", "DE", "FR", "GB", "NL", "SE", "IE", "IT", "ES", "CA", "AU", "CH", "IN",
    "BR", "IL", "SG", "FI", "DK", "AT", "BE", "PL", "NO", "NZ", "MX", "ZA", "TW", "PT",
];
const AI_CLASSES: &[&str] = &[
    "G06N3/08", "G06N20/00", "G06F18/24", "G06V10/82", "G06T7/00", "G10L15/16", "H04L9/40",
    "A61B5/00", "B25J9/16", "G05B13/02", "G06Q10/04", "B60W60/00",
];
const FIRST_YEAR: i32 = 2015;
/// Default year effects grow by this much per year after the first.
const YEAR_STEP: f64 = 0.05;

/// Latent link gate: a dyad is linked when `z·gamma + u > 0`, `u ~ N(0, 1)`,
/// and linked flows carry an extra `delta · λ(z·gamma)` in their log mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionTruth {
    pub gamma: BTreeMap<String, f64>,
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub patents: Vec<PatentRecord>,
    pub applicants: Vec<ApplicantRecord>,
    pub citations: Vec<CitationEdge>,
    pub bilateral: Vec<BilateralRow>,
    pub macros: Vec<MacroRow>,
    pub truth: TruthRecord,
}

impl SyntheticPanel {
    /// Linked corpus with the EU27 registered as an aggregate holder.
    pub fn corpus(&self) -> Result<LinkedCorpus> {
        linked(&self.patents, &self.applicants, &self.citations)
    }

    pub fn panel(&self, opts: &PanelOptions) -> Result<Panel> {
        build_panel_from(&self.corpus()?, &self.bilateral, &self.macros, opts)
    }

    /// Write the three corpus tables plus `bilateral.csv`, `macro.csv` and
    /// `truth.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_corpus_tables(dir, &self.patents, &self.applicants, &self.citations)?;
        write_rows(&dir.join("bilateral.csv"), &self.bilateral)?;
        write_rows(&dir.join("macro.csv"), &self.macros)?;
        self.truth.write(&dir.join("truth.json"))
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let e = csv_err(path);
    for r in rows {
        w.serialize(r).map_err(&e)?;
    }
    w.flush().map_err(|err| Error::io(path, err))
}

/// Six-covariate gravity truth with a mean log flow near 2.
pub fn default_beta() -> BTreeMap<String, f64> {
    [
        ("const", -11.0),
        ("ln_distance", -0.6),
        ("common_language", 0.5),
        ("contiguous", 0.4),
        ("rta", 0.3),
        ("ln_gdp_i", 0.4),
        ("ln_gdp_j", 0.3),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Link gate with roughly two thirds of dyads linked and `delta = 0`. The
/// gate uses `colonial` and `common_religion`, which the default gravity
/// truth excludes.
pub fn default_selection() -> SelectionTruth {
    SelectionTruth {
        gamma: [
            ("const", 2.5),
            ("ln_distance", -0.3),
            ("colonial", 0.6),
            ("common_religion", 0.8),
            ("rta", 0.4),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect(),
        delta: 0.0,
    }
}

struct Pair {
    distance: f64,
    language: f64,
    legal: f64,
    religion: f64,
    colonial: f64,
    contiguous: f64,
    rta: f64,
}

struct Country {
    gdp: f64,
    gdp_pc: f64,
    rd: f64,
    ai: f64,
}

/// Covariate value as the estimator sees it, computed from raw draws.
fn covariate(name: &str, p: &Pair, ci: &Country, cj: &Country, eu_i: f64, eu_j: f64, prox: f64) -> Option<f64> {
    let ln = |x: f64| (x + DEFAULT_OFFSET).ln();
    Some(match name {
        "const" => 1.0,
        "ln_distance" => ln(p.distance),
        "common_language" => p.language,
        "common_legal" => p.legal,
        "common_religion" => p.religion,
        "colonial" => p.colonial,
        "contiguous" => p.contiguous,
        "rta" => p.rta,
        "ln_gdp_i" => ln(ci.gdp),
        "ln_gdp_j" => ln(cj.gdp),
        "ln_gdp_pc_i" => ln(ci.gdp_pc),
        "ln_gdp_pc_j" => ln(cj.gdp_pc),
        "rd_share_i" => ci.rd,
        "rd_share_j" => cj.rd,
        "ln_ai_patents_i" => ln(ci.ai),
        "ln_ai_patents_j" => ln(cj.ai),
        "proximity" => prox,
        "eu_i" => eu_i,
        "eu_j" => eu_j,
        "eu_ij" => eu_i * eu_j,
        _ => return None,
    })
}

fn check_names(map: &BTreeMap<String, f64>, years: &[i32], what: &str) -> Result<()> {
    let dummy = Pair {
        distance: 1.0,
        language: 0.0,
        legal: 0.0,
        religion: 0.0,
        colonial: 0.0,
        contiguous: 0.0,
        rta: 0.0,
    };
    let c = Country {
        gdp: 1.0,
        gdp_pc: 1.0,
        rd: 1.0,
        ai: 1.0,
    };
    for k in map.keys() {
        let is_year = k
            .strip_prefix("year_")
            .and_then(|y| y.parse::<i32>().ok())
            .is_some_and(|y| years[1..].contains(&y));
        if !is_year && covariate(k, &dummy, &c, &c, 0.0, 0.0, 0.0).is_none() {
            return Err(Error::InvalidArgument(format!("unknown {what} coefficient '{k}'")));
        }
    }
    Ok(())
}

fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> f64 {
    rng.random_bool(p) as u8 as f64
}

/// Generate a dyad-year panel over `n_countries` countries and `n_years`
/// years starting in 2015, with citation counts drawn from the gravity truth
/// `beta_true` (keys are design column names; missing year effects default
/// to 0.05 per year). With `selection`, unlinked dyads have structural zeros.
pub fn gen_panel(
    seed: u64,
    beta_true: &BTreeMap<String, f64>,
    n_countries: usize,
    n_years: usize,
    selection: Option<&SelectionTruth>,
) -> Result<SyntheticPanel> {
    if n_countries < 3 || n_years < 2 {
        return Err(Error::InvalidArgument(format!(
            "panel needs at least 3 countries and 2 years, got {n_countries} and {n_years}"
        )));
    }
    if n_countries > POOL.len() {
        return Err(Error::InvalidArgument(format!(
            "panel supports at most {} countries, got {n_countries}",
            POOL.len()
        )));
    }
    let mut countries: Vec<&str> = POOL[..n_countries].to_vec();
    countries.sort_unstable();
    let years: Vec<i32> = (0..n_years as i32).map(|k| FIRST_YEAR + k).collect();
    check_names(beta_true, &years, "beta")?;
    if let Some(s) = selection {
        check_names(&s.gamma, &years, "gamma")?;
    }
    let mut beta = beta_true.clone();
    for (k, y) in years.iter().enumerate().skip(1) {
        beta.entry(format!("year_{y}")).or_insert(YEAR_STEP * k as f64);
    }

    let mut geo = stream(seed, 1);
    let mut econ = stream(seed, 2);
    let mut fam_rng = stream(seed, 3);
    let mut gate_rng = stream(seed, 4);
    let mut flow_rng = stream(seed, 5);
    let mut place_rng = stream(seed, 6);

    // symmetric pair covariates, drawn for i < j
    let n = countries.len();
    let mut pairs: BTreeMap<(usize, usize), Pair> = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = Pair {
                distance: geo.random_range(100.0..15000.0),
                language: bernoulli(&mut geo, 0.2),
                legal: bernoulli(&mut geo, 0.3),
                religion: geo.random::<f64>(),
                colonial: bernoulli(&mut geo, 0.05),
                contiguous: bernoulli(&mut geo, 0.1),
                rta: bernoulli(&mut geo, 0.3),
            };
            pairs.insert((i, j), p);
        }
    }
    // one applicant per country holding a few AI families
    let mut applicants = Vec::new();
    let mut patents = Vec::new();
    let mut families: Vec<Vec<String>> = Vec::new();
    let mut pub_years: Vec<Vec<i32>> = Vec::new();
    let last_year = *years.last().expect("n_years >= 2");
    for (c, code) in countries.iter().enumerate() {
        applicants.push(ApplicantRecord {
            applicant_id: format!("A-{code}"),
            name: format!("Applicant {code}"),
            country: Some(code.to_string()),
            nace: Some("62".into()),
            incorporation_year: Some(1990),
            parent_id: None,
            parent_country: None,
        });
        let k = fam_rng.random_range(1..=10usize);
        let mut years_c = Vec::with_capacity(k);
        let mut fams = Vec::with_capacity(k);
        for f in 0..k {
            let fam = format!("AI-{code}-{f}");
            let mut cls: Vec<String> = (0..fam_rng.random_range(1..=3))
                .map(|_| AI_CLASSES[fam_rng.random_range(0..AI_CLASSES.len())].to_string())
                .collect();
            cls.sort();
            cls.dedup();
            // the first family predates the panel so no stock is zero
            let year = if f == 0 { 2012 } else { fam_rng.random_range(2012..=last_year) };
            years_c.push(year);
            let d = NaiveDate::from_ymd_opt(year, fam_rng.random_range(1..=12), 1).expect("valid date");
            patents.push(PatentRecord {
                patent_id: format!("P-{code}-{f}"),
                family_id: fam.clone(),
                authority: "EP".into(),
                grant_date: d + chrono::Months::new(18),
                earliest_pub_date: d,
                cpc_classes: cls,
                applicant_ids: vec![format!("A-{code}")],
            });
            fams.push(fam);
        }
        debug_assert_eq!(families.len(), c);
        families.push(fams);
        pub_years.push(years_c);
    }
    let ln_gdp = Normal::new(26.0, 1.2).expect("valid sd");
    let ln_pop = Normal::new(16.5, 1.2).expect("valid sd");
    let mut econ_by: BTreeMap<(usize, i32), Country> = BTreeMap::new();
    let mut macros = Vec::new();
    for (c, code) in countries.iter().enumerate() {
        let base_gdp = ln_gdp.sample(&mut econ);
        let pop: f64 = ln_pop.sample(&mut econ);
        let pop = pop.exp();
        let rd = econ.random_range(0.5..4.0);
        for (k, &y) in years.iter().enumerate() {
            let growth: f64 = econ.random_range(0.0..0.04);
            let gdp = (base_gdp + growth * k as f64).exp();
            // cumulative corpus count, so every stock source agrees
            let ai = pub_years[c].iter().filter(|&&p| p <= y).count() as f64;
            let row = Country {
                gdp,
                gdp_pc: gdp / pop,
                rd,
                ai,
            };
            macros.push(MacroRow {
                country: code.to_string(),
                year: y,
                gdp: Some(row.gdp),
                gdp_pc: Some(row.gdp_pc),
                rd_share: Some(row.rd),
                ai_patent_stock: Some(row.ai),
            });
            econ_by.insert((c, y), row);
        }
    }

    let prox = {
        // static min-complement proximity of family-level class shares
        let shares: Vec<BTreeMap<String, f64>> = countries
            .iter()
            .map(|code| {
                let mut s: BTreeMap<String, f64> = BTreeMap::new();
                let own: Vec<&PatentRecord> =
                    patents.iter().filter(|p| p.applicant_ids[0] == format!("A-{code}")).collect();
                for p in &own {
                    let mut cls: Vec<String> = p.cpc_classes.iter().map(|c| c[..4].to_string()).collect();
                    cls.sort();
                    cls.dedup();
                    let m = cls.len() as f64;
                    for c in cls {
                        *s.entry(c).or_default() += 1.0 / m;
                    }
                }
                let total: f64 = s.values().sum();
                s.values_mut().for_each(|v| *v /= total);
                s
            })
            .collect();
        move |i: usize, j: usize| -> f64 {
            let keys: std::collections::BTreeSet<&String> = shares[i].keys().chain(shares[j].keys()).collect();
            let d: f64 = keys
                .into_iter()
                .map(|k| {
                    (shares[i].get(k).copied().unwrap_or(0.0) - shares[j].get(k).copied().unwrap_or(0.0)).abs()
                })
                .sum();
            (1.0 - 0.5 * d).clamp(0.0, 1.0)
        }
    };

    let eu27 = registry::eu27();
    let eu = |c: usize| eu27.contains(countries[c]) as u8 as f64;
    let mut bilateral = Vec::new();
    let mut citations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let p = &pairs[&(i.min(j), i.max(j))];
            for (k, &y) in years.iter().enumerate() {
                let (ci, cj) = (&econ_by[&(i, y)], &econ_by[&(j, y)]);
                bilateral.push(BilateralRow {
                    origin: countries[i].into(),
                    dest: countries[j].into(),
                    year: y,
                    distance_km: p.distance,
                    common_language: p.language,
                    common_legal: p.legal,
                    common_religion: p.religion,
                    colonial: p.colonial,
                    contiguous: p.contiguous,
                    rta: p.rta,
                    eu_pair: eu(i) * eu(j),
                });
                let pr = prox(i, j);
                let x = |name: &str| covariate(name, p, ci, cj, eu(i), eu(j), pr);
                let mut eta: f64 = beta
                    .iter()
                    .filter_map(|(name, b)| x(name).map(|v| v * b))
                    .sum();
                if k > 0 {
                    eta += beta[&format!("year_{y}")];
                }
                let mut linked = true;
                if let Some(s) = selection {
                    let zg: f64 = s.gamma.iter().filter_map(|(name, g)| x(name).map(|v| v * g)).sum();
                    let u: f64 = StandardNormal.sample(&mut gate_rng);
                    linked = zg + u > 0.0;
                    // gate indices stay far above the tail where this ratio loses precision
                    let mills = (-0.5 * zg * zg).exp() / (2.0 * std::f64::consts::PI).sqrt()
                        / (0.5 * libm::erfc(-zg / std::f64::consts::SQRT_2));
                    eta += s.delta * mills;
                }
                let count = if linked {
                    Poisson::new(eta.exp())
                        .map_err(|e| Error::InvalidArgument(format!("Poisson mean exp({eta}): {e}")))?
                        .sample(&mut flow_rng) as u64
                } else {
                    0
                };
                for c in 0..count {
                    let cited = &families[j][place_rng.random_range(0..families[j].len())];
                    let date = NaiveDate::from_ymd_opt(y, place_rng.random_range(1..=12), place_rng.random_range(1..=28))
                        .expect("valid date");
                    citations.push(CitationEdge {
                        citing_family: format!("C-{}-{}-{y}-{c}", countries[i], countries[j]),
                        cited_family: cited.clone(),
                        citing_applicant_ids: vec![format!("A-{}", countries[i])],
                        citation_date: Some(date),
                        citing: Attribution::default(),
                        cited: Attribution::default(),
                    });
                }
            }
        }
    }

    let mut truth = TruthRecord::new(seed);
    truth.beta_true = Some(beta);
    if let Some(s) = selection {
        truth.gamma_true = Some(s.gamma.clone());
        truth.delta_true = Some(s.delta);
    }
    truth.panel = Some(PanelDims {
        countries: countries.iter().map(|c| c.to_string()).collect(),
        years,
    });
    Ok(SyntheticPanel {
        patents,
        applicants,
        citations,
        bilateral,
        macros,
        truth,
    })
}
