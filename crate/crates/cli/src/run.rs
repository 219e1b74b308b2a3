use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use patflow::corpus::{self, AttributionRule, LinkedCorpus};
use patflow::gravity::{
    self, build_panel, fit_clustered, p_value, stars, transform_covariates, DesignSpec, FitOptions, FitResult,
    Panel, PanelOptions,
};
use patflow::indices::{self, Holder};
use patflow::selection::{heckman_two_step, SelectionFit};
use patflow::survival::{self, LagOrigin};
use patflow::synth;
use patflow::{registry, Error, Result};

use crate::output::{opt6, sig6, Artifacts};
use crate::{svg, Attribution, CorpusArgs, GravityArgs, Grouping, SurvivalArgs};

/// Every error message of a run, in the order the sections ran.
pub type Outcome = std::result::Result<(), Vec<String>>;

fn single(r: Result<()>) -> Outcome {
    r.map_err(|e| vec![e.to_string()])
}

fn eu_members(path: Option<&Path>) -> Result<BTreeSet<String>> {
    let Some(path) = path else {
        return Ok(registry::eu27());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .split(|c: char| c == ',' || c.is_whitespace())
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_uppercase)
        .collect())
}

pub fn load(args: &CorpusArgs) -> Result<LinkedCorpus> {
    let mut c = corpus::load_corpus(&args.patents, &args.applicants, &args.citations)?;
    c.rule = match args.attribution {
        Attribution::Fractional => AttributionRule::Fractional,
        Attribution::FirstApplicant => AttributionRule::FirstApplicant,
    };
    let c = corpus::link_records(c)?;
    corpus::aggregate_eu(c, &eu_members(args.eu_members.as_deref())?)
}

fn grouping(g: Grouping) -> corpus::Grouping {
    match g {
        Grouping::Applicant => corpus::Grouping::Applicant,
        Grouping::Parent => corpus::Grouping::Parent,
    }
}

/// File-name-safe form of a group label.
fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

#[derive(Serialize)]
struct CorpusSummary {
    patents: usize,
    families: usize,
    applicants: usize,
    citation_edges: usize,
    unique_citations: usize,
    unlinked_patents: f64,
    row_issues: usize,
    attribution: AttributionRule,
    eu_members: Vec<String>,
}

fn write_ingest(c: &LinkedCorpus, art: &mut Artifacts) -> Result<()> {
    let rows: Vec<Vec<String>> = c
        .missing_report
        .iter()
        .map(|(field, m)| vec![field.clone(), m.missing.to_string(), m.total.to_string(), sig6(m.share())])
        .collect();
    art.csv("missing_report.csv", &["field", "missing", "total", "share"], &rows)?;

    let rows: Vec<Vec<String>> = c
        .issues
        .iter()
        .map(|i| vec![i.file.clone(), i.row.to_string(), i.message.clone()])
        .collect();
    art.csv("row_issues.csv", &["file", "row", "message"], &rows)?;

    let own = c.country_counts(corpus::Grouping::Applicant)?;
    let parent = c.country_counts(corpus::Grouping::Parent)?;
    let keys: BTreeSet<&String> = own.per_country.keys().chain(parent.per_country.keys()).collect();
    let rows: Vec<Vec<String>> = keys
        .into_iter()
        .map(|k| {
            vec![
                k.clone(),
                sig6(own.per_country.get(k).copied().unwrap_or(0.0)),
                sig6(parent.per_country.get(k).copied().unwrap_or(0.0)),
            ]
        })
        .collect();
    art.csv("country_counts.csv", &["country", "applicant_view", "parent_view"], &rows)?;

    let summary = CorpusSummary {
        patents: c.patents.len(),
        families: c.families()?.len(),
        applicants: c.applicants.len(),
        citation_edges: c.citations.len(),
        unique_citations: c.dedup_citations().len(),
        unlinked_patents: own.unlinked,
        row_issues: c.issues.len(),
        attribution: c.rule,
        eu_members: c.eu_members.iter().cloned().collect(),
    };
    art.json("corpus_summary.json", &summary)
}

pub fn ingest(args: &CorpusArgs, out: &Path) -> Outcome {
    single((|| {
        let c = load(args)?;
        let mut art = Artifacts::new(out)?;
        write_ingest(&c, &mut art)?;
        art.finish()
    })())
}

fn write_rca(c: &LinkedCorpus, totals: &Path, rest_of_world: Option<f64>, art: &mut Artifacts) -> Result<()> {
    let (totals, world_total) = indices::read_totals(totals)?;
    let (mut rows, world) = indices::rca_table(c, &totals, world_total)?;
    if let Some(threshold) = rest_of_world {
        rows = indices::collapse_rest_of_world(rows, &world, threshold)?;
    }
    let mut table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.country.clone(), sig6(r.ai_count), sig6(r.total_count), sig6(r.share), sig6(r.rca)])
        .collect();
    table.push(vec![
        world.holder.clone(),
        sig6(world.ai_count),
        sig6(world.total_count),
        sig6(world.ai_count / world.total_count),
        "1".into(),
    ]);
    art.csv("rca.csv", &["country", "ai_count", "total_count", "share", "rca"], &table)
}

pub fn rca(args: &CorpusArgs, totals: &Path, rest_of_world: Option<f64>, out: &Path) -> Outcome {
    single((|| {
        let c = load(args)?;
        let mut art = Artifacts::new(out)?;
        write_rca(&c, totals, rest_of_world, &mut art)?;
        art.finish()
    })())
}

fn write_proximity(c: &LinkedCorpus, class_level: usize, holders: Option<Vec<String>>, art: &mut Artifacts) -> Result<()> {
    let ids: Vec<String> = match holders {
        Some(h) => h,
        None => c
            .country_counts(corpus::Grouping::Applicant)?
            .per_country
            .into_iter()
            .filter(|(_, n)| *n > 0.0)
            .map(|(k, _)| k)
            .collect(),
    };
    let holders: Vec<Holder> = ids
        .iter()
        .map(|id| {
            if registry::is_holder(id) {
                Holder::Country(id.clone())
            } else {
                Holder::Firm(id.clone())
            }
        })
        .collect();
    let m = indices::proximity_matrix(c, &holders, class_level)?;
    let mut header = vec!["holder"];
    header.extend(ids.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = ids
        .iter()
        .zip(&m)
        .map(|(id, row)| std::iter::once(id.clone()).chain(row.iter().map(|&v| sig6(v))).collect())
        .collect();
    art.csv("proximity.csv", &header, &rows)
}

pub fn proximity(args: &CorpusArgs, class_level: usize, holders: Option<Vec<String>>, out: &Path) -> Outcome {
    single((|| {
        let c = load(args)?;
        let mut art = Artifacts::new(out)?;
        write_proximity(&c, class_level, holders, &mut art)?;
        art.finish()
    })())
}

fn write_concentration(c: &LinkedCorpus, q: usize, art: &mut Artifacts) -> Result<()> {
    let rows: Vec<Vec<String>> = indices::concentration_table(c, q)?
        .iter()
        .map(|s| vec![s.sector.clone(), s.n_firms().to_string(), sig6(s.total), sig6(s.cr)])
        .collect();
    art.csv("concentration.csv", &["sector", "n_firms", "total", "cr"], &rows)
}

pub fn concentration(args: &CorpusArgs, q: usize, out: &Path) -> Outcome {
    single((|| {
        let c = load(args)?;
        let mut art = Artifacts::new(out)?;
        write_concentration(&c, q, &mut art)?;
        art.finish()
    })())
}

fn write_citations(c: &LinkedCorpus, g: corpus::Grouping, art: &mut Artifacts) -> Result<()> {
    let mut axis: BTreeSet<String> = BTreeSet::new();
    for e in c.dedup_citations() {
        axis.extend(e.citing.view(g).iter().map(|(k, _)| k.clone()));
        axis.extend(e.cited.view(g).iter().map(|(k, _)| k.clone()));
    }
    let mut axis: Vec<String> = axis.into_iter().collect();
    if !c.eu_members.is_empty() {
        axis.push(registry::EU.to_string());
    }
    let m = indices::citation_matrix(c, &axis, g)?;
    let mut rows = Vec::with_capacity(axis.len() * axis.len());
    for (i, from) in axis.iter().enumerate() {
        for (j, to) in axis.iter().enumerate() {
            rows.push(vec![from.clone(), to.clone(), sig6(m.counts[i][j])]);
        }
    }
    art.csv("citation_matrix.csv", &["citing", "cited", "count"], &rows)?;
    let rows: Vec<Vec<String>> = axis
        .iter()
        .map(|country| {
            let share = match indices::foreign_citation_share(&m, country) {
                Ok(v) => Some(v),
                Err(Error::ZeroRowSum(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(vec![country.clone(), opt6(share)])
        })
        .collect::<Result<_>>()?;
    art.csv("foreign_share.csv", &["country", "foreign_share"], &rows)
}

pub fn citations(args: &CorpusArgs, g: Grouping, out: &Path) -> Outcome {
    single((|| {
        let c = load(args)?;
        let mut art = Artifacts::new(out)?;
        write_citations(&c, grouping(g), &mut art)?;
        art.finish()
    })())
}

fn write_survival(c: &LinkedCorpus, s: &SurvivalArgs, art: &mut Artifacts) -> Result<()> {
    let origin = match s.lag_origin {
        crate::LagOrigin::Publication => LagOrigin::EarliestPublication,
        crate::LagOrigin::Grant => LagOrigin::Grant,
    };
    let lags = survival::first_citation_lags(c, s.window_end, origin)?;
    let mut curves = vec![survival::km_estimate(&lags.records)?];
    curves.extend(survival::group_curves(&lags.records, &c.eu_members)?);
    let horizon = lags.records.iter().map(|l| l.duration).max().unwrap_or(1);
    let x_label = match origin {
        LagOrigin::EarliestPublication => "Months since earliest publication",
        LagOrigin::Grant => "Months since grant",
    };
    let mut plateau = Vec::with_capacity(curves.len());
    for curve in &curves {
        let name = slug(&curve.group);
        let rows: Vec<Vec<String>> = curve
            .steps
            .iter()
            .map(|st| vec![st.t.to_string(), st.d.to_string(), st.n.to_string(), sig6(st.s)])
            .collect();
        art.csv(&format!("km_{name}.csv"), &["t_months", "d", "n", "s"], &rows)?;
        if s.svg {
            art.write(&format!("km_{name}.svg"), svg::step_plot(curve, horizon, x_label).as_bytes())?;
        }
        plateau.push(vec![
            curve.group.clone(),
            sig6(curve.plateau),
            curve.subjects.to_string(),
            curve.events.to_string(),
        ]);
    }
    art.csv("plateau.csv", &["group", "plateau", "subjects", "events"], &plateau)?;
    let invalid: Vec<Vec<String>> = lags.invalid.iter().map(|f| vec![f.clone()]).collect();
    art.csv("survival_invalid.csv", &["family_id"], &invalid)
}

pub fn survival(args: &CorpusArgs, s: &SurvivalArgs, out: &Path) -> Outcome {
    single((|| {
        let c = load(args)?;
        let mut art = Artifacts::new(out)?;
        write_survival(&c, s, &mut art)?;
        art.finish()
    })())
}

fn is_fixed_effect(name: &str) -> bool {
    ["year_", "origin_", "dest_"].iter().any(|p| name.starts_with(p))
}

/// Coefficient table: one row per non-fixed-effect column, then pseudo-R²
/// and the observation count.
fn coefficient_rows(fit: &FitResult) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = fit
        .names
        .iter()
        .zip(fit.coefficients.iter().zip(&fit.se))
        .filter(|(n, _)| !is_fixed_effect(n))
        .map(|(n, (&b, &se))| vec![n.clone(), sig6(b), sig6(se), stars(p_value(b, se)).to_string()])
        .collect();
    rows.push(vec!["pseudo_r2".into(), opt6(fit.pseudo_r2), String::new(), String::new()]);
    rows.push(vec!["N".into(), fit.n_obs.to_string(), String::new(), String::new()]);
    rows
}

const COEF_HEADER: [&str; 4] = ["name", "estimate", "cluster_se", "stars"];

#[derive(Serialize)]
struct SelectionSummary<'a> {
    names: &'a [String],
    gamma: &'a [f64],
    se: &'a [f64],
    converged: bool,
    iterations: usize,
    log_likelihood: f64,
    n_obs: usize,
    positive: usize,
    pruned: &'a [String],
    warnings: &'a [String],
}

fn selection_rows(fit: &SelectionFit, positive: usize) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = fit
        .names
        .iter()
        .zip(fit.gamma.iter().zip(&fit.se))
        .filter(|(n, _)| !is_fixed_effect(n))
        .map(|(n, (&g, &se))| vec![n.clone(), sig6(g), sig6(se), stars(p_value(g, se)).to_string()])
        .collect();
    rows.push(vec!["log_likelihood".into(), sig6(fit.log_likelihood), String::new(), String::new()]);
    rows.push(vec!["positive".into(), positive.to_string(), String::new(), String::new()]);
    rows.push(vec!["N".into(), fit.n_obs.to_string(), String::new(), String::new()]);
    rows
}

#[derive(Serialize)]
struct PanelSummary {
    rows: usize,
    positive_rows: usize,
    dropped_missing_macro: usize,
    dropped_citation_dyads: usize,
    dropped_citations: f64,
    undated_citations: usize,
}

fn panel_options(class_level: usize, g: &GravityArgs) -> PanelOptions {
    PanelOptions {
        class_level,
        ai_stock: match g.ai_stock {
            crate::AiStock::Cumulative => gravity::AiStock::Cumulative,
            crate::AiStock::Annual => gravity::AiStock::Annual,
            crate::AiStock::Macro => gravity::AiStock::Macro,
        },
        proximity: match g.proximity_mode {
            crate::ProximityMode::Static => gravity::ProximityMode::Static,
            crate::ProximityMode::Yearly => gravity::ProximityMode::Yearly,
        },
    }
}

fn orientation(g: &GravityArgs) -> gravity::ClusterOrientation {
    match g.cluster {
        crate::Cluster::Ordered => gravity::ClusterOrientation::Ordered,
        crate::Cluster::Unordered => gravity::ClusterOrientation::Unordered,
    }
}

fn write_panel_summary(panel: &Panel, art: &mut Artifacts) -> Result<()> {
    art.json(
        "panel_summary.json",
        &PanelSummary {
            rows: panel.rows.len(),
            positive_rows: panel.rows.iter().filter(|r| r.citations > 0.0).count(),
            dropped_missing_macro: panel.dropped_missing_macro,
            dropped_citation_dyads: panel.dropped_citation_dyads,
            dropped_citations: panel.dropped_citations,
            undated_citations: panel.undated_citations,
        },
    )
}

fn write_gravity(panel: &Panel, spec: u8, g: &GravityArgs, art: &mut Artifacts) -> Result<()> {
    let layout = DesignSpec::table(spec)?;
    let design = transform_covariates(&panel.rows, g.offset, &layout, orientation(g))?;
    let fit = fit_clustered(&design, FitOptions::default())?;
    art.csv(&format!("gravity_spec{spec}.csv"), &COEF_HEADER, &coefficient_rows(&fit))?;
    art.json(&format!("gravity_spec{spec}.json"), &fit)?;
    if g.heckman {
        let h = heckman_two_step(
            &panel.rows,
            &DesignSpec::first_stage(),
            &layout,
            g.offset,
            orientation(g),
            FitOptions::default(),
        )?;
        let positive = h.corrected.n_obs;
        art.csv(
            &format!("selection_spec{spec}.csv"),
            &["name", "estimate", "se", "stars"],
            &selection_rows(&h.selection, positive),
        )?;
        let s = &h.selection;
        art.json(
            &format!("selection_spec{spec}.json"),
            &SelectionSummary {
                names: &s.names,
                gamma: &s.gamma,
                se: &s.se,
                converged: s.converged,
                iterations: s.iterations,
                log_likelihood: s.log_likelihood,
                n_obs: s.n_obs,
                positive,
                pruned: &s.pruned,
                warnings: &s.warnings,
            },
        )?;
        art.csv(&format!("heckman_spec{spec}.csv"), &COEF_HEADER, &coefficient_rows(&h.corrected))?;
        art.json(&format!("heckman_spec{spec}.json"), &h.corrected)?;
    }
    Ok(())
}

pub fn gravity(
    args: &CorpusArgs,
    bilateral: &Path,
    macro_path: &Path,
    spec: u8,
    class_level: usize,
    g: &GravityArgs,
    out: &Path,
) -> Outcome {
    single((|| {
        let c = load(args)?;
        let panel = build_panel(&c, bilateral, macro_path, &panel_options(class_level, g))?;
        let mut art = Artifacts::new(out)?;
        write_panel_summary(&panel, &mut art)?;
        write_gravity(&panel, spec, g, &mut art)?;
        art.finish()
    })())
}

const CORPUS_FILES: [&str; 3] = ["patents.csv", "applicants.csv", "citations.csv"];

pub fn synth_corpus(seed: u64, firms: usize, n_patents: usize, classes: usize, out: &Path) -> Outcome {
    single((|| {
        let s = synth::gen_corpus(seed, firms, n_patents, classes)?;
        let mut art = Artifacts::new(out)?;
        s.write(art.dir())?;
        for f in CORPUS_FILES.iter().chain(&["totals.csv", "truth.json"]) {
            art.adopt(f);
        }
        art.finish()
    })())
}

pub fn synth_panel(seed: u64, countries: usize, years: usize, delta: Option<f64>, out: &Path) -> Outcome {
    single((|| {
        let selection = delta.map(|delta| synth::SelectionTruth {
            delta,
            ..synth::default_selection()
        });
        let s = synth::gen_panel(seed, &synth::default_beta(), countries, years, selection.as_ref())?;
        let mut art = Artifacts::new(out)?;
        s.write(art.dir())?;
        for f in CORPUS_FILES.iter().chain(&["bilateral.csv", "macro.csv", "truth.json"]) {
            art.adopt(f);
        }
        art.finish()
    })())
}

pub struct ReportPlan {
    pub totals: Option<PathBuf>,
    pub covariates: Option<(PathBuf, PathBuf)>,
    pub class_level: usize,
    pub q: usize,
    pub survival: SurvivalArgs,
    pub gravity: GravityArgs,
}

/// Run every section the inputs allow. A failing section is reported and
/// the rest still run; the manifest covers whatever was written.
pub fn report(args: &CorpusArgs, plan: &ReportPlan, out: &Path) -> Outcome {
    let c = load(args).map_err(|e| vec![e.to_string()])?;
    let mut art = Artifacts::new(out).map_err(|e| vec![e.to_string()])?;
    let mut errors: BTreeMap<usize, String> = BTreeMap::new();
    let mut section = |k: usize, label: &str, r: Result<()>| {
        if let Err(e) = r {
            errors.insert(k, format!("{label}: {e}"));
        }
    };
    section(0, "ingest", write_ingest(&c, &mut art));
    if let Some(totals) = &plan.totals {
        section(1, "rca", write_rca(&c, totals, None, &mut art));
    }
    section(2, "proximity", write_proximity(&c, plan.class_level, None, &mut art));
    section(3, "concentration", write_concentration(&c, plan.q, &mut art));
    section(4, "citations", write_citations(&c, corpus::Grouping::Applicant, &mut art));
    section(5, "survival", write_survival(&c, &plan.survival, &mut art));
    if let Some((bilateral, macro_path)) = &plan.covariates {
        match build_panel(&c, bilateral, macro_path, &panel_options(plan.class_level, &plan.gravity)) {
            Ok(panel) => {
                section(6, "panel", write_panel_summary(&panel, &mut art));
                for spec in 1..=4u8 {
                    let label = format!("gravity spec {spec}");
                    section(6 + spec as usize, &label, write_gravity(&panel, spec, &plan.gravity, &mut art));
                }
            }
            Err(e) => section(6, "panel", Err(e)),
        }
    }
    section(20, "manifest", art.finish());
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors.into_values().collect())
    }
}
