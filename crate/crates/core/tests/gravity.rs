mod common;

use common::{applicant, cite, design, linked, obs, patent};
use nalgebra::{DMatrix, DVector};
use patflow::gravity::{
    build_panel_from, clustered_se, fit_clustered, marginal_effect, p_value, ppml_fit, pseudo_r2, stars,
    transform_covariates, BilateralRow, ClusterOrientation, DesignSpec, FitOptions, MacroRow, PanelOptions, Regressor,
    DEFAULT_OFFSET,
};
use patflow::synth::{default_beta, gen_panel};
use patflow::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

fn poisson_fixture(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y = x
        .iter()
        .map(|v: &f64| Poisson::new((1.0 + 0.5 * v).exp()).unwrap().sample(&mut rng))
        .collect();
    (x, y)
}

fn score(d: &patflow::gravity::DesignMatrix, fitted: &[f64]) -> Vec<f64> {
    (0..d.x.ncols())
        .map(|j| (0..d.n_obs()).map(|r| (d.y[r] - fitted[r]) * d.x[(r, j)]).sum())
        .collect()
}

#[test]
fn intercept_only_is_log_mean() {
    let y = vec![0.0, 3.0, 1.0, 7.0, 2.0, 0.0];
    let d = design(y.clone(), &[], (0..6).collect());
    let fit = ppml_fit(&d, FitOptions::default()).unwrap();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    // the deviance stopping rule leaves an error of order offset^2
    assert!((fit.coefficients[0] - mean.ln()).abs() < 1e-8);
    assert!(fit.converged);
    assert_eq!(pseudo_r2(&fit, &d), None);
}

#[test]
fn poisson_truth_is_recovered_with_first_order_conditions() {
    let (x, y) = poisson_fixture(11, 10_000);
    let d = design(y, &[("x", x)], (0..10_000).collect());
    let fit = fit_clustered(&d, FitOptions::default()).unwrap();
    for (k, truth) in [1.0, 0.5].iter().enumerate() {
        assert!((fit.coefficients[k] - truth).abs() < 3.0 * fit.se[k], "coefficient {k}");
    }
    for s in score(&d, &fit.fitted) {
        assert!(s.abs() < 1e-6, "score {s}");
    }
    let r2 = fit.pseudo_r2.expect("non-constant fit");
    assert!(r2 > 0.0 && r2 < 1.0);
    let again = fit_clustered(&d, FitOptions::default()).unwrap();
    assert_eq!(again.coefficients, fit.coefficients);
    assert_eq!(again.pseudo_r2, fit.pseudo_r2);
}

#[test]
fn one_row_per_cluster_is_scaled_robust_sandwich() {
    let (x, y) = poisson_fixture(5, 400);
    let d = design(y, &[("x", x)], (0..400).collect());
    let fit = fit_clustered(&d, FitOptions::default()).unwrap();
    let mut bread = DMatrix::<f64>::zeros(2, 2);
    let mut meat = DMatrix::<f64>::zeros(2, 2);
    for r in 0..400 {
        let xr = DVector::from_vec(vec![d.x[(r, 0)], d.x[(r, 1)]]);
        let u = d.y[r] - fit.fitted[r];
        bread += &xr * xr.transpose() * fit.fitted[r];
        meat += &xr * xr.transpose() * (u * u);
    }
    let inv = bread.try_inverse().unwrap();
    let hc = &inv * meat * &inv * (400.0 / 399.0);
    for i in 0..2 {
        for j in 0..2 {
            assert!((fit.covariance[(i, j)] - hc[(i, j)]).abs() <= 1e-10 * hc[(i, j)].abs().max(1e-12));
        }
        assert_eq!(fit.se[i], fit.covariance[(i, i)].sqrt());
    }
}

#[test]
fn duplicated_clusters_leave_estimates_unchanged() {
    let (x, y) = poisson_fixture(3, 600);
    let clusters: Vec<usize> = (0..600).map(|r| r / 3).collect();
    let d = design(y.clone(), &[("x", x.clone())], clusters.clone());
    let doubled = design(
        y.iter().chain(&y).copied().collect(),
        &[("x", x.iter().chain(&x).copied().collect())],
        clusters.iter().chain(&clusters).copied().collect(),
    );
    let a = ppml_fit(&d, FitOptions::default()).unwrap();
    let b = ppml_fit(&doubled, FitOptions::default()).unwrap();
    for (u, v) in a.coefficients.iter().zip(&b.coefficients) {
        assert!((u - v).abs() < 1e-8);
    }
}

#[test]
fn perfect_fit_has_unit_pseudo_r2() {
    let x: Vec<f64> = (0..50).map(|i| i as f64 / 25.0 - 1.0).collect();
    let y: Vec<f64> = x.iter().map(|v| (1.0 + 0.5 * v).exp()).collect();
    let d = design(y, &[("x", x)], (0..50).collect());
    let fit = ppml_fit(&d, FitOptions::default()).unwrap();
    assert!((fit.pseudo_r2.unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn duplicate_column_is_pruned_with_warning() {
    let (x, y) = poisson_fixture(8, 300);
    let d = design(y, &[("x", x.clone()), ("x_copy", x)], (0..300).collect());
    let fit = ppml_fit(&d, FitOptions::default()).unwrap();
    assert_eq!(fit.pruned, vec!["x_copy".to_string()]);
    assert_eq!(fit.names, vec!["const".to_string(), "x".to_string()]);
    assert!(fit.warnings.iter().any(|w| w.contains("x_copy")));
}

#[test]
fn degenerate_inputs_are_errors() {
    let zeros = design(vec![0.0; 5], &[], (0..5).collect());
    assert!(matches!(ppml_fit(&zeros, FitOptions::default()), Err(Error::AllZeroResponse)));
    let one = design(vec![1.0, 2.0, 3.0], &[], vec![0, 0, 0]);
    let fit = ppml_fit(&one, FitOptions::default()).unwrap();
    assert!(matches!(clustered_se(&fit, &one), Err(Error::SingleCluster)));
}

#[test]
fn too_few_iterations_report_the_trace() {
    let (x, y) = poisson_fixture(2, 200);
    let d = design(y, &[("x", x)], (0..200).collect());
    match ppml_fit(&d, FitOptions { max_iter: 1, tol: 1e-14 }) {
        Err(Error::NoConvergence { .. }) => {}
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn log_covariates_use_the_offset() {
    let panel = vec![obs("CN", "US", 2019, 2.0), obs("US", "CN", 2019, 0.0)];
    let spec = DesignSpec::custom(vec![Regressor::LnDistance, Regressor::LnAiPatentsJ, Regressor::Rta], false);
    let d = transform_covariates(&panel, DEFAULT_OFFSET, &spec, ClusterOrientation::Ordered).unwrap();
    let ai = d.column_index("ln_ai_patents_j").unwrap();
    assert!((d.x[(0, ai)] - (-9.210340)).abs() < 1e-6);
    let dist = d.column_index("ln_distance").unwrap();
    assert!((d.x[(0, dist)] - 6.907755).abs() < 1e-6);
    assert_eq!(d.x[(0, dist)], 1000.0001f64.ln());
    assert_eq!(d.x[(0, d.column_index("rta").unwrap())], 0.0);
    assert_eq!(d.y, vec![2.0, 0.0]);

    assert!(matches!(
        transform_covariates(&panel, 0.0, &spec, ClusterOrientation::Ordered),
        Err(Error::InvalidArgument(_))
    ));
    let mut bad = panel.clone();
    bad[1].distance_km = -1.0;
    match transform_covariates(&bad, DEFAULT_OFFSET, &spec, ClusterOrientation::Ordered) {
        Err(Error::NegativeCovariate { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "distance_km")),
        other => panic!("expected negative covariate, got {other:?}"),
    }
}

#[test]
fn dummy_blocks_drop_the_first_level() {
    let mut panel = Vec::new();
    for year in 2015..2020 {
        for (i, j) in [("CN", "US"), ("US", "CN"), ("DE", "US")] {
            panel.push(obs(i, j, year, 1.0));
        }
    }
    let spec = DesignSpec::table(1).unwrap();
    let d = transform_covariates(&panel, DEFAULT_OFFSET, &spec, ClusterOrientation::Ordered).unwrap();
    let years: Vec<&String> = d.names.iter().filter(|n| n.starts_with("year_")).collect();
    assert_eq!(years, vec!["year_2016", "year_2017", "year_2018", "year_2019"]);
    assert!(d.column_index("origin_CN").is_none());
    assert!(d.column_index("origin_DE").is_some());
    assert!(d.column_index("dest_US").is_some());
    assert_eq!(d.cluster_labels.len(), 3);

    let unordered = transform_covariates(&panel, DEFAULT_OFFSET, &spec, ClusterOrientation::Unordered).unwrap();
    assert_eq!(unordered.cluster_labels.len(), 2);
    assert!(DesignSpec::table(5).is_err());
}

#[test]
fn nested_layouts_share_the_response() {
    let synth = gen_panel(9, &default_beta(), 8, 3, None).unwrap();
    let panel = synth.panel(&PanelOptions::default()).unwrap();
    let mut last_width = 0;
    let mut response = None;
    for spec in 1..=4u8 {
        let d = transform_covariates(&panel.rows, DEFAULT_OFFSET, &DesignSpec::table(spec).unwrap(), ClusterOrientation::Ordered)
            .unwrap();
        let regressors = DesignSpec::table(spec).unwrap().regressors.len();
        assert!(regressors > last_width);
        last_width = regressors;
        match &response {
            None => response = Some(d.y.clone()),
            Some(y) => assert_eq!(&d.y, y),
        }
    }
}

#[test]
fn rescaling_a_log_covariate_moves_only_the_intercept() {
    let synth = gen_panel(4, &default_beta(), 12, 3, None).unwrap();
    let rows = synth.panel(&PanelOptions::default()).unwrap().rows;
    let spec = DesignSpec::custom(
        vec![Regressor::LnDistance, Regressor::CommonLanguage, Regressor::LnGdpI, Regressor::LnGdpJ],
        true,
    );
    let base = transform_covariates(&rows, DEFAULT_OFFSET, &spec, ClusterOrientation::Ordered).unwrap();
    let scaled_rows: Vec<_> = rows
        .iter()
        .map(|o| {
            let mut o = o.clone();
            o.gdp_i *= 1000.0;
            o
        })
        .collect();
    let scaled = transform_covariates(&scaled_rows, DEFAULT_OFFSET, &spec, ClusterOrientation::Ordered).unwrap();
    let a = ppml_fit(&base, FitOptions::default()).unwrap();
    let b = ppml_fit(&scaled, FitOptions::default()).unwrap();
    for name in ["ln_distance", "common_language", "ln_gdp_i", "ln_gdp_j", "year_2016", "year_2017"] {
        let (u, v) = (a.coefficient(name).unwrap(), b.coefficient(name).unwrap());
        assert!((u - v).abs() < 1e-6, "{name}: {u} vs {v}");
    }
    let shift = b.coefficient("const").unwrap() - a.coefficient("const").unwrap();
    let expected = -a.coefficient("ln_gdp_i").unwrap() * 1000f64.ln();
    assert!((shift - expected).abs() < 1e-6);
}

#[cfg(feature = "parallel")]
#[test]
fn fits_do_not_depend_on_thread_count() {
    let (x, y) = poisson_fixture(21, 5_000);
    let clusters: Vec<usize> = (0..5_000).map(|r| r / 4).collect();
    let d = design(y, &[("x", x)], clusters);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| fit_clustered(&d, FitOptions::default()).unwrap());
    let b = four.install(|| fit_clustered(&d, FitOptions::default()).unwrap());
    assert_eq!(a.coefficients, b.coefficients);
    assert_eq!(a.se, b.se);
    assert_eq!(a.deviance, b.deviance);
}

#[test]
fn inference_helpers() {
    assert!((marginal_effect(0.552) - 0.7366).abs() <= 0.0005);
    assert!((marginal_effect(1.29) - 2.633).abs() <= 0.005);
    assert_eq!(marginal_effect(0.0), 0.0);
    assert!((p_value(1.959963984540054, 1.0) - 0.05).abs() < 1e-12);
    assert_eq!(stars(0.005), "***");
    assert_eq!(stars(0.03), "**");
    assert_eq!(stars(0.07), "*");
    assert_eq!(stars(0.5), "");
}

fn bilateral(origin: &str, dest: &str, year: i32) -> BilateralRow {
    BilateralRow {
        origin: origin.into(),
        dest: dest.into(),
        year,
        distance_km: 900.0,
        common_language: 1.0,
        common_legal: 0.0,
        common_religion: 0.3,
        colonial: 0.0,
        contiguous: 1.0,
        rta: 1.0,
        eu_pair: 0.0,
    }
}

fn macro_row(country: &str, year: i32) -> MacroRow {
    MacroRow {
        country: country.into(),
        year,
        gdp: Some(1e12),
        gdp_pc: Some(30_000.0),
        rd_share: Some(2.0),
        ai_patent_stock: Some(5.0),
    }
}

#[test]
fn panel_rows_are_directed_dyad_years() {
    let corpus = linked(
        vec![
            patent("P1", "FU", "2018-01-01", &["G06N3/08"], &["U"]),
            patent("P2", "FC", "2018-01-01", &["G06N3/08"], &["C"]),
            patent("P3", "FJ", "2018-01-01", &["G06N3/08"], &["J"]),
        ],
        vec![applicant("U", "US", None), applicant("C", "CN", None), applicant("J", "JP", None)],
        vec![
            cite("FC", "FU", "C", Some("2020-03-01")),
            cite("FJ", "FU", "J", Some("2020-03-01")),
            cite("FU", "FC", "U", None),
        ],
    );
    let mut bil = Vec::new();
    for year in [2020, 2021] {
        bil.push(bilateral("US", "CN", year));
        bil.push(bilateral("CN", "US", year));
    }
    let macros: Vec<MacroRow> = ["US", "CN"].iter().flat_map(|c| [2020, 2021].map(|y| macro_row(c, y))).collect();
    let panel = build_panel_from(&corpus, &bil, &macros, &PanelOptions::default()).unwrap();
    assert_eq!(panel.rows.len(), 4);
    let flows: Vec<(&str, &str, i32, f64)> =
        panel.rows.iter().map(|o| (o.origin.as_str(), o.dest.as_str(), o.year, o.citations)).collect();
    assert_eq!(
        flows,
        vec![("CN", "US", 2020, 1.0), ("CN", "US", 2021, 0.0), ("US", "CN", 2020, 0.0), ("US", "CN", 2021, 0.0)]
    );
    assert_eq!(panel.dropped_citation_dyads, 1);
    assert_eq!(panel.undated_citations, 1);

    let mut bad = bil.clone();
    bad[0].origin = "ZZ".into();
    assert!(matches!(
        build_panel_from(&corpus, &bad, &macros, &PanelOptions::default()),
        Err(Error::UnknownCountries(_))
    ));
}
