mod common;

use common::design;
use nalgebra::DMatrix;
use patflow::gravity::{ClusterOrientation, DesignSpec, FitOptions, PanelOptions, Regressor, DEFAULT_OFFSET};
use patflow::selection::{
    heckman_second_stage, heckman_two_step, inverse_mills, normal_cdf, normal_pdf, probit_fit, SelectionFit,
    IMR_COLUMN,
};
use patflow::synth::{default_beta, default_selection, gen_panel};
use patflow::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PROBIT_60: f64 = 0.253_347_103_135_799_7;

fn probit_score(y: &[f64], x: &DMatrix<f64>, eta: &[f64]) -> Vec<f64> {
    (0..x.ncols())
        .map(|j| {
            (0..y.len())
                .map(|r| {
                    let (p, f) = (normal_cdf(eta[r]), normal_pdf(eta[r]));
                    (y[r] - p) * f / (p * (1.0 - p)) * x[(r, j)]
                })
                .sum()
        })
        .collect()
}

#[test]
fn intercept_only_probit_is_normal_quantile() {
    let y: Vec<f64> = (0..1000).map(|i| (i % 5 < 3) as u8 as f64).collect();
    let d = design(y, &[], (0..1000).collect());
    let fit = probit_fit(&d, FitOptions::default()).unwrap();
    assert!((fit.gamma[0] - PROBIT_60).abs() < 1e-8);
    assert!((normal_cdf(fit.gamma[0]) - 0.6).abs() < 1e-8);
    assert!(fit.converged);
}

#[test]
fn probit_recovers_truth_and_zeroes_the_score() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 20_000;
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|v| (rng.random::<f64>() < normal_cdf(0.5 - v)) as u8 as f64)
        .collect();
    let d = design(y.clone(), &[("x", x)], (0..n).collect());
    let fit = probit_fit(&d, FitOptions::default()).unwrap();
    for (k, truth) in [0.5, -1.0].iter().enumerate() {
        assert!((fit.gamma[k] - truth).abs() < 3.0 * fit.se[k], "gamma {k}: {}", fit.gamma[k]);
    }
    for s in probit_score(&y, &d.x, &fit.linear_predictor) {
        assert!(s.abs() < 1e-6, "score {s}");
    }
    for (imr, eta) in fit.imr.iter().zip(&fit.linear_predictor) {
        assert_eq!(*imr, inverse_mills(*eta));
        assert!(*imr > 0.0);
    }
}

#[test]
fn separation_names_the_column() {
    let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| (*v >= 20.0) as u8 as f64).collect();
    let d = design(y, &[("cut", x)], (0..40).collect());
    match probit_fit(&d, FitOptions::default()) {
        Err(Error::Separation(col)) => assert_eq!(col, "cut"),
        other => panic!("expected separation, got {other:?}"),
    }
    let ones = design(vec![1.0; 10], &[], (0..10).collect());
    assert!(matches!(probit_fit(&ones, FitOptions::default()), Err(Error::SingleClassResponse)));
}

#[test]
fn inverse_mills_analytics() {
    assert!((inverse_mills(0.0) - 0.797_884_560_8).abs() < 1e-9);
    assert!((inverse_mills(1.0) - 0.287_600).abs() < 1e-6);
    assert!(inverse_mills(10.0) < 1e-20);
    for k in 0..=335 {
        let z = -300.0 + k as f64;
        let v = inverse_mills(z);
        assert!(v.is_finite() && v > 0.0, "lambda({z}) = {v}");
    }
    let mut last = f64::INFINITY;
    for k in 0..=70_000 {
        let z = -35.0 + k as f64 * 1e-3;
        let v = inverse_mills(z);
        assert!(v > 0.0 && v < last, "not decreasing at {z}");
        last = v;
    }
    for k in 0..=295 {
        let z = -5.0 - k as f64;
        assert!((inverse_mills(z) / -z - 1.0).abs() < 0.2, "tail at {z}");
    }
}

fn selection_fit(keys_from: &patflow::gravity::DesignMatrix, imr: Vec<f64>) -> SelectionFit {
    let n = keys_from.n_obs();
    SelectionFit {
        names: vec!["const".into()],
        gamma: vec![0.0],
        covariance: DMatrix::zeros(1, 1),
        se: vec![0.0],
        converged: true,
        iterations: 1,
        log_likelihood: 0.0,
        n_obs: n,
        linear_predictor: vec![0.0; n],
        imr,
        keys: keys_from.keys.clone(),
        pruned: vec![],
        warnings: vec![],
    }
}

#[test]
fn second_stage_preconditions() {
    let x: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
    let y: Vec<f64> = (0..30).map(|i| 1.0 + (i % 4) as f64).collect();
    let positive = design(y.clone(), &[("x", x.clone())], (0..30).collect());

    let flat = selection_fit(&positive, vec![0.5; 30]);
    match heckman_second_stage(&positive, &flat, FitOptions::default()) {
        Err(Error::Collinear(col)) => assert_eq!(col, IMR_COLUMN),
        other => panic!("expected collinear IMR, got {other:?}"),
    }

    let mut with_zero = y;
    with_zero[4] = 0.0;
    let bad = design(with_zero, &[("x", x)], (0..30).collect());
    let varied = selection_fit(&bad, (0..30).map(|i| 0.1 + i as f64 / 30.0).collect());
    assert!(matches!(
        heckman_second_stage(&bad, &varied, FitOptions::default()),
        Err(Error::ZeroInPositiveSubset(5))
    ));
}

#[test]
fn null_selection_leaves_outcome_slopes_alone() {
    let truth = default_selection();
    let synth = gen_panel(3, &default_beta(), 20, 5, Some(&truth)).unwrap();
    let rows = synth.panel(&PanelOptions::default()).unwrap().rows;
    // the gate loads on colonial ties and religion, which the outcome leaves out
    let outcome = DesignSpec::custom(
        default_beta().keys().filter_map(|k| Regressor::from_name(k)).collect(),
        true,
    );
    let h = heckman_two_step(
        &rows,
        &DesignSpec::first_stage(),
        &outcome,
        DEFAULT_OFFSET,
        ClusterOrientation::Ordered,
        FitOptions::default(),
    )
    .unwrap();
    let delta = h.corrected.coefficient(IMR_COLUMN).unwrap();
    let delta_se = h.corrected.se_of(IMR_COLUMN).unwrap();
    assert!(delta.abs() < 3.0 * delta_se, "delta {delta} se {delta_se}");
    for r in &outcome.regressors {
        let name = r.name();
        let (Some(a), Some(b)) = (h.corrected.coefficient(name), h.uncorrected.coefficient(name)) else {
            continue;
        };
        let se = h.uncorrected.se_of(name).unwrap();
        assert!((a - b).abs() < 3.0 * se, "{name}: {a} vs {b}");
    }
    assert_eq!(h.corrected.names.len(), h.uncorrected.names.len() + 1);
    assert!(h.selection.converged);
}
