use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::{linalg, par};

/// Relative tolerance below which a column counts as collinear with the
/// columns before it.
pub const COLLINEARITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CovarianceKind {
    /// Inverse Fisher information under the Poisson variance.
    Model,
    /// Cluster-robust sandwich with `G/(G-1)` correction.
    Clustered,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    #[serde(skip)]
    pub covariance: DMatrix<f64>,
    pub se: Vec<f64>,
    pub covariance_kind: CovarianceKind,
    pub clusters: Option<usize>,
    pub pseudo_r2: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub n_obs: usize,
    pub deviance: f64,
    /// Deviance after each accepted iteration.
    pub trace: Vec<f64>,
    /// Design columns used, in order; parallel to `names`.
    pub columns: Vec<usize>,
    pub pruned: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub fitted: Vec<f64>,
}

impl FitResult {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn se_of(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.se[i])
    }

    /// Design restricted to the columns this fit kept.
    pub(crate) fn kept_x(&self, design: &DesignMatrix) -> DMatrix<f64> {
        design.x.select_columns(&self.columns)
    }
}

/// Poisson deviance contribution; zero counts contribute `2 mu`.
fn unit_deviance(y: f64, mu: f64) -> f64 {
    let a = if y > 0.0 { y * (y / mu).ln() } else { 0.0 };
    2.0 * (a - (y - mu))
}

fn deviance(y: &[f64], mu: &[f64]) -> f64 {
    par::map_blocks(y.len(), par::BLOCK_ROWS, |r| {
        r.map(|i| unit_deviance(y[i], mu[i])).sum::<f64>()
    })
    .into_iter()
    .sum()
}

fn means(x: &DMatrix<f64>, beta: &DVector<f64>) -> Vec<f64> {
    linalg::mul_vec(x, beta)
        .into_iter()
        .map(|eta| eta.min(700.0).exp())
        .collect()
}

/// Drop columns collinear with earlier ones; the names of dropped columns
/// are returned.
pub(crate) fn prune(design: &DesignMatrix) -> (Vec<usize>, Vec<String>) {
    let keep = linalg::independent_columns(&design.x, COLLINEARITY_TOL);
    let pruned = (0..design.x.ncols())
        .filter(|j| !keep.contains(j))
        .map(|j| design.names[j].clone())
        .collect();
    (keep, pruned)
}

/// Poisson pseudo-maximum likelihood by iteratively reweighted least squares
/// (Newton steps on the Poisson score with step-halving on deviance
/// increase). Collinear columns are pruned first with a warning.
pub fn ppml_fit(design: &DesignMatrix, opts: FitOptions) -> Result<FitResult> {
    let y = &design.y;
    if y.is_empty() {
        return Err(Error::EmptyInput("empty design"));
    }
    if let Some((r, v)) = y.iter().enumerate().find(|(_, v)| **v < 0.0 || !v.is_finite()) {
        return Err(Error::NegativeCovariate { row: r + 1, column: "response".into(), value: *v });
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(Error::AllZeroResponse);
    }

    let (columns, pruned) = prune(design);
    let warnings: Vec<String> = pruned
        .iter()
        .map(|n| format!("column `{n}` is collinear and was pruned"))
        .collect();
    let x = design.x.select_columns(&columns);
    let names: Vec<String> = columns.iter().map(|&j| design.names[j].clone()).collect();
    let k = x.ncols();

    let mean_y = y.iter().sum::<f64>() / y.len() as f64;
    let mut beta = DVector::zeros(k);
    if let Some(c) = names.iter().position(|n| n == "const") {
        beta[c] = (mean_y + design.offset).ln();
    }
    let mut mu = means(&x, &beta);
    let mut dev = deviance(y, &mu);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;

    while iterations < opts.max_iter {
        iterations += 1;
        let resid: Vec<f64> = y.iter().zip(&mu).map(|(a, b)| a - b).collect();
        let grad = linalg::xt_vec(&x, &resid);
        let hess = linalg::weighted_gram(&x, &mu);
        let step = linalg::solve_spd(&hess, &grad, 1e-8, "PPML information matrix")?;

        let mut scale = 1.0;
        let (new_beta, new_mu, new_dev) = loop {
            let cand = &beta + &step * scale;
            let cand_mu = means(&x, &cand);
            let cand_dev = deviance(y, &cand_mu);
            if cand_dev.is_finite() && (cand_dev <= dev * (1.0 + 1e-12) || scale < 1e-10) {
                break (cand, cand_mu, cand_dev);
            }
            scale *= 0.5;
        };
        last_step = (&new_beta - &beta).amax();
        let rel_dev = (dev - new_dev).abs() / (new_dev.abs() + 0.1);
        beta = new_beta;
        mu = new_mu;
        dev = new_dev;
        trace.push(dev);
        if last_step < opts.tol || rel_dev < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations, last_step, trace });
    }

    let covariance = linalg::inverse_spd(&linalg::weighted_gram(&x, &mu), "PPML information matrix")?;
    let se = (0..k).map(|i| covariance[(i, i)].max(0.0).sqrt()).collect();
    let mut fit = FitResult {
        names,
        coefficients: beta.iter().copied().collect(),
        covariance,
        se,
        covariance_kind: CovarianceKind::Model,
        clusters: None,
        pseudo_r2: None,
        iterations,
        converged,
        n_obs: y.len(),
        deviance: dev,
        trace,
        columns,
        pruned,
        warnings,
        fitted: mu,
    };
    fit.pseudo_r2 = super::inference::pseudo_r2(&fit, design);
    Ok(fit)
}
