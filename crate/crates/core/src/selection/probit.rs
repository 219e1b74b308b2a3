use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::normal::{inverse_mills, ln_cdf};
use crate::error::{Error, Result};
use crate::gravity::{prune, DesignMatrix, DyadKey, FitOptions};
use crate::{linalg, par};

/// Diagonal ridge added when the probit information matrix is not
/// positive definite.
const RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionFit {
    pub names: Vec<String>,
    pub gamma: Vec<f64>,
    #[serde(skip)]
    pub covariance: DMatrix<f64>,
    pub se: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub n_obs: usize,
    /// `phi(z)/Phi(z)` at the fitted index, one per design row.
    pub imr: Vec<f64>,
    pub linear_predictor: Vec<f64>,
    pub keys: Vec<DyadKey>,
    pub pruned: Vec<String>,
    pub warnings: Vec<String>,
}

impl SelectionFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.gamma[i])
    }

    pub fn se_of(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.se[i])
    }
}

fn log_likelihood(y: &[f64], eta: &[f64]) -> f64 {
    par::map_blocks(y.len(), par::BLOCK_ROWS, |r| {
        r.map(|i| ln_cdf((2.0 * y[i] - 1.0) * eta[i])).sum::<f64>()
    })
    .into_iter()
    .sum()
}

/// A single column that splits the two classes without overlap.
fn separating_column(x: &DMatrix<f64>, y: &[f64], names: &[String]) -> Option<String> {
    for j in 0..x.ncols() {
        let col = x.column(j);
        let (mut lo0, mut hi0, mut lo1, mut hi1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (v, &t) in col.iter().zip(y) {
            if t > 0.5 {
                lo1 = lo1.min(*v);
                hi1 = hi1.max(*v);
            } else {
                lo0 = lo0.min(*v);
                hi0 = hi0.max(*v);
            }
        }
        if hi0 < lo1 || hi1 < lo0 {
            return Some(names[j].clone());
        }
    }
    None
}

/// Probit maximum likelihood by Newton iterations with step-halving. The
/// response must be 0/1 with both classes present.
pub fn probit_fit(design: &DesignMatrix, opts: FitOptions) -> Result<SelectionFit> {
    let y = &design.y;
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::SingleClassResponse);
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::SingleClassResponse);
    }
    let (columns, pruned) = prune(design);
    let warnings: Vec<String> = pruned
        .iter()
        .map(|n| format!("column `{n}` is collinear and was pruned"))
        .collect();
    let x = design.x.select_columns(&columns);
    let names: Vec<String> = columns.iter().map(|&j| design.names[j].clone()).collect();
    if let Some(col) = separating_column(&x, y, &names) {
        return Err(Error::Separation(col));
    }
    let k = x.ncols();
    let q: Vec<f64> = y.iter().map(|&v| 2.0 * v - 1.0).collect();

    let mut gamma = DVector::zeros(k);
    let mut eta = vec![0.0; y.len()];
    let mut ll = log_likelihood(y, &eta);
    let mut converged = false;
    let mut iterations = 0;
    let mut last_step = DVector::zeros(k);

    while iterations < opts.max_iter {
        iterations += 1;
        let lam: Vec<f64> = eta.iter().zip(&q).map(|(e, s)| inverse_mills(s * e)).collect();
        let score: Vec<f64> = lam.iter().zip(&q).map(|(l, s)| s * l).collect();
        let weight: Vec<f64> = lam
            .iter()
            .zip(eta.iter().zip(&q))
            .map(|(l, (e, s))| l * (l + s * e))
            .collect();
        let grad = linalg::xt_vec(&x, &score);
        let info = linalg::weighted_gram(&x, &weight);
        let step = linalg::solve_spd(&info, &grad, RIDGE, "probit information matrix")?;

        let mut scale = 1.0;
        let (cand, cand_eta, cand_ll) = loop {
            let cand = &gamma + &step * scale;
            let cand_eta = linalg::mul_vec(&x, &cand);
            let cand_ll = log_likelihood(y, &cand_eta);
            if cand_ll.is_finite() && (cand_ll >= ll - 1e-12 * ll.abs() || scale < 1e-10) {
                break (cand, cand_eta, cand_ll);
            }
            scale *= 0.5;
        };
        last_step = &cand - &gamma;
        gamma = cand;
        eta = cand_eta;
        ll = cand_ll;
        if last_step.amax() < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        // a diverging coefficient with a likelihood that keeps rising is the
        // signature of (quasi-)separation
        let worst = last_step.iamax();
        return Err(Error::Separation(names[worst].clone()));
    }

    let lam: Vec<f64> = eta.iter().zip(&q).map(|(e, s)| inverse_mills(s * e)).collect();
    let weight: Vec<f64> = lam
        .iter()
        .zip(eta.iter().zip(&q))
        .map(|(l, (e, s))| l * (l + s * e))
        .collect();
    let covariance = linalg::inverse_spd(&linalg::weighted_gram(&x, &weight), "probit information matrix")?;
    Ok(SelectionFit {
        se: (0..k).map(|i| covariance[(i, i)].max(0.0).sqrt()).collect(),
        names,
        gamma: gamma.iter().copied().collect(),
        covariance,
        converged,
        iterations,
        log_likelihood: ll,
        n_obs: y.len(),
        imr: eta.iter().map(|&e| inverse_mills(e)).collect(),
        linear_predictor: eta,
        keys: design.keys.clone(),
        pruned,
        warnings,
    })
}
