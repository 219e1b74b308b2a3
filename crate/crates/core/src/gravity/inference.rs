use nalgebra::{DMatrix, DVector};

use super::design::DesignMatrix;
use super::ppml::{CovarianceKind, FitResult};
use crate::error::{Error, Result};
use crate::{linalg, par};

/// Per-cluster score sums, in cluster-index order.
pub(crate) fn cluster_scores(x: &DMatrix<f64>, resid: &[f64], clusters: &[usize], g: usize) -> Vec<DVector<f64>> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); g];
    for (r, &c) in clusters.iter().enumerate() {
        members[c].push(r);
    }
    par::map(&members, |rows| {
        let mut s = DVector::zeros(x.ncols());
        for &r in rows {
            s.axpy(resid[r], &x.row(r).transpose(), 1.0);
        }
        s
    })
}

/// Sandwich `G/(G-1) A^-1 B A^-1` from a bread inverse and per-cluster scores.
pub(crate) fn sandwich(bread_inv: &DMatrix<f64>, scores: &[DVector<f64>]) -> DMatrix<f64> {
    let k = bread_inv.nrows();
    let g = scores.len();
    let parts = par::map_blocks(g, 64, |r| {
        let mut m = DMatrix::zeros(k, k);
        for s in &scores[r] {
            m.ger(1.0, s, s, 1.0);
        }
        m
    });
    let mut meat = DMatrix::zeros(k, k);
    for p in parts {
        meat += p;
    }
    let v = bread_inv * meat * bread_inv * (g as f64 / (g as f64 - 1.0));
    linalg::symmetrize(v)
}

/// Replace the model covariance with the dyad-clustered sandwich.
pub fn clustered_se(fit: &FitResult, design: &DesignMatrix) -> Result<FitResult> {
    let g = design.cluster_labels.len();
    if g <= 1 {
        return Err(Error::SingleCluster);
    }
    let x = fit.kept_x(design);
    let k = x.ncols();
    let bread_inv = linalg::inverse_spd(&linalg::weighted_gram(&x, &fit.fitted), "PPML information matrix")?;
    let resid: Vec<f64> = design.y.iter().zip(&fit.fitted).map(|(y, m)| y - m).collect();
    let scores = cluster_scores(&x, &resid, &design.clusters, g);
    let covariance = sandwich(&bread_inv, &scores);

    let mut out = fit.clone();
    out.se = (0..k).map(|i| covariance[(i, i)].max(0.0).sqrt()).collect();
    out.covariance = covariance;
    out.covariance_kind = CovarianceKind::Clustered;
    out.clusters = Some(g);
    if g <= k {
        out.warnings.push(format!("few clusters: {g} clusters for {k} coefficients"));
    }
    Ok(out)
}

/// Squared sample correlation between the response and fitted means;
/// `None` when the fitted means have no variance.
pub fn pseudo_r2(fit: &FitResult, design: &DesignMatrix) -> Option<f64> {
    let y = &design.y;
    let m = &fit.fitted;
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mm = m.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(m) {
        sxy += (a - my) * (b - mm);
        syy += (a - my) * (a - my);
        sxx += (b - mm) * (b - mm);
    }
    if sxx <= f64::EPSILON * mm * mm * n || syy == 0.0 {
        return None;
    }
    Some(sxy * sxy / (sxx * syy))
}

/// Proportional change in the expected count for a unit change in a
/// regressor: `e^beta - 1`.
pub fn marginal_effect(coefficient: f64) -> f64 {
    coefficient.exp_m1()
}

/// Two-sided normal p-value.
pub fn p_value(estimate: f64, se: f64) -> f64 {
    if !(se > 0.0) {
        return f64::NAN;
    }
    let z = (estimate / se).abs();
    2.0 * crate::selection::normal_cdf(-z)
}

/// `***` p<0.01, `**` p<0.05, `*` p<0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}
