use std::collections::HashMap;

use serde::Serialize;

use super::probit::{probit_fit, SelectionFit};
use crate::error::{Error, Result};
use crate::gravity::{
    clustered_se, ppml_fit, transform_covariates, ClusterOrientation, DesignMatrix, DesignSpec,
    DyadKey, DyadObservation, FitOptions, FitResult,
};

pub const IMR_COLUMN: &str = "imr";

/// PPML on the positive-flow rows with the first-stage inverse Mills ratio
/// as an extra regressor. Its coefficient (`imr`) is the selection term.
pub fn heckman_second_stage(positive: &DesignMatrix, selection: &SelectionFit, opts: FitOptions) -> Result<FitResult> {
    if let Some(r) = positive.y.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroInPositiveSubset(r + 1));
    }
    let by_key: HashMap<&DyadKey, f64> = selection.keys.iter().zip(&selection.imr).map(|(k, v)| (k, *v)).collect();
    let imr: Vec<f64> = positive
        .keys
        .iter()
        .map(|k| by_key.get(k).copied().ok_or_else(|| Error::MissingImr(k.to_string())))
        .collect::<Result<_>>()?;
    if imr.iter().all(|&v| v == imr[0]) {
        return Err(Error::Collinear(IMR_COLUMN.into()));
    }
    let design = positive.with_column(IMR_COLUMN, &imr);
    let fit = ppml_fit(&design, opts)?;
    if fit.pruned.iter().any(|n| n == IMR_COLUMN) {
        return Err(Error::Collinear(IMR_COLUMN.into()));
    }
    clustered_se(&fit, &design)
}

#[derive(Debug, Clone, Serialize)]
pub struct HeckmanResult {
    pub selection: SelectionFit,
    /// IMR-augmented fit on the positive subsample.
    pub corrected: FitResult,
    /// Same layout without the IMR, on the same subsample.
    pub uncorrected: FitResult,
}

/// Both steps: probit on `1{citations > 0}` over the full panel using
/// `first_stage`, then the IMR-augmented PPML with `outcome` on positive rows.
pub fn heckman_two_step(
    panel: &[DyadObservation],
    first_stage: &DesignSpec,
    outcome: &DesignSpec,
    offset: f64,
    orientation: ClusterOrientation,
    opts: FitOptions,
) -> Result<HeckmanResult> {
    let z = transform_covariates(panel, offset, first_stage, orientation)?.binary_response();
    let selection = probit_fit(&z, opts)?;
    let full = transform_covariates(panel, offset, outcome, orientation)?;
    let positive = full.filter_rows(|r| full.y[r] > 0.0);
    let corrected = heckman_second_stage(&positive, &selection, opts)?;
    let uncorrected = clustered_se(&ppml_fit(&positive, opts)?, &positive)?;
    Ok(HeckmanResult {
        selection,
        corrected,
        uncorrected,
    })
}
