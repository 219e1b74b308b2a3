//! Dyad-year panel assembly, covariate transforms and PPML gravity fits with
//! dyad-clustered inference.

mod design;
mod inference;
mod panel;
mod ppml;

pub use design::{
    transform_covariates, ClusterOrientation, DesignMatrix, DesignSpec, DyadKey, Regressor,
    DEFAULT_OFFSET,
};
pub use inference::{clustered_se, marginal_effect, p_value, pseudo_r2, stars};
pub use panel::{
    build_panel, build_panel_from, dyad_year_flows, read_bilateral, read_macro, AiStock, BilateralRow,
    DyadObservation, MacroRow, Panel, PanelOptions, ProximityMode,
};
pub use ppml::{ppml_fit, CovarianceKind, FitOptions, FitResult, COLLINEARITY_TOL};
pub(crate) use ppml::prune;

/// PPML fit followed by dyad-clustered standard errors.
pub fn fit_clustered(design: &DesignMatrix, opts: FitOptions) -> crate::Result<FitResult> {
    let fit = ppml_fit(design, opts)?;
    clustered_se(&fit, design)
}
