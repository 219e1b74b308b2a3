//! Two-step selection correction: probit link-formation model, inverse Mills
//! ratio, and an IMR-augmented PPML on the positive-flow subsample.

mod heckman;
mod normal;
mod probit;

pub use heckman::{heckman_second_stage, heckman_two_step, HeckmanResult, IMR_COLUMN};
pub use normal::{cdf as normal_cdf, inverse_mills, ln_cdf as normal_ln_cdf, pdf as normal_pdf};
pub use probit::{probit_fit, SelectionFit};
