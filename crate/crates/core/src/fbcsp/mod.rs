//! Filter-bank common spatial patterns with mutual-information feature
//! selection and a regularized LDA, reduced to multiclass one-vs-rest.
//!
//! Fitting uses no randomness: the same training set always yields the
//! same model.

mod covariance;
mod csp;
mod lda;
mod mi;
mod model;

pub use covariance::trial_covariance;
pub use csp::{csp_features, csp_fit, CspModel};
pub use lda::{lda_fit, lda_posterior, Lda};
pub use mi::{mibif_select, mutual_information};
pub use model::{
    band_covariances, fbcsp_fit, ovr_fit, ovr_predict, BinaryFbcsp, FbcspConfig, FbcspHead, FbcspModel, MODEL_MAGIC,
};
