//! Compiles declarative model specifications into trainable [`Model`]s.
//!
//! Building runs in three phases: the convolutional blocks are emitted in
//! list order, the width of the flatten layer is inferred by propagating the
//! input shape through them, and the feed-forward layers are appended.
//!
//! [`Model`]: crate::nn::Model

mod build;
mod format;
mod spec;
mod validate;

pub use build::{build_conv_section, build_model, infer_flatten_dim, BuildReport, LayerInfo};
pub use format::{SpecDocument, SpecValue};
pub use spec::{ModelSpec, PoolingEntry, EEGNET_SPEC};

use crate::error::Violation;

/// `Ok(())` for a valid spec, otherwise every violation found.
pub fn validate_spec(spec: &ModelSpec) -> Result<(), Vec<Violation>> {
    let v = validate::spec_violations(spec);
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}
