//! Motor-imagery EEG experiment engine.
//!
//! The crate compiles key-value model specifications into small sequential
//! CNNs (EEGNet being the reference configuration), trains them with a
//! from-scratch backpropagation stack, runs a filter-bank CSP baseline, and
//! evaluates both under subject-dependent, mixed, leave-one-subject-out and
//! train/validation/test subject splits.
//!
//! Module map:
//!
//! * [`nn`]: tensors, layer kernels with hand-written backward passes, NLL
//!   loss, Adam, the training loop and a finite-difference gradient checker.
//! * [`builder`]: the spec file format, validation, flatten inference and
//!   model construction.
//! * [`signal`]: Butterworth band-pass design, zero-phase filtering,
//!   polyphase resampling, EMA standardization and filter banks.
//! * [`fbcsp`]: CSP, log-variance features, mutual-information selection,
//!   regularized LDA and the one-vs-rest classifier.
//! * [`dataio`]: the `EEGT` trial container, windowing and the synthetic
//!   band-power generator.
//! * [`evaluation`]: split plans, repeated experiments, paired t-test and
//!   table rendering.

pub mod builder;
pub mod dataio;
pub mod error;
pub mod evaluation;
pub mod fbcsp;
pub mod nn;
pub mod seed;
pub mod signal;

pub use builder::{build_model, validate_spec, BuildReport, ModelSpec};
pub use dataio::{Session, TrialSet};
pub use error::{Error, Result};
pub use evaluation::{ResultsTable, Scheme, SplitPlan};
pub use fbcsp::{FbcspConfig, FbcspModel};
pub use nn::{Model, Mode, Real, Tensor, TrainConfig, TrainReport};
