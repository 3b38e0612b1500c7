//! Trial containers, windowing, preprocessing and synthetic data.

mod container;
mod csvconv;
mod pipeline;
mod synth;
mod trialset;

pub use container::{read_container, read_container_from, write_container, write_container_to, CONTAINER_MAGIC, CONTAINER_VERSION};
pub use csvconv::convert_csv;
pub use pipeline::{extract_window, Preprocess, DEFAULT_WINDOW};
pub use synth::{synth_mi, SynthConfig};
pub use trialset::{Session, TrialSet, MAX_CLASSES};
