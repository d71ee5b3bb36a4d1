//! Dataset generation on top of `sporegen-core`: JSON configs, the frame
//! loop with PNG export and manifest, dataset verification, sampler
//! goodness-of-fit checks and the `sporegen` command line.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod gof;
pub mod verify;

pub use config::{load_config, SimulationConfig};
pub use dataset::{generate_dataset, EntityAnnotation, FrameRecord, Manifest};
pub use error::{ConfigError, DatasetError, VerifyError};
pub use verify::{verify_dataset, VerificationReport};
