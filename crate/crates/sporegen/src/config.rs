//! JSON run configuration.
//!
//! A config file is a partial document: whatever it sets is merged over
//! [`SimulationConfig::default`] and the result is deserialized strictly
//! (unknown keys are rejected) and validated. `{}` is therefore the full
//! default configuration.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "total_frames": 100,
//!   "lifecycle": { "initial_spores": 200, "jitter": { "law": "uniform", "half_range": 0.01 } },
//!   "morphology": { "mycelium": { "mean_sub_branches": 3.5 } },
//!   "environment": { "temperature_sigma": 0.1 },
//!   "render": { "width": 512, "height": 512 }
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sporegen_core::{EnvironmentParams, LifecycleParams, MorphologyParams, RenderOptions};

use crate::error::ConfigError;

/// Hard ceiling on segments drawn in one frame.
pub const MAX_SEGMENT_BUDGET: usize = 1_000_000;

pub const MAX_TOTAL_FRAMES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub seed: u64,
    pub total_frames: usize,
    /// Where frames and the manifest go. Not echoed into manifests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub segment_budget: usize,
    pub lifecycle: LifecycleParams,
    pub morphology: MorphologyParams,
    pub environment: EnvironmentParams,
    pub render: RenderOptions,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            total_frames: 100,
            output_dir: None,
            segment_budget: MAX_SEGMENT_BUDGET,
            lifecycle: LifecycleParams::default(),
            morphology: MorphologyParams::default(),
            environment: EnvironmentParams::default(),
            render: RenderOptions::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.total_frames < 2 {
            return Err(ConfigError::invalid("total_frames", "must be >= 2"));
        }
        if self.total_frames > MAX_TOTAL_FRAMES {
            return Err(ConfigError::invalid("total_frames", "must be <= 1000000"));
        }
        if self.segment_budget == 0 || self.segment_budget > MAX_SEGMENT_BUDGET {
            return Err(ConfigError::invalid(
                "segment_budget",
                "must lie in [1, 1000000]",
            ));
        }
        section("lifecycle", self.lifecycle.validate())?;
        if !(self.morphology.base_length.is_finite() && self.morphology.base_length > 0.0) {
            return Err(ConfigError::invalid(
                "morphology.base_length",
                "must be positive",
            ));
        }
        section("morphology.hypha", self.morphology.hypha.validate())?;
        section("morphology.mycelium", self.morphology.mycelium.validate())?;
        section("environment", self.environment.validate())?;
        section("render", self.render.validate())
    }

    /// Parses a config document from a string (see the module docs).
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_json_str_at(text, Path::new("<inline>"))
    }

    fn from_json_str_at(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let patch: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if !patch.is_object() {
            return Err(ConfigError::Field {
                path: path.to_path_buf(),
                field: ".".into(),
                message: "config must be a JSON object".into(),
            });
        }
        let mut merged = serde_json::to_value(Self::default()).expect("default config serializes");
        merge(&mut merged, patch);
        let config: Self =
            serde_path_to_error::deserialize(merged).map_err(|e| ConfigError::Field {
                path: path.to_path_buf(),
                field: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Reads, merges over defaults, and validates the config at `path`.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimulationConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SimulationConfig::from_json_str_at(&text, path)
}

fn section(prefix: &str, result: sporegen_core::Result<()>) -> Result<(), ConfigError> {
    result.map_err(|e| match e {
        sporegen_core::Error::InvalidParameter { name, reason } => ConfigError::Invalid {
            field: format!("{prefix}.{name}"),
            reason: reason.to_string(),
        },
        other => ConfigError::Invalid {
            field: prefix.to_string(),
            reason: other.to_string(),
        },
    })
}

/// Recursive object merge. A tagged object whose `law` changes replaces the
/// base instead of merging into it, so switching jitter laws does not carry
/// over the old law's fields.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(base), Value::Object(patch)) => {
            if let (Some(a), Some(b)) = (base.get("law"), patch.get("law")) {
                if a != b {
                    *base = patch;
                    return;
                }
            }
            for (key, value) in patch {
                match base.get_mut(&key) {
                    Some(slot) => merge(slot, value),
                    None => {
                        base.insert(key, value);
                    }
                }
            }
        }
        (slot, patch) => *slot = patch,
    }
}
