//! The JSON configuration document.
//!
//! One object with a required `experiment` section and an optional
//! section per command. Unknown keys are rejected everywhere; error
//! messages carry the dotted path of the offending key.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scaling_limit::{ScalingExperiment, RP_BUMP_WIDTH};

/// Options of `sample`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleOptions {
    /// Fields drawn per scale.
    pub n: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self { n: 100 }
    }
}

/// Options of `charfunc`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharfuncOptions {
    /// Fraction of Gaussian estimates that must fall within 3 stderr of
    /// the closed form.
    pub pass_fraction: f64,
}

impl Default for CharfuncOptions {
    fn default() -> Self {
        Self { pass_fraction: 0.9 }
    }
}

/// Options of `rp-check`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RpCheckOptions {
    /// Cutoff of the sphere-side free-field checks.
    pub sphere_cutoff: usize,
    /// Geodesic width of the hemisphere bumps.
    pub sphere_width: f64,
    /// Width of the positive-time plane bumps.
    pub bump_width: f64,
}

impl Default for RpCheckOptions {
    fn default() -> Self {
        Self {
            sphere_cutoff: 16,
            sphere_width: 0.15,
            bump_width: RP_BUMP_WIDTH,
        }
    }
}

/// Options of `invariance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvarianceOptions {
    /// Fixed cutoff of the covariance drift curve.
    pub drift_cutoff: usize,
}

impl Default for InvarianceOptions {
    fn default() -> Self {
        Self { drift_cutoff: 16 }
    }
}

/// Options of `wick-check`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WickCheckOptions {
    pub cutoff: usize,
    /// Geodesic distance between the two evaluation points.
    pub separation: f64,
}

impl Default for WickCheckOptions {
    fn default() -> Self {
        Self {
            cutoff: 16,
            separation: 0.6,
        }
    }
}

/// Options of `mollifier-info`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MollifierOptions {
    /// Random rotations in the commutation check.
    pub rotations: usize,
    /// Cutoff of the random fields in the commutation check.
    pub probe_cutoff: usize,
}

impl Default for MollifierOptions {
    fn default() -> Self {
        Self {
            rotations: 5,
            probe_cutoff: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ScalingExperiment,
    #[serde(default)]
    pub sample: SampleOptions,
    #[serde(default)]
    pub charfunc: CharfuncOptions,
    #[serde(default)]
    pub rp_check: RpCheckOptions,
    #[serde(default)]
    pub invariance: InvarianceOptions,
    #[serde(default)]
    pub wick_check: WickCheckOptions,
    #[serde(default)]
    pub mollifier_info: MollifierOptions,
}

/// A configuration problem, with the dotted path of the key at fault.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(if path == "." { "<root>".into() } else { path }, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    /// Checks every section; experiment messages already start with the key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Err(e) = self.experiment.validate() {
            let text = match e {
                crate::Error::InvalidArgument(m) => m,
                other => other.to_string(),
            };
            let (key, message) = text.split_once(": ").unwrap_or(("", text.as_str()));
            return Err(ConfigError::new(format!("experiment.{key}"), message));
        }
        if self.sample.n < crate::sampler::MIN_ENSEMBLE_SIZE {
            return Err(ConfigError::new(
                "sample.n",
                format!("must be at least {}", crate::sampler::MIN_ENSEMBLE_SIZE),
            ));
        }
        if !(self.charfunc.pass_fraction > 0.0 && self.charfunc.pass_fraction <= 1.0) {
            return Err(ConfigError::new("charfunc.pass_fraction", "must lie in (0, 1]"));
        }
        if self.rp_check.sphere_cutoff < 2 {
            return Err(ConfigError::new("rp_check.sphere_cutoff", "must be at least 2"));
        }
        for (key, v) in [
            ("rp_check.sphere_width", self.rp_check.sphere_width),
            ("rp_check.bump_width", self.rp_check.bump_width),
            ("wick_check.separation", self.wick_check.separation),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::new(key, format!("must be positive, got {v}")));
            }
        }
        if self.invariance.drift_cutoff < 2 {
            return Err(ConfigError::new("invariance.drift_cutoff", "must be at least 2"));
        }
        if self.wick_check.cutoff < 1 {
            return Err(ConfigError::new("wick_check.cutoff", "must be at least 1"));
        }
        if self.mollifier_info.probe_cutoff < 1 {
            return Err(ConfigError::new("mollifier_info.probe_cutoff", "must be at least 1"));
        }
        Ok(())
    }
}
