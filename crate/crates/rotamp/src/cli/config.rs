use crate::amp_engine::CumulantSource;
use crate::ensembles::{InstanceKind, Prior, RotationKind};
use crate::spectra::{SamplingMode, SpectralLaw};
use crate::state_evolution::PicardOptions;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

fn default_epsilon() -> f64 {
    0.3
}

fn default_prior() -> Prior {
    Prior::Rademacher {}
}

fn default_replicates() -> usize {
    1
}

fn default_order() -> usize {
    8
}

fn default_series_order() -> usize {
    120
}

/// One experiment, read from a single JSON document. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: InstanceKind,
    /// Side length of a symmetric matrix, or number of columns of a rectangular one.
    #[serde(default)]
    pub n: Option<usize>,
    /// Number of rows of a rectangular matrix.
    #[serde(default)]
    pub m: Option<usize>,
    /// Aspect ratio `m/n`; taken from the dimensions when both are present.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_prior")]
    pub prior: Prior,
    /// Prior of `v*`; defaults to `prior`.
    #[serde(default)]
    pub prior_v: Option<Prior>,
    #[serde(default)]
    pub law: Option<SpectralLaw>,
    #[serde(default)]
    pub sampling: SamplingMode,
    #[serde(default)]
    pub rotation: RotationKind,
    /// Number of AMP steps.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cumulant_source: CumulantSource,
    /// Highest moment order reported by the `cumulants` command.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Number of cumulants used for series transforms in fixed points and baselines.
    #[serde(default = "default_series_order")]
    pub series_order: usize,
    /// Moments given inline (`m_1..m_K`, or `m_2, m_4, ..` for rectangular kinds).
    #[serde(default)]
    pub moments: Option<Vec<f64>>,
    /// File of whitespace- or comma-separated moments, as for `moments`.
    #[serde(default)]
    pub moments_file: Option<PathBuf>,
    #[serde(default)]
    pub picard: PicardOptions,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// Invalid or incomplete configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks that every present numeric field is in range.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => bad(format!("{name} must be positive, got {x}")),
            _ => Ok(()),
        };
        positive("alpha", self.alpha)?;
        positive("gamma", self.gamma)?;
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad(format!("epsilon must lie in (0, 1], got {}", self.epsilon));
        }
        for (name, v) in [("n", self.n), ("m", self.m)] {
            if let Some(x) = v {
                if x < 2 {
                    return bad(format!("{name} must be at least 2, got {x}"));
                }
            }
        }
        if self.steps == Some(0) {
            return bad("steps must be at least 1");
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.order == 0 || self.series_order < 2 {
            return bad("order and series_order must be positive");
        }
        if let (Some(m), Some(n), Some(g)) = (self.m, self.n, self.gamma) {
            if (m as f64 / n as f64 - g).abs() > 1e-12 {
                return bad(format!("gamma = {g} disagrees with m/n = {m}/{n}"));
            }
        }
        let p = &self.picard;
        if !(p.damping > 0.0 && p.damping <= 1.0 && p.tol > 0.0 && p.max_iter > 0) {
            return bad("picard options out of range");
        }
        self.prior.validate().map_err(|e| ConfigError(format!("prior: {e}")))?;
        if let Some(pv) = &self.prior_v {
            pv.validate().map_err(|e| ConfigError(format!("prior_v: {e}")))?;
        }
        if let Some(law) = &self.law {
            law.validate().map_err(|e| ConfigError(format!("law: {e}")))?;
        }
        Ok(())
    }

    pub fn require_alpha(&self) -> Result<f64, ConfigError> {
        self.alpha.map_or_else(|| bad("alpha is required"), Ok)
    }

    pub fn require_steps(&self) -> Result<usize, ConfigError> {
        self.steps.map_or_else(|| bad("steps is required"), Ok)
    }

    pub fn require_law(&self) -> Result<&SpectralLaw, ConfigError> {
        self.law.as_ref().map_or_else(|| bad("law is required"), Ok)
    }

    pub fn require_n(&self) -> Result<usize, ConfigError> {
        self.n.map_or_else(|| bad("n is required"), Ok)
    }

    pub fn require_m(&self) -> Result<usize, ConfigError> {
        self.m.map_or_else(|| bad("m is required for rectangular experiments"), Ok)
    }

    /// Aspect ratio from `gamma` or `m/n`.
    pub fn aspect(&self) -> Result<f64, ConfigError> {
        match (self.gamma, self.m, self.n) {
            (Some(g), _, _) => Ok(g),
            (None, Some(m), Some(n)) => Ok(m as f64 / n as f64),
            _ => bad("rectangular experiments need gamma or both m and n"),
        }
    }

    pub fn prior_v(&self) -> &Prior {
        self.prior_v.as_ref().unwrap_or(&self.prior)
    }
}
