use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversaries::AdversarySpec;
use crate::error::{Error, Result};
use crate::geometry::{check_dim, Tolerance};
use crate::predictor::InteriorPolicy;

/// Stride used when `trace_every` is not set and `steps ≥ 10⁴`.
pub const DEFAULT_TRACE_EVERY: u64 = 100;

/// One experiment. Serialized as TOML with flat keys followed by an
/// `[adversary]` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub steps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub first_prediction: usize,
    #[serde(default)]
    pub interior_policy: InteriorPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_geom: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_test: Option<f64>,
    /// Subsampling stride for trace rows; the final step is always written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_every: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
    pub adversary: AdversarySpec,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(d: usize, steps: u64, adversary: AdversarySpec) -> Self {
        Self {
            d,
            steps,
            seed: 0,
            replicates: 1,
            first_prediction: 0,
            interior_policy: InteriorPolicy::Uniform,
            eps_geom: None,
            eps_test: None,
            trace_every: None,
            trace: None,
            summary: None,
            adversary,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.d)?;
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if self.trace_every == Some(0) {
            return Err(Error::InvalidConfig("trace_every must be at least 1".into()));
        }
        if self.first_prediction >= self.d {
            return Err(Error::CategoryOutOfRange {
                category: self.first_prediction,
                d: self.d,
            });
        }
        self.tolerance()?;
        self.adversary.validate(self.d)
    }

    pub fn tolerance(&self) -> Result<Tolerance> {
        let base = Tolerance::default();
        Tolerance::new(
            self.eps_geom.unwrap_or(base.eps_geom),
            self.eps_test.unwrap_or(base.eps_test),
        )
    }

    pub fn trace_stride(&self) -> u64 {
        match self.trace_every {
            Some(k) => k,
            None if self.steps >= 10_000 => DEFAULT_TRACE_EVERY,
            None => 1,
        }
    }

    /// Trace path of replicate `index`: the configured path itself for a
    /// single replicate, otherwise `stem.r<index>.ext`.
    pub fn trace_path(&self, index: usize) -> Option<PathBuf> {
        let base = self.trace.as_ref()?;
        if self.replicates == 1 {
            return Some(base.clone());
        }
        let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let name = match base.extension() {
            Some(ext) => format!("{stem}.r{index:03}.{}", ext.to_string_lossy()),
            None => format!("{stem}.r{index:03}"),
        };
        Some(base.with_file_name(name))
    }
}
