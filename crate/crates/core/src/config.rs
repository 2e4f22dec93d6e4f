//! Project-level settings shared by every workflow.

use serde::{Deserialize, Serialize};

use crate::agreement::AgreementMetric;
use crate::distribution::ResourceSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectConfig {
    pub annotators: Vec<String>,
    #[serde(default)]
    pub metric: AgreementMetric,
    #[serde(default = "default_alpha")]
    pub reliability_alpha: f64,
    #[serde(default = "default_overlap")]
    pub overlap_threshold: usize,
    pub distribution: ResourceSpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_alpha() -> f64 {
    0.5
}

fn default_overlap() -> usize {
    15
}

impl ProjectConfig {
    pub fn validate(&self) -> Result<()> {
        let mut names: Vec<&String> = self.annotators.iter().collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::AnnotatorCollision(w[0].clone()));
        }
        if !(0.0..=1.0).contains(&self.reliability_alpha) {
            return Err(Error::InvalidConfig(format!("reliability_alpha {} outside [0, 1]", self.reliability_alpha)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }
}
