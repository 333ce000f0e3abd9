//! Run configuration: defaults, overridden by a TOML file, overridden by
//! flags. The resolved value is echoed into every metadata sidecar.

use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub probs: Vec<f64>,
    /// Schröder series order; adaptive when absent.
    pub m_phi: Option<usize>,
    /// Poincaré series order; adaptive when absent.
    pub m_pi: Option<usize>,
    /// Depth of the PGF iteration for the density.
    pub t_iter: u32,
    /// Depth of the limit oracles.
    pub t_limit: u32,
    /// Generations per simulated tree.
    pub t_sim: u32,
    /// K* samples per period for the Fourier coefficients.
    pub grid: usize,
    /// Rows of the `k0` table.
    pub samples: usize,
    /// Lower end of the x range; max(1e-3, 10·E^-t) when absent.
    pub x_min: Option<f64>,
    pub x_max: f64,
    pub points: usize,
    pub seed: u64,
    /// Number of simulated trees.
    pub n: usize,
    /// "f64" or "f256".
    pub precision: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            probs: Vec::new(),
            m_phi: None,
            m_pi: None,
            t_iter: 12,
            t_limit: 40,
            t_sim: 20,
            grid: 1024,
            samples: 512,
            x_min: None,
            x_max: 2.0,
            points: 200,
            seed: 42,
            n: 100_000,
            precision: "f256".into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }
}
