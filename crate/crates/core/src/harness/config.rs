//! Sweep configuration, read from TOML.
//!
//! ```toml
//! n_list = [20, 30, 40]
//! beta = 2
//! r = 2
//! realizations = 20
//! seed = 7
//! output = "runs/gap"
//! observables = ["spectrum", "steady"]
//! store_eigenvalues = false
//!
//! [grid]
//! parameter = "geff"   # or "g"
//! min = 0.01
//! max = 100.0
//! points = 21
//! spacing = "log"      # or "linear"; alternatively `values = [...]`
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensembles::{g_from_geff, geff_from_g, Beta, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridParameter {
    Geff,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub parameter: GridParameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
    /// Explicit values; overrides `min`, `max`, `points`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl GridSpec {
    pub fn geff(values: Vec<f64>) -> Self {
        GridSpec { parameter: GridParameter::Geff, min: None, max: None, points: None, spacing: Spacing::Log, values: Some(values) }
    }

    pub fn geff_range(min: f64, max: f64, points: usize) -> Self {
        GridSpec { parameter: GridParameter::Geff, min: Some(min), max: Some(max), points: Some(points), spacing: Spacing::Log, values: None }
    }

    /// The grid values, validated: non-empty, positive, strictly increasing.
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match &self.values {
            Some(v) => v.clone(),
            None => {
                let (lo, hi, k) = match (self.min, self.max, self.points) {
                    (Some(lo), Some(hi), Some(k)) => (lo, hi, k),
                    _ => return Err(Error::Config("grid needs `values` or all of `min`, `max`, `points`".into())),
                };
                if k == 0 {
                    return Err(Error::Config("grid needs at least one point".into()));
                }
                if k == 1 {
                    vec![lo]
                } else {
                    (0..k)
                        .map(|i| {
                            let t = i as f64 / (k - 1) as f64;
                            match self.spacing {
                                Spacing::Log => (lo.ln() + t * (hi.ln() - lo.ln())).exp(),
                                Spacing::Linear => lo + t * (hi - lo),
                            }
                        })
                        .enumerate()
                        // pin the endpoints exactly
                        .map(|(i, x)| if i == 0 { lo } else if i == k - 1 { hi } else { x })
                        .collect()
                }
            }
        };
        if v.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Config("grid values must be positive and finite".into()));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("grid must be strictly increasing".into()));
        }
        Ok(v)
    }
}

/// What each realization computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// Full spectrum and its summary (R, X, Y, gap).
    Spectrum,
    /// Steady state, purity, effective Hamiltonian and spacing ratios.
    Steady,
}

fn default_observables() -> Vec<Observable> {
    vec![Observable::Spectrum, Observable::Steady]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub beta: Beta,
    pub r: usize,
    pub grid: GridSpec,
    pub realizations: usize,
    pub seed: u64,
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    /// Keep every eigenvalue in the records (needed for scatter and cut
    /// reports).
    #[serde(default)]
    pub store_eigenvalues: bool,
    /// Worker threads; 0 picks the machine default. Overridden by the
    /// `RANDLINDBLAD_WORKERS` environment variable.
    #[serde(default)]
    pub workers: usize,
    pub output: PathBuf,
}

impl SweepConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Whether `other` describes the same computation. Worker count and
    /// output location do not change results.
    pub fn same_sweep(&self, other: &SweepConfig) -> Result<bool> {
        let strip = |c: &SweepConfig| {
            let mut c = c.clone();
            c.workers = 0;
            c.output = PathBuf::new();
            c.to_toml_string()
        };
        Ok(strip(self)? == strip(other)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list is empty".into()));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("n_list must be strictly increasing".into()));
        }
        if self.n_list[0] < 2 {
            return Err(Error::Config("N must be at least 2".into()));
        }
        if self.r < 1 {
            return Err(Error::Config("r must be at least 1".into()));
        }
        if self.realizations < 1 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if self.observables.is_empty() {
            return Err(Error::Config("no observables requested".into()));
        }
        self.grid.values()?;
        Ok(())
    }

    pub fn records(&self, obs: Observable) -> bool {
        self.observables.contains(&obs)
    }

    /// `(g, g_eff)` of grid point `point` at size `n`.
    pub fn couplings(&self, n: usize, value: f64) -> (f64, f64) {
        match self.grid.parameter {
            GridParameter::Geff => (g_from_geff(value, n, self.beta, self.r), value),
            GridParameter::G => (value, geff_from_g(value, n, self.beta, self.r)),
        }
    }

    pub fn params(&self, n: usize, value: f64) -> Result<ModelParams> {
        let (g, _) = self.couplings(n, value);
        ModelParams::new(n, self.beta, self.r, g)
    }
}
