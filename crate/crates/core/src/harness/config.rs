use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::algorithms::{AlgoParams, Algorithm};
use crate::compression::{c2_of, CompressorSpec};
use crate::error::{Error, Result};
use crate::ingestion::QSAR_FEATURES;

fn default_p() -> usize {
    QSAR_FEATURES
}
fn default_one() -> f64 {
    1.0
}
fn default_mu() -> f64 {
    0.001
}
fn default_per_agent() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_eig_min() -> f64 {
    1.0
}
fn default_eig_max() -> f64 {
    10.0
}

/// One experiment, as read from JSON.
///
/// `alpha_prime` defaults to `1/L` and `eta` to `min{1/(2C₂), 1}`; both are
/// resolved once the model and compressor are known, see
/// [`ExperimentConfig::algo_params`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(default = "default_p")]
    pub p: usize,
    #[serde(default)]
    pub d: usize,
    /// Master seed for the compression and activation streams.
    #[serde(default)]
    pub seed: u64,
    /// Seed of the pull graph (the push graph uses `graph_seed + 1`).
    /// Defaults to `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_seed: Option<u64>,
    pub algo: Algorithm,
    #[serde(default = "default_compressor")]
    pub compressor: CompressorSpec,
    pub objective: ObjectiveConfig,
    #[serde(default = "default_one")]
    pub gamma: f64,
    #[serde(default = "default_one")]
    pub beta_prime: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub iters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_compressor() -> CompressorSpec {
    CompressorSpec::Identity
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    /// ℓ2-regularized logistic regression.
    Logistic {
        #[serde(default = "default_mu")]
        mu: f64,
        data: DataSource,
    },
    /// Random strongly convex quadratics.
    Quadratic {
        #[serde(default = "default_eig_min")]
        eig_min: f64,
        #[serde(default = "default_eig_max")]
        eig_max: f64,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Synth {
        #[serde(default = "default_per_agent")]
        per_agent: usize,
        #[serde(default)]
        seed: u64,
    },
    File {
        path: PathBuf,
        #[serde(default = "default_true")]
        normalize: bool,
        /// Samples per agent; all rows are used when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        per_agent: Option<usize>,
        #[serde(default)]
        seed: u64,
    },
}

/// Parses and validates a JSON config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.to_string();
        let key = if path == "." {
            // top-level syntax errors have no path; name the offending field if there is one
            msg.strip_prefix("unknown field `")
                .and_then(|rest| rest.split('`').next())
                .unwrap_or(".")
                .to_string()
        } else {
            path
        };
        Error::config(key, msg)
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::config("n", format!("need at least 3 agents, got {}", self.n)));
        }
        if self.p == 0 {
            return Err(Error::config("p", "dimension must be positive"));
        }
        let capacity = self.n * (self.n - 1) - 2 * self.n;
        if self.d > capacity {
            return Err(Error::config(
                "d",
                format!("at most {capacity} extra links fit for n = {}", self.n),
            ));
        }
        self.compressor
            .validate_for(self.p)
            .map_err(|e| Error::config("compressor", e.to_string()))?;
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config("gamma", format!("{} is outside (0, 1]", self.gamma)));
        }
        if !(self.beta_prime > 0.0 && self.beta() <= 1.0) {
            return Err(Error::config(
                "beta_prime",
                format!("beta = beta_prime * gamma^2 = {} is outside (0, 1]", self.beta()),
            ));
        }
        if let Some(a) = self.alpha_prime {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::config("alpha_prime", format!("{a} must be positive")));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::config("eta", format!("{eta} is outside (0, 1]")));
            }
        }
        match &self.objective {
            ObjectiveConfig::Logistic { mu, data } => {
                if !(*mu > 0.0 && mu.is_finite()) {
                    return Err(Error::config("objective.mu", format!("{mu} must be positive")));
                }
                let per_agent = match data {
                    DataSource::Synth { per_agent, .. } => Some(*per_agent),
                    DataSource::File { per_agent, .. } => *per_agent,
                };
                if per_agent == Some(0) {
                    return Err(Error::config("objective.data.per_agent", "must be at least 1"));
                }
            }
            ObjectiveConfig::Quadratic { eig_min, eig_max, .. } => {
                if !(*eig_min > 0.0 && eig_min <= eig_max && eig_max.is_finite()) {
                    return Err(Error::config(
                        "objective.eig_min",
                        format!("need 0 < eig_min <= eig_max, got [{eig_min}, {eig_max}]"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `β = β'γ²`.
    pub fn beta(&self) -> f64 {
        self.beta_prime * self.gamma * self.gamma
    }

    /// `η`, defaulting to `min{1/(2C₂), 1}` (and 1 when `C₂ = 0`).
    pub fn eta_or_default(&self) -> f64 {
        self.eta.unwrap_or_else(|| {
            let c2 = c2_of(&self.compressor, self.p);
            if c2 == 0.0 {
                1.0
            } else {
                (1.0 / (2.0 * c2)).min(1.0)
            }
        })
    }

    /// Resolved parameters given the model's smoothness constant `L`:
    /// `α_i = α'γ³` with `α' = 1/L` unless overridden.
    pub fn algo_params(&self, smoothness: f64) -> AlgoParams {
        let alpha_prime = self.alpha_prime.unwrap_or(1.0 / smoothness);
        AlgoParams::from_tuning(self.n, alpha_prime, self.beta_prime, self.gamma, self.eta_or_default())
    }

    pub fn pull_graph_seed(&self) -> u64 {
        self.graph_seed.unwrap_or(self.seed)
    }
}
