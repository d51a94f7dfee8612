//! JSON experiment configuration.
//!
//! A minimal document names the node count, series length, the generating
//! prior and dynamics:
//!
//! ```json
//! {
//!   "n": 30, "T": 300, "seed": 1, "realizations": 24,
//!   "prior": {"kind": "er_simple", "edge_count": {"delta": 60}},
//!   "dynamics": {"kind": "glauber", "coupling": 0.5},
//!   "sampler": {"chains": 4, "sweeps": 500, "burn_in": 200, "thinning": 5},
//!   "estimator": {"kind": "mean-field"},
//!   "heuristics": ["corr", "granger", "te"],
//!   "sweep": {"parameter": "coupling", "values": [0.1, 0.3, 0.5], "target": "both"}
//! }
//! ```
//!
//! `inference` overrides the model used for reconstruction (it defaults to
//! the generating one), and `candidates` lists the models compared by
//! `select`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsModel;
use crate::error::{Error, Result};
use crate::heuristics::Method;
use crate::info::EstimatorKind;
use crate::priors::{PriorKind, PriorModel};
use crate::sampler::SamplerConfig;

use super::ppc::PpcConfig;

/// A reconstruction model: graph prior plus dynamics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub prior: PriorModel,
    pub dynamics: DynamicsModel,
}

impl ModelSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        self.prior.validate(n)?;
        self.dynamics.validate()
    }
}

/// A named model competing in model selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Candidate {
    pub name: String,
    pub prior: PriorModel,
    pub dynamics: DynamicsModel,
}

impl Candidate {
    pub fn spec(&self) -> ModelSpec {
        ModelSpec { prior: self.prior.clone(), dynamics: self.dynamics.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Added to every multiplicity count of the edge marginals.
    pub pseudo_count: f64,
    /// Exact posterior draws used for Jaccard scores under enumeration.
    pub enumeration_draws: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { kind: EstimatorKind::MeanField, pseudo_count: 0.0, enumeration_draws: 1000 }
    }
}

/// Which side of the experiment a sweep value is applied to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepTarget {
    /// Data and inference share the swept value.
    #[default]
    Both,
    /// Only the generating dynamics change; inference keeps its own value.
    Data,
    /// The data stay fixed and only the inference model changes.
    Inference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// A dynamics parameter name such as `coupling` or `infection`.
    pub parameter: String,
    pub values: Vec<f64>,
    #[serde(default)]
    pub target: SweepTarget,
    /// Confidence level of the bootstrap intervals.
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
}

fn default_level() -> f64 {
    0.9
}

fn default_resamples() -> usize {
    2000
}

fn default_realizations() -> usize {
    1
}

/// Files consumed instead of generated data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub graph: Option<PathBuf>,
    pub series: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(rename = "T", alias = "t")]
    pub t: usize,
    pub prior: PriorModel,
    pub dynamics: DynamicsModel,
    #[serde(default)]
    pub inference: Option<ModelSpec>,
    #[serde(default)]
    pub candidates: Vec<Candidate>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub heuristics: Vec<Method>,
    #[serde(default)]
    pub ppc: PpcConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub inputs: InputPaths,
    /// Output directory; the command line may override it.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// The generating model.
    pub fn truth(&self) -> ModelSpec {
        ModelSpec { prior: self.prior.clone(), dynamics: self.dynamics.clone() }
    }

    /// The model used for reconstruction.
    pub fn inference_model(&self) -> ModelSpec {
        self.inference.clone().unwrap_or_else(|| self.truth())
    }

    /// Checks shapes, parameter ranges and referenced files.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidModel("the graph needs at least one node".into()));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidModel("at least one realization is required".into()));
        }
        if let PriorKind::Cm { degrees } = &self.prior.kind {
            if degrees.len() != self.n {
                return Err(Error::DimensionMismatch(format!("{} degrees for {} nodes", degrees.len(), self.n)));
            }
        }
        self.truth().validate(self.n)?;
        if let Some(m) = &self.inference {
            m.validate(self.n)?;
        }
        let mut names = std::collections::HashSet::new();
        for c in &self.candidates {
            if !names.insert(c.name.as_str()) {
                return Err(Error::InvalidModel(format!("duplicate candidate name `{}`", c.name)));
            }
            c.spec().validate(self.n)?;
        }
        if let Some(s) = &self.sweep {
            if !(s.level > 0.0 && s.level < 1.0) {
                return Err(Error::InvalidModel(format!("confidence level {} outside (0, 1)", s.level)));
            }
            let targets = match s.target {
                SweepTarget::Data => vec![self.dynamics.clone()],
                SweepTarget::Inference => vec![self.inference_model().dynamics],
                SweepTarget::Both => vec![self.dynamics.clone(), self.inference_model().dynamics],
            };
            for probe in targets {
                probe.param(&s.parameter).ok_or_else(|| {
                    Error::InvalidModel(format!("{} dynamics has no parameter `{}`", probe.name(), s.parameter))
                })?;
                for &v in &s.values {
                    let mut d = probe.clone();
                    d.set_param(&s.parameter, v)?;
                    d.validate()?;
                }
            }
        }
        if self.ppc.replicates < 2 {
            return Err(Error::InvalidModel("posterior predictive checks need at least two replicates".into()));
        }
        for p in [&self.inputs.graph, &self.inputs.series].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("input file {} does not exist", p.display()),
                )));
            }
        }
        Ok(())
    }
}
