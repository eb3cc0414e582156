//! TOML experiment configuration.
//!
//! ```toml
//! output_dir = "out"        # optional
//! max_n = 4096              # optional cap on the point count n
//! max_points = 4096         # optional grid-size cap
//!
//! [structure]
//! classes = 2
//! subclasses = 4
//! per_subclass = 25         # or: sizes = [...] and class_of = [...]
//!
//! [graph]
//! delta = [0.0, 0.05]
//! xi = [0.0]
//! base_weight = 1.0
//! seed = 1
//!
//! [embedding]
//! p = 8
//! rotation_seed = 3         # optional
//!
//! [noise]
//! model = "gaussian"        # or "flip"
//! sigma = [0.5, 1.0]        # gaussian levels
//! alpha = [0.1, 0.3]        # flip rates (every sub-class)
//! flip_dist = [[...], ...]  # optional; symmetric when omitted
//! seeds = [1, 2, 3]
//!
//! [probe]
//! beta = [0.01, 0.1, 1.0]
//!
//! [suite]
//! bounds = ["bias", "variance"]   # optional; all when omitted
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::labels::FlipSpec;
use crate::structure::SubclassStructure;

pub const DEFAULT_MAX_POINTS: usize = 4096;
pub const DEFAULT_MAX_N: usize = 4096;

/// Every bound name a sweep can evaluate.
pub const BOUND_NAMES: &[&str] = &[
    "column_ratio",
    "perron_l1",
    "squared_eigenvalues",
    "tail_eigenvalue",
    "tail_sum",
    "perron_entry_min",
    "perron_entry_max",
    "perron_entry_ratio",
    "bias",
    "variance",
    "weyl",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    pub structure: StructureSpec,
    pub graph: GraphSpec,
    pub embedding: EmbeddingSpec,
    pub noise: NoiseSpec,
    pub probe: ProbeSpec,
    #[serde(default)]
    pub suite: SuiteSpec,
}

fn default_max_n() -> usize {
    DEFAULT_MAX_N
}

fn default_max_points() -> usize {
    DEFAULT_MAX_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subclasses: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_subclass: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_of: Option<Vec<usize>>,
}

impl StructureSpec {
    pub fn build(&self) -> Result<SubclassStructure> {
        match (self.subclasses, self.per_subclass, &self.sizes, &self.class_of) {
            (Some(k_bar), Some(per), None, None) => SubclassStructure::balanced(self.classes, k_bar, per),
            (_, None, Some(sizes), Some(class_of)) => {
                if self.subclasses.is_some_and(|k| k != sizes.len()) {
                    return Err(Error::Config(
                        "structure.subclasses disagrees with structure.sizes".into(),
                    ));
                }
                SubclassStructure::new(self.classes, sizes.clone(), class_of.clone())
            }
            _ => Err(Error::Config(
                "structure needs either subclasses + per_subclass or sizes + class_of".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub delta: Vec<f64>,
    pub xi: Vec<f64>,
    #[serde(default = "one")]
    pub base_weight: f64,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    Gaussian,
    Flip,
}

impl NoiseModel {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseModel::Gaussian => "gaussian",
            NoiseModel::Flip => "flip",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip_dist: Option<Vec<Vec<f64>>>,
    pub seeds: Vec<u64>,
}

impl NoiseSpec {
    /// The swept noise levels: sigmas for Gaussian noise, alphas for flips.
    pub fn levels(&self) -> &[f64] {
        match self.model {
            NoiseModel::Gaussian => &self.sigma,
            NoiseModel::Flip => &self.alpha,
        }
    }

    pub fn flip_spec(&self, structure: &SubclassStructure, alpha: f64, seed: u64) -> Result<FlipSpec> {
        let spec = match &self.flip_dist {
            None => crate::labels::symmetric_flip_spec(structure, alpha, seed)?,
            Some(dist) => FlipSpec {
                alphas: vec![alpha; structure.subclasses()],
                flip_dist: dist.clone(),
                seed,
            },
        };
        spec.validate(structure)?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub beta: Vec<f64>,
}

/// Smallest ridge parameter the harness fits with; `beta = 0` is raised to it.
pub const BETA_FLOOR: f64 = 1e-10;

impl ProbeSpec {
    /// The beta grid with [`BETA_FLOOR`] applied.
    pub fn betas(&self) -> Vec<f64> {
        self.beta.iter().map(|b| b.max(BETA_FLOOR)).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<String>>,
}

impl SuiteSpec {
    pub fn selects(&self, name: &str) -> bool {
        self.bounds
            .as_ref()
            .is_none_or(|names| names.iter().any(|n| n == name))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn point_count(&self) -> usize {
        self.graph.delta.len()
            * self.graph.xi.len()
            * self.noise.levels().len()
            * self.probe.beta.len()
            * self.noise.seeds.len()
    }

    pub fn validate(&self) -> Result<()> {
        let structure = self.structure.build()?;
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if structure.n() > self.max_n {
            return bad("max_n", format!("structure has {} points, above the cap of {}", structure.n(), self.max_n));
        }
        for (field, grid) in [
            ("graph.delta", &self.graph.delta),
            ("graph.xi", &self.graph.xi),
            ("probe.beta", &self.probe.beta),
        ] {
            if grid.is_empty() {
                return bad(field, "must not be empty".into());
            }
        }
        if let Some(v) = self.graph.delta.iter().chain(&self.graph.xi).find(|v| !(0.0..1.0).contains(*v)) {
            return bad("graph.delta/xi", format!("{v} is outside [0, 1)"));
        }
        if !(self.graph.base_weight > 0.0 && self.graph.base_weight.is_finite()) {
            return bad("graph.base_weight", "must be positive".into());
        }
        if let Some(b) = self.probe.beta.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return bad("probe.beta", format!("{b} is not a nonnegative number"));
        }
        let k_bar = structure.subclasses();
        if self.embedding.p < k_bar || self.embedding.p > structure.n() {
            return bad(
                "embedding.p",
                format!("{} is outside {k_bar}..={}", self.embedding.p, structure.n()),
            );
        }
        if self.noise.seeds.is_empty() {
            return bad("noise.seeds", "must not be empty".into());
        }
        match self.noise.model {
            NoiseModel::Gaussian => {
                if self.noise.sigma.is_empty() {
                    return bad("noise.sigma", "required for gaussian noise".into());
                }
                if !self.noise.alpha.is_empty() || self.noise.flip_dist.is_some() {
                    return bad("noise.alpha", "only valid for flip noise".into());
                }
                if let Some(s) = self.noise.sigma.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
                    return bad("noise.sigma", format!("{s} is not a nonnegative number"));
                }
            }
            NoiseModel::Flip => {
                if self.noise.alpha.is_empty() {
                    return bad("noise.alpha", "required for flip noise".into());
                }
                if !self.noise.sigma.is_empty() {
                    return bad("noise.sigma", "only valid for gaussian noise".into());
                }
                for &a in &self.noise.alpha {
                    self.noise
                        .flip_spec(&structure, a, 0)
                        .map_err(|e| Error::Config(format!("noise.alpha/flip_dist: {e}")))?;
                }
            }
        }
        if let Some(names) = &self.suite.bounds {
            if let Some(n) = names.iter().find(|n| !BOUND_NAMES.contains(&n.as_str())) {
                return bad("suite.bounds", format!("unknown bound `{n}`"));
            }
        }
        let points = self.point_count();
        if points > self.max_points {
            return bad(
                "max_points",
                format!("grid has {points} points, above the cap of {}", self.max_points),
            );
        }
        Ok(())
    }

    /// A single-point Gaussian configuration used by the CLI when no file is given.
    pub fn minimal() -> Self {
        Self {
            output_dir: None,
            max_n: DEFAULT_MAX_N,
            max_points: DEFAULT_MAX_POINTS,
            structure: StructureSpec {
                classes: 2,
                subclasses: Some(4),
                per_subclass: Some(25),
                sizes: None,
                class_of: None,
            },
            graph: GraphSpec {
                delta: vec![0.05],
                xi: vec![0.0],
                base_weight: 1.0,
                seed: 1,
            },
            embedding: EmbeddingSpec {
                p: 8,
                rotation_seed: None,
            },
            noise: NoiseSpec {
                model: NoiseModel::Gaussian,
                sigma: vec![0.5],
                alpha: vec![],
                flip_dist: None,
                seeds: vec![1],
            },
            probe: ProbeSpec { beta: vec![0.1] },
            suite: SuiteSpec::default(),
        }
    }
}
