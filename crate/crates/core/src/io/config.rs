//! Run configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{SamplerConfig, SamplerMode};
use crate::potential::{Activation, ModelSpec};
use crate::train::TrainConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[default]
    Train,
    Complete,
    Classify,
    Generate,
    Oracle,
    Eval,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Task::Train => "train",
            Task::Complete => "complete",
            Task::Classify => "classify",
            Task::Generate => "generate",
            Task::Oracle => "oracle",
            Task::Eval => "eval",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub signature: Option<PathBuf>,
    /// World files; each may hold several `---`-separated worlds.
    pub train: Vec<PathBuf>,
    pub valid: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub auto_extend: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorConfig {
    pub formula: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Existing model to load instead of building one.
    pub path: Option<PathBuf>,
    /// Whether to include a neural potential.
    pub neural: bool,
    pub k: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub heads: usize,
    pub embedding_dim: Option<usize>,
    pub indicators: Vec<IndicatorConfig>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let spec = ModelSpec::default();
        ModelConfig {
            path: None,
            neural: true,
            k: spec.k,
            hidden: spec.hidden,
            activation: spec.activation,
            heads: spec.heads,
            embedding_dim: spec.embedding_dim,
            indicators: Vec::new(),
        }
    }
}

impl ModelConfig {
    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            k: self.k,
            hidden: self.hidden.clone(),
            activation: self.activation,
            heads: self.heads,
            embedding_dim: self.embedding_dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KbcConfig {
    pub hits: Vec<usize>,
}

impl Default for KbcConfig {
    fn default() -> Self {
        KbcConfig { hits: vec![1, 3, 10] }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerateSource {
    /// Persistent chains observed while training.
    #[default]
    Training,
    /// Chains run under a fixed model.
    Model,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkipBondConfig {
    pub bonds: Vec<String>,
    pub skip: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub source: GenerateSource,
    pub top: usize,
    /// Also report the top structures among the last `window` samples.
    pub window: Option<usize>,
    /// Unary predicates of which every constant has exactly one.
    pub exactly_one: Vec<String>,
    /// Binary predicates of which every ordered pair has at most one.
    pub at_most_one: Vec<String>,
    pub skip_bond: Option<SkipBondConfig>,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            source: GenerateSource::Training,
            top: 10,
            window: None,
            exactly_one: Vec::new(),
            at_most_one: Vec::new(),
            skip_bond: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Also write every world's probability.
    pub distribution: bool,
    pub max_atoms: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            distribution: false,
            max_atoms: crate::oracle::MAX_EXACT_ATOMS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    /// Overrides the seeds of the train and sampler sections.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub sampler: SamplerConfig,
    pub kbc: KbcConfig,
    pub generate: GenerateConfig,
    pub oracle: OracleConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: Task::Train,
            seed: 0,
            out_dir: PathBuf::from("run"),
            data: DataConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            sampler: SamplerConfig::default(),
            kbc: KbcConfig::default(),
            generate: GenerateConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut c = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        c.data.signature.as_mut().map(fix);
        c.data.train.iter_mut().for_each(fix);
        c.data.valid.as_mut().map(fix);
        c.data.test.as_mut().map(fix);
        c.model.path.as_mut().map(fix);
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Copies the top-level seed into every section and switches to the
    /// constrained sampler when exclusion constraints are configured.
    pub fn resolve(&mut self) -> Result<()> {
        self.train.seed = self.seed;
        self.sampler.seed = self.seed;
        let constrained = !self.generate.exactly_one.is_empty() || !self.generate.at_most_one.is_empty();
        if constrained && self.task == Task::Generate {
            self.sampler.mode = SamplerMode::Constrained;
            self.train.sampler = SamplerMode::Constrained;
        }
        self.train.validate()?;
        self.sampler.validate()?;
        Ok(())
    }
}
