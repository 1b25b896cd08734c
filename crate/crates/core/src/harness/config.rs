use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineConfig, ThresholdRule, DEFAULT_K};
use crate::density::BackendConfig;
use crate::lidl::{QuerySelection, ScheduleKind};
use crate::manifolds::{preset, ManifoldSpec};
use crate::{Error, Result};

/// A preset name or an inline spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecSource {
    Preset(String),
    Inline(ManifoldSpec),
}

impl SpecSource {
    pub fn resolve(&self) -> Result<ManifoldSpec> {
        match self {
            SpecSource::Preset(name) => preset(name),
            SpecSource::Inline(spec) => {
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }

    /// Preset name, or the spec's kind tag.
    pub fn label(&self) -> String {
        match self {
            SpecSource::Preset(name) => name.clone(),
            SpecSource::Inline(spec) => serde_json::to_value(spec)
                .ok()
                .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_string))
                .unwrap_or_else(|| "inline".into()),
        }
    }
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_ensemble() -> usize {
    1
}

/// LIDL or one of the baselines, keyed by `method`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodConfig {
    /// `backend: None` picks the exact oracle for the spec.
    Lidl {
        #[serde(default)]
        schedule: ScheduleKind,
        #[serde(default)]
        backend: Option<BackendConfig>,
        #[serde(default = "default_ensemble")]
        ensemble: usize,
    },
    Mle {
        #[serde(default = "default_k")]
        k: usize,
    },
    Twonn {
        #[serde(default)]
        local_k: Option<usize>,
    },
    Lpca {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default)]
        rule: ThresholdRule,
    },
}

impl MethodConfig {
    pub fn id(&self) -> &'static str {
        match self {
            MethodConfig::Lidl { .. } => "lidl",
            MethodConfig::Mle { .. } => "mle",
            MethodConfig::Twonn { .. } => "twonn",
            MethodConfig::Lpca { .. } => "lpca",
        }
    }

    /// `lidl_<backend>` for LIDL, the method id otherwise.
    pub fn label(&self, spec: &ManifoldSpec) -> String {
        match self {
            MethodConfig::Lidl { .. } => match self.lidl_backend(spec) {
                Ok(b) => format!("lidl_{}", b.id()),
                Err(_) => "lidl".into(),
            },
            _ => self.id().into(),
        }
    }

    pub fn baseline(&self) -> Option<BaselineConfig> {
        match self {
            MethodConfig::Lidl { .. } => None,
            MethodConfig::Mle { k } => Some(BaselineConfig::Mle { k: *k }),
            MethodConfig::Twonn { local_k } => Some(BaselineConfig::Twonn { local_k: *local_k }),
            MethodConfig::Lpca { k, rule } => Some(BaselineConfig::Lpca { k: *k, rule: *rule }),
        }
    }

    pub fn lidl_backend(&self, spec: &ManifoldSpec) -> Result<BackendConfig> {
        match self {
            MethodConfig::Lidl {
                backend: Some(b), ..
            } => Ok(b.clone()),
            MethodConfig::Lidl { backend: None, .. } => BackendConfig::oracle_for(spec).ok_or_else(|| {
                Error::InvalidSpec(format!("no analytic oracle for {:?}; name a backend", spec.kind))
            }),
            _ => Err(Error::InvalidArgument(format!("{} is not a LIDL method", self.id()))),
        }
    }
}

fn default_n() -> usize {
    2000
}

fn default_runs() -> usize {
    5
}

/// One experiment: a dataset recipe, a method and repetitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: SpecSource,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(flatten)]
    pub method: MethodConfig,
    #[serde(default)]
    pub queries: QuerySelection,
    /// Directory receiving `report.csv` and `summary.csv`.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(spec: SpecSource, method: MethodConfig) -> Self {
        RunConfig {
            spec,
            n: default_n(),
            runs: default_runs(),
            seed: 0,
            method,
            queries: QuerySelection::default(),
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        let spec = self.spec.resolve()?;
        match &self.method {
            MethodConfig::Lidl { schedule, ensemble, .. } => {
                schedule.build()?;
                if *ensemble == 0 {
                    return Err(Error::InvalidArgument("ensemble size must be at least 1".into()));
                }
                if let BackendConfig::Maf(train) = self.method.lidl_backend(&spec)? {
                    train.validate()?;
                }
            }
            MethodConfig::Mle { k } | MethodConfig::Lpca { k, .. } | MethodConfig::Twonn { local_k: Some(k) } => {
                if *k < 2 {
                    return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
                }
            }
            MethodConfig::Twonn { local_k: None } => {}
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }
}
