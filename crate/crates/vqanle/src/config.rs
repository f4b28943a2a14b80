//! Run configuration.
//!
//! The top-level keys `test_name`, `seed`, `dataset`, `model`, `prompt` and
//! `run_params` follow the published hyper-parameter tables key for key, so
//! those blocks load unchanged. Everything else is an optional extension with a
//! default. Unknown keys are logged and ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use log::warn;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vqanle_core::gateway::{DecodingParams, StageBudgets};
use vqanle_core::metrics::ValidityRules;
use vqanle_core::raster::AnnotationStyle;
use vqanle_core::scene::AreaThreshold;
use vqanle_core::schedule::{self, DEFAULT_PREFIXES, DEFAULT_PROPORTIONS, VIP_BLOCKLIST, VIP_PREFIXES, VIP_PROPORTIONS};
use vqanle_core::similarity::SimilarityMode;
use vqanle_core::triplet::PipelineKind;

/// Value of `q_prefix` / `q_prefix_prop` meaning "use the built-in pool".
pub const HARDCODED: &str = "<!hardcoded>";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid { field: field.into(), message: message.into() }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            ConfigError::Read { .. } => None,
        }
    }
}

/// 0/1 integers or booleans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(into = "u8")]
pub struct Flag(pub bool);

impl From<Flag> for u8 {
    fn from(f: Flag) -> u8 {
        f.0 as u8
    }
}

impl<'de> Deserialize<'de> for Flag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Flag;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("0, 1, true or false")
            }
            fn visit_bool<E: de::Error>(self, v: bool) -> Result<Flag, E> {
                Ok(Flag(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Flag, E> {
                match v {
                    0 => Ok(Flag(false)),
                    1 => Ok(Flag(true)),
                    _ => Err(E::invalid_value(de::Unexpected::Unsigned(v), &self)),
                }
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Flag, E> {
                u64::try_from(v).map_err(|_| E::invalid_value(de::Unexpected::Signed(v), &self)).and_then(|v| self.visit_u64(v))
            }
        }
        d.deserialize_any(V)
    }
}

/// A list, or the `<!hardcoded>` marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting<T> {
    List(Vec<T>),
    Marker(String),
}

impl<T> Setting<T> {
    fn list(&self, field: &str) -> Result<Option<&[T]>, ConfigError> {
        match self {
            Setting::List(v) => Ok(Some(v)),
            Setting::Marker(m) if m.trim() == HARDCODED => Ok(None),
            Setting::Marker(m) => Err(ConfigError::invalid(field, format!("expected a list or {HARDCODED}, got {m:?}"))),
        }
    }
}

type Extra = BTreeMap<String, serde_yaml::Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    #[serde(default)]
    pub name: String,
    /// Images sampled for the run.
    pub count: usize,
    /// Only sample images that keep at least one object after filtering.
    #[serde(default)]
    pub use_scene_graph: Flag,
    #[serde(default)]
    pub images_dir: Option<PathBuf>,
    #[serde(default)]
    pub scene_graph: Option<PathBuf>,
    #[serde(default)]
    pub min_area_fraction: Option<f64>,
    #[serde(default)]
    pub min_area_pixels: Option<u64>,
    /// Expected slot total for validity accounting; defaults to the plan size.
    #[serde(default)]
    pub expected: Option<usize>,
    #[serde(flatten, skip_serializing)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(default)]
    pub use_8_bit: Flag,
    #[serde(default)]
    pub device: String,
    #[serde(default)]
    pub low_cpu: Flag,
    #[serde(flatten, skip_serializing)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub path: String,
    #[serde(default)]
    pub family: String,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(flatten, skip_serializing)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub num_per_inference: usize,
    /// Accepted for compatibility; sent images are always re-encoded as PNG.
    #[serde(default)]
    pub use_img_ext: Flag,
    pub q_prefix: Setting<String>,
    pub q_prefix_prop: Setting<u32>,
    #[serde(flatten, skip_serializing)]
    pub extra: Extra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Remote base URL; `VQANLE_BACKEND_URL` overrides it.
    pub url: Option<String>,
    pub embedding_model: Option<String>,
    /// Mock reply script.
    pub script: Option<PathBuf>,
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig { kind: BackendKind::Mock, url: None, embedding_model: None, script: None, retries: 3, backoff_ms: 500, timeout_secs: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub test_name: String,
    #[serde(default)]
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    /// `singlestep-optim`, `nonvis-optim` or `self_consistency`.
    pub prompt: String,
    pub run_params: RunParams,

    /// Directory of `<template id>.txt` files overriding the built-ins.
    #[serde(default)]
    pub templates_dir: Option<PathBuf>,
    #[serde(default)]
    pub decoding: DecodingParams,
    #[serde(default)]
    pub budgets: StageBudgets,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub similarity: SimilarityMode,
    #[serde(default)]
    pub validity: ValidityRules,
    #[serde(default)]
    pub annotation: AnnotationStyle,
    /// Blocked prefixes for visual-prompt runs.
    #[serde(default = "default_blocklist")]
    pub vip_blocklist: Vec<String>,
    /// Seconds per valid triplet of a baseline run, for speedup reporting.
    #[serde(default)]
    pub baseline_tbar: Option<f64>,
    #[serde(flatten, skip_serializing)]
    pub extra: Extra,
}

fn default_parallelism() -> usize {
    4
}

fn default_blocklist() -> Vec<String> {
    schedule::owned(&VIP_BLOCKLIST)
}

/// Prefix pool and proportions after resolving `<!hardcoded>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixPool {
    pub prefixes: Vec<String>,
    pub proportions: Vec<u32>,
}

impl RunConfig {
    pub fn from_yaml(text: &str) -> Result<Self, ConfigError> {
        let de = serde_yaml::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            ConfigError::Invalid { field: if field == "." { "<root>".into() } else { field }, message: e.into_inner().to_string() }
        })?;
        cfg.warn_unknown();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load and resolve relative paths against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.into(), message: e.to_string() })?;
        let mut cfg = RunConfig::from_yaml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p.as_mut() {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.dataset.images_dir);
        fix(&mut self.dataset.scene_graph);
        fix(&mut self.templates_dir);
        fix(&mut self.backend.script);
        fix(&mut self.output_dir);
    }

    fn warn_unknown(&self) {
        let sections: [(&str, &Extra); 5] = [
            ("", &self.extra),
            ("dataset.", &self.dataset.extra),
            ("model.", &self.model.extra),
            ("model.params.", &self.model.params.extra),
            ("run_params.", &self.run_params.extra),
        ];
        for (prefix, extra) in sections {
            for key in extra.keys() {
                warn!("ignoring unknown config key `{prefix}{key}`");
            }
        }
    }

    pub fn unknown_keys(&self) -> Vec<String> {
        let mut out: Vec<String> = self.extra.keys().cloned().collect();
        out.extend(self.dataset.extra.keys().map(|k| format!("dataset.{k}")));
        out.extend(self.model.extra.keys().map(|k| format!("model.{k}")));
        out.extend(self.model.params.extra.keys().map(|k| format!("model.params.{k}")));
        out.extend(self.run_params.extra.keys().map(|k| format!("run_params.{k}")));
        out
    }

    pub fn pipeline(&self) -> Result<PipelineKind, ConfigError> {
        PipelineKind::for_prompt_set(&self.prompt)
            .ok_or_else(|| ConfigError::invalid("prompt", format!("unknown prompt set {:?}; expected singlestep-optim, nonvis-optim or self_consistency", self.prompt)))
    }

    pub fn prefix_pool(&self) -> Result<PrefixPool, ConfigError> {
        let vip = self.pipeline()? == PipelineKind::SingleStepVip;
        let rp = &self.run_params;
        let prefixes = match rp.q_prefix.list("run_params.q_prefix")? {
            Some(l) => l.to_vec(),
            None if vip => schedule::owned(&VIP_PREFIXES),
            None => schedule::owned(&DEFAULT_PREFIXES),
        };
        let proportions = match rp.q_prefix_prop.list("run_params.q_prefix_prop")? {
            Some(l) => l.to_vec(),
            None if vip => VIP_PROPORTIONS.to_vec(),
            None => DEFAULT_PROPORTIONS.to_vec(),
        };
        if prefixes.len() != proportions.len() {
            return Err(ConfigError::invalid(
                "run_params",
                format!("q_prefix has {} entries but q_prefix_prop has {}", prefixes.len(), proportions.len()),
            ));
        }
        if prefixes.is_empty() {
            return Err(ConfigError::invalid("run_params.q_prefix", "prefix list is empty"));
        }
        if let Some(i) = proportions.iter().position(|&p| p == 0) {
            return Err(ConfigError::invalid("run_params.q_prefix_prop", format!("proportion {i} must be positive")));
        }
        if vip {
            schedule::check_blocklist(&prefixes, &self.vip_blocklist).map_err(|e| ConfigError::invalid("run_params.q_prefix", e.to_string()))?;
        }
        Ok(PrefixPool { prefixes, proportions })
    }

    pub fn area_threshold(&self) -> AreaThreshold {
        match (self.dataset.min_area_pixels, self.dataset.min_area_fraction) {
            (Some(px), _) => AreaThreshold::Pixels(px),
            (None, Some(f)) => AreaThreshold::Fraction(f),
            (None, None) => AreaThreshold::default(),
        }
    }

    pub fn plan_size(&self) -> usize {
        self.dataset.count * self.run_params.num_per_inference
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.pipeline()?;
        if self.run_params.num_per_inference < 1 {
            return Err(ConfigError::invalid("run_params.num_per_inference", "must be at least 1"));
        }
        self.prefix_pool()?;
        self.decoding.validate().map_err(|e| ConfigError::invalid("decoding", e.to_string()))?;
        for (name, v) in [
            ("question", self.budgets.question),
            ("answer", self.budgets.answer),
            ("base", self.budgets.base),
            ("cot", self.budgets.cot),
            ("react", self.budgets.react),
        ] {
            if v < 1 {
                return Err(ConfigError::invalid(&format!("budgets.{name}"), "must be at least 1"));
            }
        }
        if self.parallelism < 1 {
            return Err(ConfigError::invalid("parallelism", "must be at least 1"));
        }
        if let Some(f) = self.dataset.min_area_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(ConfigError::invalid("dataset.min_area_fraction", "must be in [0, 1]"));
            }
        }
        if self.annotation.thickness < 1 {
            return Err(ConfigError::invalid("annotation.thickness", "must be at least 1"));
        }
        if let Some(e) = self.dataset.expected {
            if e < self.plan_size() {
                return Err(ConfigError::invalid("dataset.expected", format!("{e} is smaller than the plan size {}", self.plan_size())));
            }
        }
        Ok(())
    }

    /// Output directory; defaults to `output/<test_name>` under `base`.
    pub fn output_dir_or(&self, base: &Path) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| base.join("output").join(sanitize(&self.test_name)))
    }
}

fn sanitize(name: &str) -> String {
    let s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    if s.is_empty() {
        "run".into()
    } else {
        s
    }
}
