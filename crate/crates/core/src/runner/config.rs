use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{DatasetFormat, YahooColumns};
use crate::explainer::{Distance, ExplainerConfig, KernelConfig, SampleWeighting, WeightOrdering};
use crate::ranking_eval::RankMetric;
use crate::recommenders::{expand_grid, HyperParams, ModelKind};
use crate::{Error, Result};

/// Environment variable that relative dataset paths are resolved against.
pub const DATA_ROOT_ENV: &str = "LIMERS_DATA_ROOT";

/// Experiment description, read from TOML.
///
/// ```toml
/// output_dir = "out/ml-small"
/// root_seed = 0
/// n_seeds = 10
/// cutoff = 10
///
/// [split]
/// ratio = 0.8
///
/// [[datasets]]
/// name = "MovieLens Small"
/// path = "ml-latest-small"
/// format = "movielens-csv"
///
/// [[models]]
/// kind = "att-item-knn"
/// grid = { k = [10, 50], shrink = [0, 10] }
///
/// [explainer]
/// samples = 1000
/// sigma = 0.25
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Base for relative dataset paths when `$LIMERS_DATA_ROOT` is unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_root: Option<PathBuf>,
    /// Explanation seeds are `root_seed + s` for `s` in `0..n_seeds`.
    #[serde(default)]
    pub root_seed: u64,
    /// Worker threads; all cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_ten")]
    pub n_seeds: usize,
    #[serde(default = "default_ten")]
    pub cutoff: usize,
    #[serde(default = "default_metric")]
    pub tuning_metric: String,
    /// Drop items never seen in training before fitting anything.
    #[serde(default = "default_true")]
    pub restrict_to_train_items: bool,
    #[serde(default = "default_explain_models")]
    pub explain_models: Vec<ModelKind>,
    /// Explain only the first `n` users (by index) of each dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_explained_users: Option<usize>,
    #[serde(default)]
    pub split: SplitConfig,
    pub datasets: Vec<DatasetSpec>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub explainer: ExplainerSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    /// Defaults to the root seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            ratio: default_ratio(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    /// `movielens-csv`, `movielens-dat` or `yahoo-tsv`.
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yahoo: Option<YahooColumns>,
}

impl DatasetSpec {
    pub fn dataset_format(&self) -> Result<DatasetFormat> {
        DatasetFormat::parse(&self.format, self.yahoo.clone())
    }

    /// File-name friendly form of the name.
    pub fn slug(&self) -> String {
        slug(&self.name)
    }
}

pub(crate) fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect();
    s.split('-').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("-")
}

/// A grid value as written in TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for GridValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Int(v) => write!(f, "{v}"),
            Self::Float(v) => write!(f, "{v}"),
            Self::Text(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Axes to search; the built-in grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<BTreeMap<String, Vec<GridValue>>>,
}

impl ModelSpec {
    pub fn expanded_grid(&self) -> Vec<HyperParams> {
        match &self.grid {
            None => self.kind.default_grid(),
            Some(axes) => expand_grid(
                &axes
                    .iter()
                    .map(|(k, vs)| (k.clone(), vs.iter().map(|v| v.to_string()).collect()))
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainerSection {
    pub samples: usize,
    pub sigma: f64,
    pub distance: String,
    pub l2_lambda: f64,
    pub top_k: usize,
    pub weighting: String,
    pub ordering: String,
}

impl Default for ExplainerSection {
    fn default() -> Self {
        let d = ExplainerConfig::<f64>::default();
        Self {
            samples: d.samples,
            sigma: d.kernel.sigma,
            distance: d.kernel.distance.to_string(),
            l2_lambda: d.l2_lambda,
            top_k: d.top_k,
            weighting: d.weighting.to_string(),
            ordering: d.ordering.to_string(),
        }
    }
}

impl ExplainerSection {
    pub fn to_config(&self) -> Result<ExplainerConfig<f64>> {
        let cfg = ExplainerConfig {
            samples: self.samples,
            kernel: KernelConfig::new(self.sigma, self.distance.parse::<Distance>()?)
                .map_err(|e| Error::Config(e.to_string()))?,
            l2_lambda: self.l2_lambda,
            top_k: self.top_k,
            weighting: self.weighting.parse::<SampleWeighting>()?,
            ordering: self.ordering.parse::<WeightOrdering>()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_ten() -> usize {
    10
}

fn default_true() -> bool {
    true
}

fn default_ratio() -> f64 {
    0.8
}

fn default_metric() -> String {
    RankMetric::Ndcg.to_string()
}

fn default_explain_models() -> Vec<ModelKind> {
    vec![ModelKind::AttItemKnn, ModelKind::Vsm]
}

fn default_models() -> Vec<ModelSpec> {
    ModelKind::ALL
        .iter()
        .map(|&kind| ModelSpec { kind, grid: None })
        .collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file. Relative dataset paths are resolved against
    /// `$LIMERS_DATA_ROOT` when set, otherwise against `data_root`, otherwise
    /// against the file's directory. Relative `output_dir` and `data_root`
    /// are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let data_root = std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from);
        cfg.resolve_paths(base, data_root.as_deref());
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path, data_root: Option<&Path>) {
        let root = match (data_root, &self.data_root) {
            (Some(env), _) => env.to_path_buf(),
            (None, Some(own)) => base.join(own),
            (None, None) => base.to_path_buf(),
        };
        for d in &mut self.datasets {
            if d.path.is_relative() {
                d.path = root.join(&d.path);
            }
        }
        if let Some(own) = &mut self.data_root {
            *own = base.join(&*own);
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn split_seed(&self) -> u64 {
        self.split.seed.unwrap_or(self.root_seed)
    }

    /// `root_seed + s` for each of the `n_seeds` explanation runs.
    pub fn explanation_seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64)
            .map(|s| self.root_seed.wrapping_add(s))
            .collect()
    }

    pub fn metric(&self) -> Result<RankMetric> {
        self.tuning_metric.parse()
    }

    /// Checks everything that can be checked before any data is read,
    /// including that dataset directories exist.
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("at least one [[datasets]] entry is required".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one [[models]] entry is required".into()));
        }
        if self.n_seeds == 0 {
            return Err(Error::Config("n_seeds must be at least 1".into()));
        }
        if self.cutoff == 0 {
            return Err(Error::Config("cutoff must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return Err(Error::Config(format!(
                "split ratio must lie in (0, 1), got {}",
                self.split.ratio
            )));
        }
        self.metric()?;
        self.explainer.to_config()?;
        let mut names = std::collections::HashSet::new();
        for d in &self.datasets {
            if !names.insert(d.slug()) {
                return Err(Error::Config(format!("dataset name `{}` is not unique", d.name)));
            }
            d.dataset_format()?;
            if !d.path.is_dir() {
                return Err(Error::Config(format!(
                    "dataset `{}`: directory {} does not exist",
                    d.name,
                    d.path.display()
                )));
            }
        }
        let mut kinds = std::collections::HashSet::new();
        for m in &self.models {
            if !kinds.insert(m.kind) {
                return Err(Error::Config(format!("model `{}` is listed twice", m.kind)));
            }
            if m.expanded_grid().is_empty() {
                return Err(Error::Config(format!("model `{}` has an empty grid axis", m.kind)));
            }
        }
        if let Some(k) = self.explain_models.iter().find(|k| !kinds.contains(k)) {
            return Err(Error::Config(format!(
                "explain_models lists `{k}` but [[models]] does not"
            )));
        }
        Ok(())
    }
}
