//! The black-box models: Random, MostPop, attribute item-kNN and a TF-IDF
//! vector space model, all behind [`BlackBox`].

mod features;
mod knn;
mod vsm;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{InteractionDataset, ItemFeatureCatalog};
use crate::{Error, Real, Result};

pub use features::FeatureWeighting;
pub use vsm::ProfileAggregation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelKind {
    Random,
    MostPop,
    AttItemKnn,
    Vsm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [Self::Random, Self::MostPop, Self::AttItemKnn, Self::Vsm];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::MostPop => "mostpop",
            Self::AttItemKnn => "att-item-knn",
            Self::Vsm => "vsm",
        }
    }

    /// Display label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Self::Random => "Random",
            Self::MostPop => "MostPop",
            Self::AttItemKnn => "Att-Item-kNN",
            Self::Vsm => "VSM",
        }
    }

    fn accepted_params(self) -> &'static [&'static str] {
        match self {
            Self::Random | Self::MostPop => &[],
            Self::AttItemKnn => &["k", "shrink", "weighting"],
            Self::Vsm => &["weighting", "aggregation"],
        }
    }

    /// Hyperparameter values searched when the configuration gives none.
    pub fn default_grid_axes(self) -> BTreeMap<String, Vec<String>> {
        let axis = |vals: &[&str]| vals.iter().map(|v| v.to_string()).collect::<Vec<_>>();
        let mut axes = BTreeMap::new();
        match self {
            Self::Random | Self::MostPop => {}
            Self::AttItemKnn => {
                axes.insert("k".to_string(), axis(&["10", "50", "100", "200"]));
                axes.insert("shrink".to_string(), axis(&["0", "10", "100"]));
            }
            Self::Vsm => {
                axes.insert("aggregation".to_string(), axis(&["mean", "rating-weighted"]));
                axes.insert("weighting".to_string(), axis(&["binary", "tfidf"]));
            }
        }
        axes
    }

    pub fn default_grid(self) -> Vec<HyperParams> {
        expand_grid(&self.default_grid_axes())
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

impl TryFrom<String> for ModelKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelKind> for String {
    fn from(k: ModelKind) -> String {
        k.as_str().to_string()
    }
}

/// Named hyperparameter values, kept as strings and parsed per model kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct HyperParams(BTreeMap<String, String>);

impl HyperParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: impl ToString) -> Self {
        self.0.insert(name.to_string(), value.to_string());
        self
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.get(name).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn parse<V: FromStr>(&self, name: &str, default: V) -> Result<V> {
        match self.get(name) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|_| Error::InvalidHyperparameter {
                name: name.into(),
                value: raw.into(),
                reason: "cannot be parsed".into(),
            }),
        }
    }
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for HyperParams {
    type Err = Error;

    /// Parses `k=10,shrink=0`; `-` or the empty string is the empty set.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut out = HyperParams::new();
        if s.is_empty() || s == "-" {
            return Ok(out);
        }
        for part in s.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected name=value, got `{part}`")))?;
            out.0.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(out)
    }
}

/// Cartesian product of the axes, keys in sorted order with the last varying fastest.
pub fn expand_grid(axes: &BTreeMap<String, Vec<String>>) -> Vec<HyperParams> {
    let mut grid = vec![HyperParams::new()];
    for (name, values) in axes {
        grid = grid
            .into_iter()
            .flat_map(|hp| values.iter().map(move |v| hp.clone().with(name, v)))
            .collect();
    }
    grid
}

/// A model score plus whether the user had no training history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored<T> {
    pub value: T,
    pub cold_start: bool,
}

/// Anything that scores (user, item) pairs: the function being explained.
pub trait BlackBox<T: Real>: Sync {
    fn num_users(&self) -> usize;

    fn num_items(&self) -> usize;

    fn score(&self, user: usize, item: usize) -> Result<Scored<T>>;

    /// Scores of every item for `user`; must agree bit-for-bit with `score`.
    fn score_all(&self, user: usize) -> Result<Vec<T>> {
        (0..self.num_items())
            .map(|item| self.score(user, item).map(|s| s.value))
            .collect()
    }
}

#[derive(Debug, Clone)]
enum ModelState<T> {
    Random { seed: u64 },
    MostPop { counts: Vec<T> },
    AttItemKnn(knn::ItemNeighborhoods<T>),
    Vsm(vsm::VectorSpace<T>),
}

/// A trained recommender. Scoring never mutates it, so it can be shared by
/// any number of scoring threads.
#[derive(Debug, Clone)]
pub struct Recommender<T> {
    kind: ModelKind,
    hyperparams: HyperParams,
    train_seed: u64,
    profiles: Vec<Vec<usize>>,
    num_items: usize,
    state: ModelState<T>,
}

impl<T: Real> Recommender<T> {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn hyperparams(&self) -> &HyperParams {
        &self.hyperparams
    }

    pub fn train_seed(&self) -> u64 {
        self.train_seed
    }

    /// Training items of `user`, ascending.
    pub fn profile(&self, user: usize) -> &[usize] {
        &self.profiles[user]
    }

    fn check(&self, user: usize, item: Option<usize>) -> Result<()> {
        if user >= self.profiles.len() {
            return Err(Error::IndexOutOfRange(format!("user index {user}")));
        }
        match item {
            Some(i) if i >= self.num_items => Err(Error::IndexOutOfRange(format!("item index {i}"))),
            _ => Ok(()),
        }
    }
}

pub fn train<T: Real>(
    kind: ModelKind,
    train: &InteractionDataset,
    catalog: &ItemFeatureCatalog,
    hyperparams: &HyperParams,
    seed: u64,
) -> Result<Recommender<T>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset("training set has no transactions".into()));
    }
    if catalog.num_items() != train.num_items() {
        return Err(Error::InvalidDataset(format!(
            "catalog covers {} items but the training set has {}",
            catalog.num_items(),
            train.num_items()
        )));
    }
    if let Some((name, _)) = hyperparams
        .iter()
        .find(|(name, _)| !kind.accepted_params().contains(name))
    {
        return Err(Error::UnknownHyperparameter {
            kind: kind.to_string(),
            name: name.to_string(),
        });
    }

    let state = match kind {
        ModelKind::Random => ModelState::Random { seed },
        ModelKind::MostPop => ModelState::MostPop {
            counts: train.item_counts().into_iter().map(T::from_count).collect(),
        },
        ModelKind::AttItemKnn => {
            let k: usize = hyperparams.parse("k", 50)?;
            let shrink: f64 = hyperparams.parse("shrink", 0.0)?;
            let weighting: FeatureWeighting = hyperparams.parse("weighting", FeatureWeighting::Binary)?;
            if k == 0 {
                return Err(invalid("k", &k, "must be at least 1"));
            }
            if !(shrink >= 0.0 && shrink.is_finite()) {
                return Err(invalid("shrink", &shrink, "must be finite and non-negative"));
            }
            let vectors = features::item_vectors::<T>(catalog, weighting);
            ModelState::AttItemKnn(knn::ItemNeighborhoods::build(&vectors, catalog, k, T::lit(shrink)))
        }
        ModelKind::Vsm => {
            let weighting: FeatureWeighting = hyperparams.parse("weighting", FeatureWeighting::TfIdf)?;
            let aggregation: ProfileAggregation = hyperparams.parse("aggregation", ProfileAggregation::Mean)?;
            let vectors = features::item_vectors::<T>(catalog, weighting);
            ModelState::Vsm(vsm::VectorSpace::build(vectors, &train.user_ratings(), aggregation))
        }
    };

    Ok(Recommender {
        kind,
        hyperparams: hyperparams.clone(),
        train_seed: seed,
        profiles: train.user_profiles(),
        num_items: train.num_items(),
        state,
    })
}

fn invalid(name: &str, value: &dyn fmt::Display, reason: &str) -> Error {
    Error::InvalidHyperparameter {
        name: name.into(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

impl<T: Real> BlackBox<T> for Recommender<T> {
    fn num_users(&self) -> usize {
        self.profiles.len()
    }

    fn num_items(&self) -> usize {
        self.num_items
    }

    fn score(&self, user: usize, item: usize) -> Result<Scored<T>> {
        self.check(user, Some(item))?;
        let profile = &self.profiles[user];
        let personalised = matches!(self.state, ModelState::AttItemKnn(_) | ModelState::Vsm(_));
        if personalised && profile.is_empty() {
            return Ok(Scored {
                value: T::zero(),
                cold_start: true,
            });
        }
        let value = match &self.state {
            ModelState::Random { seed } => uniform_hash(*seed, user, item),
            ModelState::MostPop { counts } => counts[item],
            ModelState::AttItemKnn(nb) => nb.score(profile, item),
            ModelState::Vsm(space) => space.score(user, item),
        };
        Ok(Scored {
            value,
            cold_start: false,
        })
    }

    fn score_all(&self, user: usize) -> Result<Vec<T>> {
        self.check(user, None)?;
        let profile = &self.profiles[user];
        Ok(match &self.state {
            ModelState::AttItemKnn(nb) => nb.score_all(profile, self.num_items),
            ModelState::MostPop { counts } => counts.clone(),
            ModelState::Vsm(space) if !profile.is_empty() => {
                (0..self.num_items).map(|i| space.score(user, i)).collect()
            }
            ModelState::Vsm(_) => vec![T::zero(); self.num_items],
            ModelState::Random { seed } => (0..self.num_items).map(|i| uniform_hash(*seed, user, i)).collect(),
        })
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Uniform value in [0, 1) that depends only on (seed, user, item).
fn uniform_hash<T: Real>(seed: u64, user: usize, item: usize) -> T {
    let h = splitmix64(splitmix64(splitmix64(seed) ^ user as u64) ^ item as u64);
    T::lit((h >> 11) as f64 / (1u64 << 53) as f64)
}

/// Top of one user's ranking. `i_1` is `entries[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationList<T> {
    pub user: usize,
    pub entries: Vec<(usize, T)>,
    /// Fewer than the requested number of candidates were available.
    pub truncated: bool,
}

impl<T> RecommendationList<T> {
    pub fn first(&self) -> Option<usize> {
        self.entries.first().map(|&(i, _)| i)
    }

    pub fn items(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }
}

/// Orders by descending score, then ascending item index.
pub(crate) fn rank_order<T: Real>(a: &(usize, T), b: &(usize, T)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0))
}

/// The `n` best-scoring items outside `exclude`; ties go to the lower index.
pub fn recommend_top_n<T: Real, M: BlackBox<T> + ?Sized>(
    model: &M,
    user: usize,
    n: usize,
    exclude: &[usize],
) -> Result<RecommendationList<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let scores = model.score_all(user)?;
    let mut excluded = vec![false; scores.len()];
    for &i in exclude {
        if let Some(slot) = excluded.get_mut(i) {
            *slot = true;
        }
    }
    let mut candidates: Vec<(usize, T)> = scores.into_iter().enumerate().filter(|&(i, _)| !excluded[i]).collect();
    let truncated = candidates.len() < n;
    if candidates.len() > n {
        candidates.select_nth_unstable_by(n - 1, rank_order);
        candidates.truncate(n);
    }
    candidates.sort_by(rank_order);
    Ok(RecommendationList {
        user,
        entries: candidates,
        truncated,
    })
}

/// Top-`n` lists for every user, excluding each user's training items.
pub fn recommend_all<T: Real>(model: &Recommender<T>, n: usize) -> Result<Vec<RecommendationList<T>>> {
    (0..model.num_users())
        .into_par_iter()
        .map(|u| recommend_top_n(model, u, n, model.profile(u)))
        .collect()
}
