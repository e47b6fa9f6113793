//! Rating transactions, item genre metadata, splitting and popularity.

mod loader;
mod split;

use std::collections::HashSet;
use std::fmt;

use crate::{Error, Real, Result};

pub use loader::{load_dataset, DatasetFormat, LoadedDataset, PreprocessReport, YahooColumns};
pub use split::{split, RestrictedSplit, TrainTestSplit};

/// One rating event, in vocabulary index space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub user: usize,
    pub item: usize,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

/// Sparse user-item rating transactions with their id vocabularies.
///
/// Vocabularies hold external ids sorted ascending, so index `i` always maps
/// to the i-th smallest external id. Transactions are kept sorted by
/// `(user, item)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionDataset {
    user_ids: Vec<u64>,
    item_ids: Vec<u64>,
    transactions: Vec<Interaction>,
}

impl InteractionDataset {
    pub fn new(user_ids: Vec<u64>, item_ids: Vec<u64>, mut transactions: Vec<Interaction>) -> Result<Self> {
        check_sorted_unique(&user_ids, "user")?;
        check_sorted_unique(&item_ids, "item")?;
        transactions.sort_by_key(|t| (t.user, t.item));
        for pair in transactions.windows(2) {
            if (pair[0].user, pair[0].item) == (pair[1].user, pair[1].item) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate transaction for user index {} and item index {}",
                    pair[0].user, pair[0].item
                )));
            }
        }
        if let Some(t) = transactions
            .iter()
            .find(|t| t.user >= user_ids.len() || t.item >= item_ids.len())
        {
            return Err(Error::IndexOutOfRange(format!(
                "transaction ({}, {}) outside vocabularies of size ({}, {})",
                t.user,
                t.item,
                user_ids.len(),
                item_ids.len()
            )));
        }
        Ok(Self {
            user_ids,
            item_ids,
            transactions,
        })
    }

    pub fn user_ids(&self) -> &[u64] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[u64] {
        &self.item_ids
    }

    pub fn transactions(&self) -> &[Interaction] {
        &self.transactions
    }

    pub fn num_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn user_index(&self, external: u64) -> Option<usize> {
        self.user_ids.binary_search(&external).ok()
    }

    pub fn item_index(&self, external: u64) -> Option<usize> {
        self.item_ids.binary_search(&external).ok()
    }

    /// Items rated by each user, ascending by item index.
    pub fn user_profiles(&self) -> Vec<Vec<usize>> {
        let mut profiles = vec![Vec::new(); self.num_users()];
        for t in &self.transactions {
            profiles[t.user].push(t.item);
        }
        profiles
    }

    /// `(item, rating)` pairs per user, ascending by item index.
    pub fn user_ratings(&self) -> Vec<Vec<(usize, f64)>> {
        let mut profiles = vec![Vec::new(); self.num_users()];
        for t in &self.transactions {
            profiles[t.user].push((t.item, t.rating));
        }
        profiles
    }

    pub fn item_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_items()];
        for t in &self.transactions {
            counts[t.item] += 1;
        }
        counts
    }

    /// A dataset over the same vocabularies holding `transactions`.
    pub(crate) fn with_transactions(&self, transactions: Vec<Interaction>) -> Self {
        let mut transactions = transactions;
        transactions.sort_by_key(|t| (t.user, t.item));
        Self {
            user_ids: self.user_ids.clone(),
            item_ids: self.item_ids.clone(),
            transactions,
        }
    }
}

fn check_sorted_unique(ids: &[u64], what: &str) -> Result<()> {
    if ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidDataset(format!(
            "{what} vocabulary must be strictly ascending"
        )));
    }
    Ok(())
}

/// Item to genre-set mapping over a global genre vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemFeatureCatalog {
    feature_vocab: Vec<String>,
    item_features: Vec<Vec<usize>>,
}

impl ItemFeatureCatalog {
    /// `item_features[i]` lists the feature indices of item `i`; each list must
    /// be non-empty and within the vocabulary. Lists are sorted and deduplicated.
    pub fn new(feature_vocab: Vec<String>, item_features: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for name in &feature_vocab {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate feature `{name}`")));
            }
        }
        let mut item_features = item_features;
        for (item, features) in item_features.iter_mut().enumerate() {
            features.sort_unstable();
            features.dedup();
            if features.is_empty() {
                return Err(Error::InvalidDataset(format!("item index {item} has no features")));
            }
            if let Some(&f) = features.iter().find(|&&f| f >= feature_vocab.len()) {
                return Err(Error::IndexOutOfRange(format!(
                    "feature index {f} of item {item} outside vocabulary of size {}",
                    feature_vocab.len()
                )));
            }
        }
        Ok(Self {
            feature_vocab,
            item_features,
        })
    }

    pub fn feature_vocab(&self) -> &[String] {
        &self.feature_vocab
    }

    pub fn num_features(&self) -> usize {
        self.feature_vocab.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_features.len()
    }

    /// Sorted feature indices of `item`.
    pub fn features(&self, item: usize) -> &[usize] {
        &self.item_features[item]
    }

    pub fn try_features(&self, item: usize) -> Result<&[usize]> {
        self.item_features
            .get(item)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::IndexOutOfRange(format!("item index {item} not in catalog")))
    }

    pub fn feature_name(&self, feature: usize) -> &str {
        &self.feature_vocab[feature]
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_vocab.iter().position(|f| f == name)
    }

    /// Keeps only the listed items, in the given order.
    pub(crate) fn select_items(&self, items: &[usize]) -> Self {
        Self {
            feature_vocab: self.feature_vocab.clone(),
            item_features: items.iter().map(|&i| self.item_features[i].clone()).collect(),
        }
    }
}

/// Users, items, transactions and sparsity of a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub transactions: usize,
    pub sparsity: f64,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "users={} items={} transactions={} sparsity={:.4}",
            self.users, self.items, self.transactions, self.sparsity
        )
    }
}

pub fn dataset_stats(ds: &InteractionDataset) -> Result<DatasetStats> {
    if ds.is_empty() || ds.num_users() == 0 || ds.num_items() == 0 {
        return Err(Error::EmptyDataset("no transactions".into()));
    }
    let (users, items, transactions) = (ds.num_users(), ds.num_items(), ds.transactions.len());
    Ok(DatasetStats {
        users,
        items,
        transactions,
        sparsity: 1.0 - transactions as f64 / (users as f64 * items as f64),
    })
}

/// Item sampling distribution proportional to training interaction counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityDistribution<T> {
    probs: Vec<T>,
}

impl<T: Real> PopularityDistribution<T> {
    /// Builds a distribution from non-negative weights (normalised here).
    pub fn from_weights(weights: &[T]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::InvalidArgument(
                "popularity weights must be finite and non-negative".into(),
            ));
        }
        let total: T = weights.iter().copied().sum();
        if total <= T::zero() {
            return Err(Error::InvalidArgument("popularity weights must not all be zero".into()));
        }
        Ok(Self {
            probs: weights.iter().map(|&w| w / total).collect(),
        })
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

pub fn popularity_distribution<T: Real>(train: &InteractionDataset) -> Result<PopularityDistribution<T>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset("training set has no transactions".into()));
    }
    let total = T::from_count(train.transactions().len());
    Ok(PopularityDistribution {
        probs: train
            .item_counts()
            .into_iter()
            .map(|c| T::from_count(c) / total)
            .collect(),
    })
}
