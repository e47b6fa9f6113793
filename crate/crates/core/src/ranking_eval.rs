//! Top-N accuracy metrics and the nDCG-driven configuration search.
//!
//! Relevance is binary: every held-out transaction of a user is relevant.
//! All metrics are averaged over users with at least one held-out item.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::{InteractionDataset, ItemFeatureCatalog};
use crate::recommenders::{self, HyperParams, ModelKind, RecommendationList};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport<T> {
    pub ndcg: T,
    pub recall: T,
    pub hit_rate: T,
    pub precision: T,
    pub map: T,
    pub mrr: T,
    pub cutoff: usize,
    /// Users with at least one relevant item; the averaging population.
    pub users_evaluated: usize,
    /// Users that had a list but nothing held out.
    pub users_without_test: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMetric {
    Ndcg,
    Recall,
    HitRate,
    Precision,
    Map,
    Mrr,
}

impl RankMetric {
    pub fn value<T: Copy>(self, r: &EvalReport<T>) -> T {
        match self {
            Self::Ndcg => r.ndcg,
            Self::Recall => r.recall,
            Self::HitRate => r.hit_rate,
            Self::Precision => r.precision,
            Self::Map => r.map,
            Self::Mrr => r.mrr,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ndcg => "ndcg",
            Self::Recall => "recall",
            Self::HitRate => "hit_rate",
            Self::Precision => "precision",
            Self::Map => "map",
            Self::Mrr => "mrr",
        }
    }
}

impl fmt::Display for RankMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RankMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Self::Ndcg,
            Self::Recall,
            Self::HitRate,
            Self::Precision,
            Self::Map,
            Self::Mrr,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| Error::Config(format!("unknown ranking metric `{s}`")))
    }
}

/// Metric values of one user's list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserMetrics<T> {
    pub ndcg: T,
    pub recall: T,
    pub hit: T,
    pub precision: T,
    pub average_precision: T,
    pub reciprocal_rank: T,
}

/// Binary-gain metrics of `ranked` (best first) against `relevant` at `cutoff`.
///
/// The ideal DCG covers `min(cutoff, |relevant|)` positions, precision divides
/// by `cutoff`, and average precision by `min(cutoff, |relevant|)`.
pub fn user_metrics<T: Real>(ranked: &[usize], relevant: &HashSet<usize>, cutoff: usize) -> UserMetrics<T> {
    let discount = |rank: usize| T::one() / T::from_count(rank + 1).log2();
    let ideal_len = cutoff.min(relevant.len());
    let idcg: T = (1..=ideal_len).map(discount).sum();

    let mut dcg = T::zero();
    let mut hits = 0usize;
    let mut precision_sum = T::zero();
    let mut first_hit = None;
    for (pos, item) in ranked.iter().take(cutoff).enumerate() {
        if relevant.contains(item) {
            let rank = pos + 1;
            hits += 1;
            dcg = dcg + discount(rank);
            precision_sum = precision_sum + T::from_count(hits) / T::from_count(rank);
            first_hit.get_or_insert(rank);
        }
    }
    let ratio = |num: T, den: usize| if den == 0 { T::zero() } else { num / T::from_count(den) };
    UserMetrics {
        ndcg: if idcg > T::zero() { dcg / idcg } else { T::zero() },
        recall: ratio(T::from_count(hits), relevant.len()),
        hit: if hits > 0 { T::one() } else { T::zero() },
        precision: ratio(T::from_count(hits), cutoff),
        average_precision: ratio(precision_sum, ideal_len),
        reciprocal_rank: first_hit.map_or(T::zero(), |r| T::one() / T::from_count(r)),
    }
}

pub fn rank_metrics<T: Real>(
    lists: &[RecommendationList<T>],
    test: &InteractionDataset,
    cutoff: usize,
) -> Result<EvalReport<T>> {
    if cutoff == 0 {
        return Err(Error::InvalidArgument("cutoff must be at least 1".into()));
    }
    let mut relevant: Vec<HashSet<usize>> = vec![HashSet::new(); test.num_users()];
    for t in test.transactions() {
        relevant[t.user].insert(t.item);
    }
    let mut ranked: Vec<Option<Vec<usize>>> = vec![None; test.num_users()];
    let mut users_without_test = 0;
    for list in lists {
        let slot = ranked
            .get_mut(list.user)
            .ok_or_else(|| Error::IndexOutOfRange(format!("list for user index {}", list.user)))?;
        if relevant[list.user].is_empty() {
            users_without_test += 1;
        }
        *slot = Some(list.items().collect());
    }

    // per-user values in user order, then a sequential sum
    let per_user: Vec<UserMetrics<T>> = (0..test.num_users())
        .into_par_iter()
        .filter(|&u| !relevant[u].is_empty())
        .map(|u| user_metrics(ranked[u].as_deref().unwrap_or(&[]), &relevant[u], cutoff))
        .collect();

    let n = per_user.len();
    let mean = |f: fn(&UserMetrics<T>) -> T| -> T {
        if n == 0 {
            T::zero()
        } else {
            per_user.iter().map(f).fold(T::zero(), |a, b| a + b) / T::from_count(n)
        }
    };
    Ok(EvalReport {
        ndcg: mean(|m| m.ndcg),
        recall: mean(|m| m.recall),
        hit_rate: mean(|m| m.hit),
        precision: mean(|m| m.precision),
        map: mean(|m| m.average_precision),
        mrr: mean(|m| m.reciprocal_rank),
        cutoff,
        users_evaluated: n,
        users_without_test,
    })
}

/// One grid point and its evaluation, or why it failed.
#[derive(Debug, Clone)]
pub struct GridTrial<T> {
    pub params: HyperParams,
    pub outcome: std::result::Result<EvalReport<T>, String>,
}

#[derive(Debug, Clone)]
pub struct GridSearchOutcome<T> {
    pub best: HyperParams,
    pub best_index: usize,
    pub best_report: EvalReport<T>,
    pub trials: Vec<GridTrial<T>>,
}

/// Trains and evaluates a model on `train` / `valid` with the given parameters.
pub fn evaluate_config<T: Real>(
    kind: ModelKind,
    train: &InteractionDataset,
    catalog: &ItemFeatureCatalog,
    valid: &InteractionDataset,
    params: &HyperParams,
    cutoff: usize,
    seed: u64,
) -> Result<EvalReport<T>> {
    let model = recommenders::train::<T>(kind, train, catalog, params, seed)?;
    let lists = recommenders::recommend_all(&model, cutoff)?;
    rank_metrics(&lists, valid, cutoff)
}

/// Exhaustive search; the first configuration reaching the best `metric` wins.
#[allow(clippy::too_many_arguments)]
pub fn grid_search<T: Real>(
    kind: ModelKind,
    train: &InteractionDataset,
    catalog: &ItemFeatureCatalog,
    valid: &InteractionDataset,
    grid: &[HyperParams],
    metric: RankMetric,
    cutoff: usize,
    seed: u64,
) -> Result<GridSearchOutcome<T>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    let mut trials = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, EvalReport<T>)> = None;
    for (idx, params) in grid.iter().enumerate() {
        let outcome = evaluate_config(kind, train, catalog, valid, params, cutoff, seed);
        match &outcome {
            Ok(report) => {
                log::info!("{kind} [{params}] {metric}@{cutoff} = {}", metric.value(report));
                if best
                    .as_ref()
                    .is_none_or(|(_, b)| metric.value(report) > metric.value(b))
                {
                    best = Some((idx, *report));
                }
            }
            Err(e) => log::warn!("{kind} [{params}] failed: {e}"),
        }
        trials.push(GridTrial {
            params: params.clone(),
            outcome: outcome.map_err(|e| e.to_string()),
        });
    }
    match best {
        Some((best_index, best_report)) => Ok(GridSearchOutcome {
            best: grid[best_index].clone(),
            best_index,
            best_report,
            trials,
        }),
        None => Err(Error::GridExhausted(
            trials
                .iter()
                .filter_map(|t| t.outcome.as_ref().err().map(|e| format!("[{}] {e}", t.params)))
                .collect::<Vec<_>>()
                .join("; "),
        )),
    }
}
