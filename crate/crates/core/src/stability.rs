//! Constancy and adherence of re-seeded explanation ensembles.

use std::collections::BTreeMap;

use log::debug;
use rayon::prelude::*;

use crate::data::ItemFeatureCatalog;
use crate::explainer::ExplanationEnsemble;
use crate::{Error, Frequency, Real, Result};

pub const MAX_POSITION: usize = 5;
pub const MAX_ADHERENCE_DEPTH: usize = 3;

/// `G_k`: how often each feature sits at position `k` across an ensemble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionMultiset {
    pub k: usize,
    pub counts: BTreeMap<usize, usize>,
    /// Explanations with fewer than `k` features.
    pub skipped: usize,
}

impl PositionMultiset {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn max_count(&self) -> usize {
        self.counts.values().copied().max().unwrap_or(0)
    }
}

fn check_position(k: usize) -> Result<()> {
    if (1..=MAX_POSITION).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "position k must be in 1..={MAX_POSITION}, got {k}"
        )))
    }
}

pub fn position_multiset<T: Real>(ens: &ExplanationEnsemble<T>, k: usize) -> Result<PositionMultiset> {
    check_position(k)?;
    let mut counts = BTreeMap::new();
    let mut skipped = 0;
    for e in ens.explanations() {
        match e.feature_at(k) {
            Some(f) => *counts.entry(f).or_insert(0) += 1,
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        debug!("{skipped} explanation(s) of {:?} shorter than {k}", ens.instance());
    }
    Ok(PositionMultiset { k, counts, skipped })
}

/// `f_{g,k} = count / n` for every feature present in the multiset.
pub fn genre_frequency<F: Frequency>(ms: &PositionMultiset, n: usize) -> Result<BTreeMap<usize, F>> {
    if n == 0 || ms.total() > n {
        return Err(Error::InvalidArgument(format!(
            "multiset holds {} entries but n = {n}",
            ms.total()
        )));
    }
    Ok(ms
        .counts
        .iter()
        .map(|(&g, &c)| (g, F::from_count(c) / F::from_count(n)))
        .collect())
}

fn shared_n<T>(ensembles: &[ExplanationEnsemble<T>]) -> Result<usize>
where
    T: Real,
{
    let n = ensembles
        .first()
        .ok_or_else(|| Error::InvalidArgument("no users to aggregate over".into()))?
        .n();
    if let Some(e) = ensembles.iter().find(|e| e.n() != n) {
        return Err(Error::InvalidArgument(format!(
            "ensembles disagree on n: {n} and {} (user {})",
            e.n(),
            e.instance().user
        )));
    }
    Ok(n)
}

/// `max_g f_{g,k}` for each user, in input order.
pub fn per_user_max_frequencies<F, T>(ensembles: &[ExplanationEnsemble<T>], k: usize) -> Result<Vec<F>>
where
    F: Frequency + Send,
    T: Real,
{
    check_position(k)?;
    let n = shared_n(ensembles)?;
    ensembles
        .par_iter()
        .map(|ens| {
            let ms = position_multiset(ens, k)?;
            Ok(F::from_count(ms.max_count()) / F::from_count(n))
        })
        .collect()
}

fn mean<F: Frequency>(values: &[F]) -> F {
    values.iter().fold(F::zero(), |acc, &v| acc + v) / F::from_count(values.len())
}

/// `mu_k`: mean over users of the largest position-`k` frequency.
pub fn constancy_mu<F, T>(ensembles: &[ExplanationEnsemble<T>], k: usize) -> Result<F>
where
    F: Frequency + Send,
    T: Real,
{
    Ok(mean(&per_user_max_frequencies::<F, T>(ensembles, k)?))
}

/// Fraction of explanations whose first `k` features miss every true feature
/// of the explained item. Short explanations use the prefix they have.
pub fn adherence<F, T>(ensembles: &[ExplanationEnsemble<T>], catalog: &ItemFeatureCatalog, k: usize) -> Result<F>
where
    F: Frequency + Send,
    T: Real,
{
    if !(1..=MAX_ADHERENCE_DEPTH).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "adherence depth must be in 1..={MAX_ADHERENCE_DEPTH}, got {k}"
        )));
    }
    let n = shared_n(ensembles)?;
    let misses = ensembles
        .par_iter()
        .map(|ens| {
            let truth = catalog.try_features(ens.instance().item)?;
            let mut short = 0;
            let misses = ens
                .explanations()
                .iter()
                .filter(|e| {
                    if e.len() < k {
                        short += 1;
                    }
                    e.features().take(k).all(|f| truth.binary_search(&f).is_err())
                })
                .count();
            if short > 0 {
                debug!(
                    "{short} explanation(s) of {:?} shorter than {k}; prefix used",
                    ens.instance()
                );
            }
            Ok(misses)
        })
        .collect::<Result<Vec<usize>>>()?;
    let total: usize = misses.iter().sum();
    Ok(F::from_count(total) / F::from_count(n * ensembles.len()))
}

/// Constancy and adherence for one (model, dataset) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<F> {
    pub model: String,
    pub dataset: String,
    pub n: usize,
    pub users: usize,
    /// `mu_1 .. mu_5`.
    pub mu: [F; MAX_POSITION],
    /// `adherence_1 .. adherence_3`.
    pub adherence: [F; MAX_ADHERENCE_DEPTH],
    /// Explanations skipped for each `mu_k`.
    pub skipped: [usize; MAX_POSITION],
}

pub fn stability_report<F, T>(
    model: &str,
    dataset: &str,
    ensembles: &[ExplanationEnsemble<T>],
    catalog: &ItemFeatureCatalog,
) -> Result<StabilityReport<F>>
where
    F: Frequency + Send,
    T: Real,
{
    let n = shared_n(ensembles)?;
    let mut mu = [F::zero(); MAX_POSITION];
    let mut skipped = [0; MAX_POSITION];
    for k in 1..=MAX_POSITION {
        mu[k - 1] = constancy_mu::<F, T>(ensembles, k)?;
        skipped[k - 1] = ensembles
            .iter()
            .map(|e| position_multiset(e, k).map(|ms| ms.skipped))
            .sum::<Result<usize>>()?;
    }
    let mut adh = [F::zero(); MAX_ADHERENCE_DEPTH];
    for k in 1..=MAX_ADHERENCE_DEPTH {
        adh[k - 1] = adherence::<F, T>(ensembles, catalog, k)?;
    }
    if adh.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Invariant(format!(
            "adherence is not non-increasing in k: {adh:?}"
        )));
    }
    Ok(StabilityReport {
        model: model.to_string(),
        dataset: dataset.to_string(),
        n,
        users: ensembles.len(),
        mu,
        adherence: adh,
        skipped,
    })
}
