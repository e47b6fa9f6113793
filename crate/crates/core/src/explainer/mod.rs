//! Local surrogate explanations over the genre space.
//!
//! The neighbourhood of a (user, item) instance is built from real items of
//! the catalog drawn by popularity, never from perturbed feature vectors.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::data::{ItemFeatureCatalog, PopularityDistribution};
use crate::recommenders::BlackBox;
use crate::{Error, Real, Result};

mod kernel;
mod sampling;
mod surrogate;

pub use kernel::{kernel_weight, Distance, KernelConfig};
pub use sampling::{sample_neighborhood, PopularitySampler};
pub use surrogate::{fit_surrogate, weighted_ridge, LinearSurrogate, RidgeSolution};

/// A (user, item) pair in training index space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Instance {
    pub user: usize,
    pub item: usize,
}

/// Genre indicator vector of an item.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InterpretablePoint(Vec<bool>);

impl InterpretablePoint {
    pub fn from_bools(z: Vec<bool>) -> Self {
        Self(z)
    }

    pub fn from_features(features: &[usize], dims: usize) -> Result<Self> {
        let mut z = vec![false; dims];
        for &f in features {
            *z.get_mut(f)
                .ok_or_else(|| Error::IndexOutOfRange(format!("feature {f} of {dims}")))? = true;
        }
        Ok(Self(z))
    }

    /// The point realised by `item`.
    pub fn of(catalog: &ItemFeatureCatalog, item: usize) -> Result<Self> {
        Self::from_features(catalog.try_features(item)?, catalog.num_features())
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, feature: usize) -> bool {
        self.0[feature]
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &on)| on).map(|(f, _)| f)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

/// One neighbourhood row: black-box target and proximity weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSample<T> {
    pub instance: Instance,
    pub z: InterpretablePoint,
    pub target: T,
    pub weight: T,
}

/// How neighbourhood samples are weighted in the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleWeighting {
    #[default]
    Kernel,
    Uniform,
}

impl FromStr for SampleWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel" => Ok(Self::Kernel),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::Config(format!("unknown sample weighting `{other}`"))),
        }
    }
}

impl fmt::Display for SampleWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Kernel => "kernel",
            Self::Uniform => "uniform",
        })
    }
}

/// Order of the reported (feature, weight) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightOrdering {
    /// Descending signed weight.
    #[default]
    Signed,
    /// Descending |weight|.
    Absolute,
}

impl FromStr for WeightOrdering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signed" => Ok(Self::Signed),
            "absolute" => Ok(Self::Absolute),
            other => Err(Error::Config(format!("unknown weight ordering `{other}`"))),
        }
    }
}

impl fmt::Display for WeightOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Signed => "signed",
            Self::Absolute => "absolute",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplainerConfig<T> {
    /// Neighbourhood size `m`.
    pub samples: usize,
    pub kernel: KernelConfig<T>,
    pub l2_lambda: T,
    pub top_k: usize,
    pub weighting: SampleWeighting,
    pub ordering: WeightOrdering,
}

impl<T: Real> Default for ExplainerConfig<T> {
    fn default() -> Self {
        Self {
            samples: 1000,
            kernel: KernelConfig::default(),
            l2_lambda: T::lit(0.01),
            top_k: 5,
            weighting: SampleWeighting::Kernel,
            ordering: WeightOrdering::Signed,
        }
    }
}

impl<T: Real> ExplainerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::Config(format!(
                "samples must be at least 2, got {}",
                self.samples
            )));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if !(self.l2_lambda >= T::zero() && self.l2_lambda.is_finite()) {
            return Err(Error::Config(format!("l2_lambda must be >= 0, got {}", self.l2_lambda)));
        }
        KernelConfig::new(self.kernel.sigma, self.kernel.distance).map(|_| ())
    }
}

fn pair_order<T: Real>(ordering: WeightOrdering) -> impl Fn(&(usize, T), &(usize, T)) -> Ordering {
    move |a, b| {
        let (wa, wb) = match ordering {
            WeightOrdering::Signed => (a.1, b.1),
            WeightOrdering::Absolute => (a.1.abs(), b.1.abs()),
        };
        wb.partial_cmp(&wa).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0))
    }
}

/// Ranked (feature, weight) pairs for one instance and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation<T> {
    pub instance: Instance,
    pub seed: u64,
    pairs: Vec<(usize, T)>,
    ordering: WeightOrdering,
    /// The neighbourhood had a single genre set.
    pub low_variance: bool,
}

impl<T: Real> Explanation<T> {
    /// Sorts `pairs` by `ordering`, ties to the lower feature index.
    pub fn new(instance: Instance, seed: u64, mut pairs: Vec<(usize, T)>, ordering: WeightOrdering) -> Result<Self> {
        let mut seen = HashSet::new();
        if let Some(&(f, _)) = pairs.iter().find(|(f, _)| !seen.insert(*f)) {
            return Err(Error::InvalidArgument(format!(
                "feature {f} appears twice in an explanation"
            )));
        }
        if pairs.iter().any(|(_, w)| !w.is_finite()) {
            return Err(Error::InvalidArgument("explanation weights must be finite".into()));
        }
        pairs.sort_by(pair_order(ordering));
        Ok(Self {
            instance,
            seed,
            pairs,
            ordering,
            low_variance: false,
        })
    }

    pub fn pairs(&self) -> &[(usize, T)] {
        &self.pairs
    }

    pub fn ordering(&self) -> WeightOrdering {
        self.ordering
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Feature at 1-based position `k`.
    pub fn feature_at(&self, k: usize) -> Option<usize> {
        k.checked_sub(1).and_then(|i| self.pairs.get(i)).map(|&(f, _)| f)
    }

    /// Features in ranked order.
    pub fn features(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().map(|&(f, _)| f)
    }
}

/// Explanations of one instance under distinct seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationEnsemble<T> {
    instance: Instance,
    explanations: Vec<Explanation<T>>,
}

impl<T: Real> ExplanationEnsemble<T> {
    pub fn new(explanations: Vec<Explanation<T>>) -> Result<Self> {
        let instance = explanations
            .first()
            .ok_or_else(|| Error::InvalidArgument("an ensemble needs at least one explanation".into()))?
            .instance;
        if let Some(e) = explanations.iter().find(|e| e.instance != instance) {
            return Err(Error::InvalidArgument(format!(
                "ensemble mixes instances {instance:?} and {:?}",
                e.instance
            )));
        }
        check_distinct(explanations.iter().map(|e| e.seed))?;
        Ok(Self { instance, explanations })
    }

    pub fn instance(&self) -> Instance {
        self.instance
    }

    pub fn explanations(&self) -> &[Explanation<T>] {
        &self.explanations
    }

    pub fn n(&self) -> usize {
        self.explanations.len()
    }
}

fn check_distinct(seeds: impl IntoIterator<Item = u64>) -> Result<()> {
    let mut seen = HashSet::new();
    for s in seeds {
        if !seen.insert(s) {
            return Err(Error::InvalidArgument(format!("seed {s} is repeated")));
        }
    }
    Ok(())
}

/// Explainer bound to one black box, catalog and popularity distribution.
pub struct LimeRs<'a, T, M: ?Sized> {
    model: &'a M,
    catalog: &'a ItemFeatureCatalog,
    sampler: PopularitySampler<T>,
    points: Vec<InterpretablePoint>,
    cfg: ExplainerConfig<T>,
}

impl<'a, T: Real, M: BlackBox<T> + ?Sized> LimeRs<'a, T, M> {
    pub fn new(
        model: &'a M,
        catalog: &'a ItemFeatureCatalog,
        pop: &PopularityDistribution<T>,
        cfg: ExplainerConfig<T>,
    ) -> Result<Self> {
        cfg.validate()?;
        if catalog.num_items() != model.num_items() || pop.len() != model.num_items() {
            return Err(Error::InvalidArgument(format!(
                "model has {} items, catalog {} and popularity {}",
                model.num_items(),
                catalog.num_items(),
                pop.len()
            )));
        }
        let points = (0..catalog.num_items())
            .map(|i| InterpretablePoint::of(catalog, i))
            .collect::<Result<_>>()?;
        Ok(Self {
            model,
            catalog,
            sampler: PopularitySampler::new(pop)?,
            points,
            cfg,
        })
    }

    pub fn config(&self) -> &ExplainerConfig<T> {
        &self.cfg
    }

    fn check(&self, x: Instance) -> Result<()> {
        if x.user >= self.model.num_users() || x.item >= self.model.num_items() {
            return Err(Error::IndexOutOfRange(format!(
                "instance (user {}, item {}) outside {} users x {} items",
                x.user,
                x.item,
                self.model.num_users(),
                self.model.num_items()
            )));
        }
        Ok(())
    }

    /// Scored and weighted neighbourhood of `x` for `seed`.
    pub fn surrogate_samples(&self, x: Instance, seed: u64) -> Result<Vec<SurrogateSample<T>>> {
        self.check(x)?;
        let neighbourhood = sampling::sample_with(&self.sampler, x, self.cfg.samples, seed)?;
        let scores = match self.model.score_all(x.user) {
            Ok(s) if s.len() == self.model.num_items() => s,
            _ => return Err(self.first_failure(&neighbourhood)),
        };
        let origin = self.catalog.features(x.item);
        neighbourhood
            .into_iter()
            .enumerate()
            .map(|(s, xp)| {
                let target = scores[xp.item];
                if !target.is_finite() {
                    return Err(Error::Scoring {
                        sample: s,
                        user: xp.user,
                        item: xp.item,
                        reason: format!("non-finite score {target}"),
                    });
                }
                let weight = match self.cfg.weighting {
                    SampleWeighting::Kernel => self.cfg.kernel.weight(origin, self.catalog.features(xp.item)),
                    SampleWeighting::Uniform => T::one(),
                };
                Ok(SurrogateSample {
                    instance: xp,
                    z: self.points[xp.item].clone(),
                    target,
                    weight,
                })
            })
            .collect()
    }

    fn first_failure(&self, neighbourhood: &[Instance]) -> Error {
        for (s, xp) in neighbourhood.iter().enumerate() {
            if let Err(e) = self.model.score(xp.user, xp.item) {
                return Error::Scoring {
                    sample: s,
                    user: xp.user,
                    item: xp.item,
                    reason: e.to_string(),
                };
            }
        }
        Error::Scoring {
            sample: 0,
            user: neighbourhood.first().map_or(0, |x| x.user),
            item: neighbourhood.first().map_or(0, |x| x.item),
            reason: "bulk scoring failed".into(),
        }
    }

    pub fn surrogate(&self, x: Instance, seed: u64) -> Result<LinearSurrogate<T>> {
        let samples = self.surrogate_samples(x, seed)?;
        fit_surrogate(&samples, self.cfg.l2_lambda, self.cfg.top_k)
    }

    pub fn explain(&self, x: Instance, seed: u64) -> Result<Explanation<T>> {
        let fit = self.surrogate(x, seed)?;
        let pairs = fit.selected.iter().map(|&f| (f, fit.weights[f])).collect();
        let mut e = Explanation::new(x, seed, pairs, self.cfg.ordering)?;
        e.low_variance = fit.degenerate;
        Ok(e)
    }

    /// One explanation per seed, in seed order.
    pub fn explain_ensemble(&self, x: Instance, seeds: &[u64]) -> Result<ExplanationEnsemble<T>> {
        if seeds.is_empty() {
            return Err(Error::InvalidArgument("at least one seed is required".into()));
        }
        check_distinct(seeds.iter().copied())?;
        let explanations = seeds.iter().map(|&s| self.explain(x, s)).collect::<Result<_>>()?;
        ExplanationEnsemble::new(explanations)
    }
}

pub fn explain<T: Real, M: BlackBox<T> + ?Sized>(
    model: &M,
    catalog: &ItemFeatureCatalog,
    pop: &PopularityDistribution<T>,
    x: Instance,
    cfg: &ExplainerConfig<T>,
    seed: u64,
) -> Result<Explanation<T>> {
    LimeRs::new(model, catalog, pop, *cfg)?.explain(x, seed)
}

pub fn explain_ensemble<T: Real, M: BlackBox<T> + ?Sized>(
    model: &M,
    catalog: &ItemFeatureCatalog,
    pop: &PopularityDistribution<T>,
    x: Instance,
    cfg: &ExplainerConfig<T>,
    seeds: &[u64],
) -> Result<ExplanationEnsemble<T>> {
    LimeRs::new(model, catalog, pop, *cfg)?.explain_ensemble(x, seeds)
}
