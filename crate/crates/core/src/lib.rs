//! Local surrogate explanations (LIME-RS style) for content-based recommenders,
//! plus the constancy and adherence metrics that measure how stable and how
//! faithful those explanations are.
//!
//! The numerical core is generic over the scalar type: [`Real`] covers the
//! floating-point math (recommender scores, kernel weights, ridge fits) and
//! [`Frequency`] covers the stability metrics, which also run on exact
//! rationals. The aliases below pin everything to `f64`, which is what the
//! experiment runner uses.

pub mod data;
pub mod error;
pub mod explainer;
pub mod ranking_eval;
pub mod recommenders;
pub mod runner;
pub mod scalar;
pub mod stability;

mod table;

pub use error::{Error, Result};
pub use scalar::{Frequency, Real};

/// Exact frequency type for the stability metrics.
pub type Rational = num_rational::Ratio<i64>;

pub type PopularityDistribution = data::PopularityDistribution<f64>;
pub type Recommender = recommenders::Recommender<f64>;
pub type RecommendationList = recommenders::RecommendationList<f64>;
pub type EvalReport = ranking_eval::EvalReport<f64>;
pub type KernelConfig = explainer::KernelConfig<f64>;
pub type ExplainerConfig = explainer::ExplainerConfig<f64>;
pub type SurrogateSample = explainer::SurrogateSample<f64>;
pub type LinearSurrogate = explainer::LinearSurrogate<f64>;
pub type Explanation = explainer::Explanation<f64>;
pub type ExplanationEnsemble = explainer::ExplanationEnsemble<f64>;
pub type StabilityReport = stability::StabilityReport<f64>;
