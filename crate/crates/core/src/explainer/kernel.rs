use std::fmt;
use std::str::FromStr;

use super::Instance;
use crate::data::ItemFeatureCatalog;
use crate::{Error, Real, Result};

/// Distance between two genre sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    /// `1 - cos` of the unit-normalised indicator vectors.
    Cosine,
    /// `1 - |A ∩ B| / |A ∪ B|`.
    Jaccard,
}

impl FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Self::Cosine),
            "jaccard" => Ok(Self::Jaccard),
            other => Err(Error::Config(format!("unknown distance `{other}`"))),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Cosine => "cosine",
            Self::Jaccard => "jaccard",
        })
    }
}

/// Exponential kernel `exp(-D^2 / sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig<T> {
    pub sigma: T,
    pub distance: Distance,
}

impl<T: Real> KernelConfig<T> {
    pub fn new(sigma: T, distance: Distance) -> Result<Self> {
        if !(sigma > T::zero() && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kernel width must be positive, got {sigma}"
            )));
        }
        Ok(Self { sigma, distance })
    }

    /// Weight for a pair of sorted, non-empty genre sets.
    pub fn weight(&self, a: &[usize], b: &[usize]) -> T {
        let d = set_distance::<T>(a, b, self.distance);
        (-(d * d) / (self.sigma * self.sigma)).exp()
    }
}

impl<T: Real> Default for KernelConfig<T> {
    fn default() -> Self {
        Self {
            sigma: T::lit(0.25),
            distance: Distance::Cosine,
        }
    }
}

fn intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

pub(crate) fn set_distance<T: Real>(a: &[usize], b: &[usize], distance: Distance) -> T {
    let common = intersection(a, b);
    let d = match distance {
        Distance::Cosine => T::one() - T::from_count(common) / (T::from_count(a.len()) * T::from_count(b.len())).sqrt(),
        Distance::Jaccard => T::one() - T::from_count(common) / T::from_count(a.len() + b.len() - common),
    };
    d.max(T::zero())
}

/// `pi_x(x')` over the genre sets of the two instances' items.
pub fn kernel_weight<T: Real>(
    x: Instance,
    x_prime: Instance,
    cfg: &KernelConfig<T>,
    catalog: &ItemFeatureCatalog,
) -> Result<T> {
    Ok(cfg.weight(catalog.try_features(x.item)?, catalog.try_features(x_prime.item)?))
}
