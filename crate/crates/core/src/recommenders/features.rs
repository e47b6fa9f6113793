use std::fmt;
use std::str::FromStr;

use crate::data::ItemFeatureCatalog;
use crate::{Error, Real};

/// How an item's genre set becomes a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureWeighting {
    Binary,
    /// Presence times `ln(items / items_with_genre)`.
    TfIdf,
}

impl FromStr for FeatureWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "binary" => Ok(Self::Binary),
            "tfidf" | "tf-idf" => Ok(Self::TfIdf),
            other => Err(Error::Config(format!("unknown feature weighting `{other}`"))),
        }
    }
}

impl fmt::Display for FeatureWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Binary => "binary",
            Self::TfIdf => "tfidf",
        })
    }
}

/// Dense genre vectors, one per catalog item.
pub(crate) fn item_vectors<T: Real>(catalog: &ItemFeatureCatalog, weighting: FeatureWeighting) -> Vec<Vec<T>> {
    let dims = catalog.num_features();
    let weights: Vec<T> = match weighting {
        FeatureWeighting::Binary => vec![T::one(); dims],
        FeatureWeighting::TfIdf => {
            let mut df = vec![0usize; dims];
            for item in 0..catalog.num_items() {
                for &f in catalog.features(item) {
                    df[f] += 1;
                }
            }
            let n = T::from_count(catalog.num_items());
            df.into_iter()
                .map(|d| if d == 0 { T::zero() } else { (n / T::from_count(d)).ln() })
                .collect()
        }
    };
    (0..catalog.num_items())
        .map(|item| {
            let mut v = vec![T::zero(); dims];
            for &f in catalog.features(item) {
                v[f] = weights[f];
            }
            v
        })
        .collect()
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
