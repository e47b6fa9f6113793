use std::fmt;
use std::str::FromStr;

use super::features::{dot, norm};
use crate::{Error, Real};

/// How rated items are combined into a user profile vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileAggregation {
    Mean,
    RatingWeighted,
}

impl FromStr for ProfileAggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "mean" => Ok(Self::Mean),
            "rating-weighted" => Ok(Self::RatingWeighted),
            other => Err(Error::Config(format!("unknown profile aggregation `{other}`"))),
        }
    }
}

impl fmt::Display for ProfileAggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mean => "mean",
            Self::RatingWeighted => "rating-weighted",
        })
    }
}

/// Users and items in the same genre space; scores are cosines.
#[derive(Debug, Clone)]
pub(crate) struct VectorSpace<T> {
    items: Vec<Vec<T>>,
    item_norms: Vec<T>,
    users: Vec<Vec<T>>,
    user_norms: Vec<T>,
}

impl<T: Real> VectorSpace<T> {
    pub(crate) fn build(items: Vec<Vec<T>>, ratings: &[Vec<(usize, f64)>], aggregation: ProfileAggregation) -> Self {
        let dims = items.first().map_or(0, Vec::len);
        let users: Vec<Vec<T>> = ratings
            .iter()
            .map(|rated| {
                let mut profile = vec![T::zero(); dims];
                let mut total = T::zero();
                for &(item, rating) in rated {
                    let w = match aggregation {
                        ProfileAggregation::Mean => T::one(),
                        ProfileAggregation::RatingWeighted => T::lit(rating),
                    };
                    total = total + w;
                    for (p, &x) in profile.iter_mut().zip(&items[item]) {
                        *p = *p + w * x;
                    }
                }
                if total > T::zero() {
                    profile.iter_mut().for_each(|p| *p = *p / total);
                }
                profile
            })
            .collect();
        Self {
            item_norms: items.iter().map(|v| norm(v)).collect(),
            user_norms: users.iter().map(|v| norm(v)).collect(),
            items,
            users,
        }
    }

    pub(crate) fn score(&self, user: usize, item: usize) -> T {
        let denom = self.user_norms[user] * self.item_norms[item];
        if denom > T::zero() {
            dot(&self.users[user], &self.items[item]) / denom
        } else {
            T::zero()
        }
    }
}
