use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Instance;
use crate::data::PopularityDistribution;
use crate::{Error, Real, Result};

/// Inverse-CDF sampler over item popularity.
#[derive(Debug, Clone)]
pub struct PopularitySampler<T> {
    cumulative: Vec<T>,
    last_positive: usize,
}

impl<T: Real> PopularitySampler<T> {
    pub fn new(pop: &PopularityDistribution<T>) -> Result<Self> {
        let mut acc = T::zero();
        let cumulative: Vec<T> = pop
            .probs()
            .iter()
            .map(|&p| {
                acc = acc + p;
                acc
            })
            .collect();
        let last_positive = pop
            .probs()
            .iter()
            .rposition(|&p| p > T::zero())
            .ok_or_else(|| Error::InvalidArgument("popularity distribution has no mass".into()))?;
        Ok(Self {
            cumulative,
            last_positive,
        })
    }

    pub fn num_items(&self) -> usize {
        self.cumulative.len()
    }

    /// Item whose cumulative interval contains a uniform draw.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u = T::lit(rng.random::<f64>()) * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.last_positive)
    }
}

/// Random stream for one (instance, seed): the seed picks the key and the
/// user picks the stream, so users never share neighbourhoods.
pub(crate) fn rng_for(x: Instance, seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(x.user as u64);
    rng
}

pub(crate) fn sample_with<T: Real>(
    sampler: &PopularitySampler<T>,
    x: Instance,
    m: usize,
    seed: u64,
) -> Result<Vec<Instance>> {
    if m == 0 {
        return Err(Error::InvalidArgument("neighbourhood size must be at least 1".into()));
    }
    let mut rng = rng_for(x, seed);
    Ok((0..m)
        .map(|_| Instance {
            user: x.user,
            item: sampler.draw(&mut rng),
        })
        .collect())
}

/// `m` real instances for `x`'s user, items drawn i.i.d. by popularity with
/// replacement (`x`'s own item included). No synthetic points are produced.
pub fn sample_neighborhood<T: Real>(
    x: Instance,
    m: usize,
    pop: &PopularityDistribution<T>,
    seed: u64,
) -> Result<Vec<Instance>> {
    sample_with(&PopularitySampler::new(pop)?, x, m, seed)
}
