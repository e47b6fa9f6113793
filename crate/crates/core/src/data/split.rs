use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Interaction, InteractionDataset, ItemFeatureCatalog};
use crate::{Error, Result};

/// Per-user random holdout. `train` and `test` share the source vocabularies.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTestSplit {
    pub train: InteractionDataset,
    pub test: InteractionDataset,
    pub seed: u64,
    pub ratio: f64,
}

/// For each user, `ceil(ratio * |profile|)` shuffled transactions go to train
/// and the rest to test. Users with fewer than two transactions stay whole in
/// train.
pub fn split(ds: &InteractionDataset, ratio: f64, seed: u64) -> Result<TrainTestSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(ds.transactions().len());
    let mut test = Vec::new();
    // transactions are sorted by user, so each chunk is one profile
    for profile in ds.transactions().chunk_by(|a, b| a.user == b.user) {
        if profile.len() < 2 {
            train.extend_from_slice(profile);
            continue;
        }
        let mut shuffled: Vec<Interaction> = profile.to_vec();
        shuffled.shuffle(&mut rng);
        let n_train = train_size(profile.len(), ratio);
        train.extend_from_slice(&shuffled[..n_train]);
        test.extend_from_slice(&shuffled[n_train..]);
    }
    Ok(TrainTestSplit {
        train: ds.with_transactions(train),
        test: ds.with_transactions(test),
        seed,
        ratio,
    })
}

fn train_size(n: usize, ratio: f64) -> usize {
    // slack keeps 0.7 * 10 from rounding up to 8
    let exact = ratio * n as f64;
    ((exact - 1e-9).ceil() as usize).clamp(1, n)
}

/// A split re-indexed onto the items that occur in its training half.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedSplit {
    pub split: TrainTestSplit,
    pub catalog: ItemFeatureCatalog,
    /// Test transactions removed because their item never occurs in train.
    pub dropped_test_transactions: usize,
}

impl TrainTestSplit {
    /// Restricts the item vocabulary to items with at least one training
    /// transaction, so every model sees the same candidate set as the
    /// popularity sampler. Test transactions on other items are dropped.
    pub fn restrict_to_train_items(&self, catalog: &ItemFeatureCatalog) -> Result<RestrictedSplit> {
        if catalog.num_items() != self.train.num_items() {
            return Err(Error::InvalidDataset(format!(
                "catalog covers {} items but the dataset has {}",
                catalog.num_items(),
                self.train.num_items()
            )));
        }
        let counts = self.train.item_counts();
        let kept: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] > 0).collect();
        let mut remap = vec![usize::MAX; counts.len()];
        for (new, &old) in kept.iter().enumerate() {
            remap[old] = new;
        }
        let item_ids: Vec<u64> = kept.iter().map(|&i| self.train.item_ids()[i]).collect();
        let reindex = |txs: &[Interaction]| -> Vec<Interaction> {
            txs.iter()
                .filter(|t| remap[t.item] != usize::MAX)
                .map(|t| Interaction {
                    item: remap[t.item],
                    ..*t
                })
                .collect()
        };
        let train_txs = reindex(self.train.transactions());
        let test_txs = reindex(self.test.transactions());
        let dropped = self.test.transactions().len() - test_txs.len();
        let user_ids = self.train.user_ids().to_vec();
        Ok(RestrictedSplit {
            split: TrainTestSplit {
                train: InteractionDataset::new(user_ids.clone(), item_ids.clone(), train_txs)?,
                test: InteractionDataset::new(user_ids, item_ids, test_txs)?,
                seed: self.seed,
                ratio: self.ratio,
            },
            catalog: catalog.select_items(&kept),
            dropped_test_transactions: dropped,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use proptest::prelude::*;

    use super::*;

    fn corpus(profile_sizes: &[usize], n_items: usize) -> InteractionDataset {
        let mut txs = Vec::new();
        for (u, &size) in profile_sizes.iter().enumerate() {
            for k in 0..size {
                txs.push(Interaction {
                    user: u,
                    item: (u * 7 + k * 3) % n_items,
                    rating: 1.0 + (k % 5) as f64,
                    timestamp: Some(k as i64),
                });
            }
        }
        txs.sort_by_key(|t| (t.user, t.item));
        txs.dedup_by_key(|t| (t.user, t.item));
        InteractionDataset::new(
            (0..profile_sizes.len() as u64).collect(),
            (0..n_items as u64).map(|i| i * 10).collect(),
            txs,
        )
        .unwrap()
    }

    #[test]
    fn ten_ratings_at_eighty_percent() {
        let ds = corpus(&[10], 40);
        let s = split(&ds, 0.8, 1).unwrap();
        assert_eq!(s.train.transactions().len(), 8);
        assert_eq!(s.test.transactions().len(), 2);
    }

    #[test]
    fn ceil_is_not_fooled_by_float_error() {
        assert_eq!(train_size(10, 0.7), 7);
        assert_eq!(train_size(10, 0.8), 8);
        assert_eq!(train_size(5, 0.8), 4);
        assert_eq!(train_size(3, 0.5), 2);
    }

    #[test]
    fn small_profiles_stay_in_train() {
        let ds = corpus(&[1, 2], 40);
        let s = split(&ds, 0.5, 3).unwrap();
        assert_eq!(s.train.transactions().len(), 2);
        assert_eq!(s.test.transactions().len(), 1);
        assert!(s.test.transactions().iter().all(|t| t.user == 1));
    }

    #[test]
    fn ratio_out_of_range() {
        let ds = corpus(&[4], 10);
        for r in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(split(&ds, r, 0), Err(Error::InvalidArgument(_))));
        }
    }

    #[test]
    fn same_seed_same_split() {
        let ds = corpus(&[12, 30, 7, 2], 97);
        assert_eq!(split(&ds, 0.8, 42).unwrap(), split(&ds, 0.8, 42).unwrap());
        assert_ne!(split(&ds, 0.8, 42).unwrap(), split(&ds, 0.8, 43).unwrap());
    }

    #[test]
    fn hundred_user_recount() {
        let sizes: Vec<usize> = (0..100).map(|u| 1 + (u * 13) % 37).collect();
        let ds = corpus(&sizes, 211);
        let s = split(&ds, 0.8, 7).unwrap();

        let mut per_user: HashMap<usize, usize> = HashMap::new();
        for t in ds.transactions() {
            *per_user.entry(t.user).or_default() += 1;
        }
        let (mut want_train, mut want_test) = (0, 0);
        for &n in per_user.values() {
            let tr = if n < 2 {
                n
            } else {
                (0.8 * n as f64 - 1e-9).ceil() as usize
            };
            want_train += tr;
            want_test += n - tr;
        }
        assert_eq!(s.train.transactions().len(), want_train);
        assert_eq!(s.test.transactions().len(), want_test);
    }

    #[test]
    fn restriction_drops_cold_items() {
        let ds = InteractionDataset::new(
            vec![1, 2],
            vec![10, 20, 30],
            vec![
                Interaction {
                    user: 0,
                    item: 0,
                    rating: 1.0,
                    timestamp: None,
                },
                Interaction {
                    user: 0,
                    item: 2,
                    rating: 1.0,
                    timestamp: None,
                },
                Interaction {
                    user: 1,
                    item: 1,
                    rating: 1.0,
                    timestamp: None,
                },
            ],
        )
        .unwrap();
        let s = TrainTestSplit {
            train: ds.with_transactions(vec![ds.transactions()[0], ds.transactions()[2]]),
            test: ds.with_transactions(vec![ds.transactions()[1]]),
            seed: 0,
            ratio: 0.5,
        };
        let catalog =
            ItemFeatureCatalog::new(vec!["A".into(), "B".into()], vec![vec![0], vec![1], vec![0, 1]]).unwrap();
        let r = s.restrict_to_train_items(&catalog).unwrap();
        assert_eq!(r.split.train.item_ids(), &[10, 20]);
        assert_eq!(r.dropped_test_transactions, 1);
        assert!(r.split.test.is_empty());
        assert_eq!(r.catalog.num_items(), 2);
    }

    proptest! {
        #[test]
        fn split_is_a_partition(
            sizes in proptest::collection::vec(1usize..25, 1..30),
            ratio in 0.05f64..0.95,
            seed in any::<u64>(),
        ) {
            let ds = corpus(&sizes, 53);
            let s = split(&ds, ratio, seed).unwrap();
            let mut union: Vec<_> = s.train.transactions().iter()
                .chain(s.test.transactions())
                .map(|t| (t.user, t.item))
                .collect();
            union.sort();
            let source: Vec<_> = ds.transactions().iter().map(|t| (t.user, t.item)).collect();
            prop_assert_eq!(union, source);
            let train_users: std::collections::HashSet<_> =
                s.train.transactions().iter().map(|t| t.user).collect();
            prop_assert!(s.test.transactions().iter().all(|t| train_users.contains(&t.user)));
        }
    }
}
