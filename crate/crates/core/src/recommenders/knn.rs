use std::collections::HashMap;

use rayon::prelude::*;

use super::features::{dot, norm};
use super::rank_order;
use crate::data::ItemFeatureCatalog;
use crate::Real;

/// Top-k attribute neighbourhoods of every item.
///
/// `sim(i, j) = <v_i, v_j> / (|v_i| |v_j| + shrink)`. Only positive
/// similarities are kept; ties on similarity go to the lower item index.
#[derive(Debug, Clone)]
pub(crate) struct ItemNeighborhoods<T> {
    /// `neighbors[i]`: (j, sim) sorted by ascending j.
    neighbors: Vec<Vec<(usize, T)>>,
    /// `reverse[j]`: (i, sim) for every i that has j as a neighbour, ascending i.
    reverse: Vec<Vec<(usize, T)>>,
}

impl<T: Real> ItemNeighborhoods<T> {
    pub(crate) fn build(vectors: &[Vec<T>], catalog: &ItemFeatureCatalog, k: usize, shrink: T) -> Self {
        let n = vectors.len();
        let k = if k + 1 > n {
            log::warn!("k = {k} exceeds the {} other items; clamping", n.saturating_sub(1));
            n.saturating_sub(1)
        } else {
            k
        };

        // Items with the same genre set share a vector, so similarities are
        // computed once per distinct set.
        let mut group_of = Vec::with_capacity(n);
        let mut groups: Vec<usize> = Vec::new();
        let mut index: HashMap<&[usize], usize> = HashMap::new();
        for item in 0..n {
            let g = *index.entry(catalog.features(item)).or_insert_with(|| {
                groups.push(item);
                groups.len() - 1
            });
            group_of.push(g);
        }
        let norms: Vec<T> = groups.iter().map(|&rep| norm(&vectors[rep])).collect();
        let sim = |a: usize, b: usize| -> T {
            let denom = norms[a] * norms[b] + shrink;
            if denom > T::zero() {
                dot(&vectors[groups[a]], &vectors[groups[b]]) / denom
            } else {
                T::zero()
            }
        };

        // top (k + 1) per group, so each member can drop itself
        let per_group: Vec<Vec<(usize, T)>> = (0..groups.len())
            .into_par_iter()
            .map(|g| {
                let row: Vec<T> = (0..groups.len()).map(|h| sim(g, h)).collect();
                let mut cands: Vec<(usize, T)> = (0..n)
                    .map(|j| (j, row[group_of[j]]))
                    .filter(|&(_, s)| s > T::zero())
                    .collect();
                let keep = (k + 1).min(cands.len());
                if keep > 0 && cands.len() > keep {
                    cands.select_nth_unstable_by(keep - 1, rank_order);
                    cands.truncate(keep);
                }
                cands.sort_by(rank_order);
                cands
            })
            .collect();

        let neighbors: Vec<Vec<(usize, T)>> = (0..n)
            .map(|i| {
                let mut nb: Vec<(usize, T)> = per_group[group_of[i]]
                    .iter()
                    .copied()
                    .filter(|&(j, _)| j != i)
                    .take(k)
                    .collect();
                nb.sort_by_key(|&(j, _)| j);
                nb
            })
            .collect();

        let mut reverse = vec![Vec::new(); n];
        for (i, nb) in neighbors.iter().enumerate() {
            for &(j, s) in nb {
                reverse[j].push((i, s));
            }
        }
        Self { neighbors, reverse }
    }

    /// Sum of similarities between `item` and its neighbours in `profile`.
    pub(crate) fn score(&self, profile: &[usize], item: usize) -> T {
        self.neighbors[item]
            .iter()
            .filter(|(j, _)| profile.binary_search(j).is_ok())
            .fold(T::zero(), |acc, &(_, s)| acc + s)
    }

    /// Same sums for every item; additions happen in ascending neighbour order
    /// exactly as in [`Self::score`], so results agree bit-for-bit.
    pub(crate) fn score_all(&self, profile: &[usize], num_items: usize) -> Vec<T> {
        let mut acc = vec![T::zero(); num_items];
        for &j in profile {
            for &(i, s) in &self.reverse[j] {
                acc[i] = acc[i] + s;
            }
        }
        acc
    }

    #[cfg(test)]
    pub(crate) fn neighbors(&self, item: usize) -> &[(usize, T)] {
        &self.neighbors[item]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Interaction, InteractionDataset};
    use crate::recommenders::features::{item_vectors, FeatureWeighting};
    use crate::recommenders::{train, BlackBox, HyperParams, ModelKind};

    fn catalog() -> ItemFeatureCatalog {
        // 5 items over genres A, B, C
        ItemFeatureCatalog::new(
            vec!["A".into(), "B".into(), "C".into()],
            vec![vec![0], vec![0, 1], vec![1, 2], vec![2], vec![0, 1, 2]],
        )
        .unwrap()
    }

    /// Brute force: full similarity table, explicit top-k selection, then sums.
    fn oracle_scores(cat: &ItemFeatureCatalog, profile: &[usize], k: usize, shrink: f64) -> Vec<f64> {
        let n = cat.num_items();
        let set = |i: usize| cat.features(i).to_vec();
        let sim = |i: usize, j: usize| {
            let (a, b) = (set(i), set(j));
            let common = a.iter().filter(|g| b.contains(g)).count() as f64;
            common / ((a.len() as f64).sqrt() * (b.len() as f64).sqrt() + shrink)
        };
        (0..n)
            .map(|i| {
                let mut others: Vec<(usize, f64)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (j, sim(i, j)))
                    .filter(|p| p.1 > 0.0)
                    .collect();
                others.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                others.truncate(k);
                others.sort_by_key(|p| p.0);
                others
                    .iter()
                    .filter(|(j, _)| profile.contains(j))
                    .map(|p| p.1)
                    .fold(0.0, |a, b| a + b)
            })
            .collect()
    }

    #[test]
    fn scores_match_brute_force_similarity_sums() {
        let cat = catalog();
        let vectors = item_vectors::<f64>(&cat, FeatureWeighting::Binary);
        for k in 1..=5 {
            for shrink in [0.0, 0.5, 10.0] {
                let nb = ItemNeighborhoods::build(&vectors, &cat, k, shrink);
                for profile in [vec![0usize], vec![1, 3], vec![0, 2, 4], vec![]] {
                    let want = oracle_scores(&cat, &profile, k, shrink);
                    let all = nb.score_all(&profile, 5);
                    for i in 0..5 {
                        assert!((all[i] - want[i]).abs() < 1e-12, "k={k} shrink={shrink} i={i}");
                        assert_eq!(all[i].to_bits(), nb.score(&profile, i).to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn hand_computed_neighbourhood() {
        let cat = catalog();
        let nb = ItemNeighborhoods::build(&item_vectors::<f64>(&cat, FeatureWeighting::Binary), &cat, 2, 0.0);
        // item 0 = {A}: sims 1 -> 1/sqrt2, 4 -> 1/sqrt3, others 0
        let n0: Vec<usize> = nb.neighbors(0).iter().map(|p| p.0).collect();
        assert_eq!(n0, vec![1, 4]);
        assert!((nb.neighbors(0)[0].1 - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn k_larger_than_catalog_is_clamped() {
        let cat = catalog();
        let nb = ItemNeighborhoods::build(&item_vectors::<f64>(&cat, FeatureWeighting::Binary), &cat, 50, 0.0);
        assert_eq!(nb.neighbors(4).len(), 4);
    }

    #[test]
    fn sharing_a_genre_with_a_liked_item_never_lowers_the_score() {
        // user likes item 1 = {A, B}; item 3 = {C} gains A, then B
        let tx = |item| Interaction {
            user: 0,
            item,
            rating: 5.0,
            timestamp: None,
        };
        let ds = InteractionDataset::new(vec![1], (1..=5).collect(), vec![tx(1)]).unwrap();
        let mut sets = vec![vec![0], vec![0, 1], vec![1, 2], vec![2], vec![0, 1, 2]];
        let hp = HyperParams::new().with("k", 4);
        let mut last = f64::NEG_INFINITY;
        for extra in [None, Some(0), Some(1)] {
            if let Some(g) = extra {
                sets[3].push(g);
            }
            let cat = ItemFeatureCatalog::new(vec!["A".into(), "B".into(), "C".into()], sets.clone()).unwrap();
            let m = train::<f64>(ModelKind::AttItemKnn, &ds, &cat, &hp, 0).unwrap();
            let s = m.score(0, 3).unwrap().value;
            assert!(s >= last);
            last = s;
        }
        assert!(last > 0.0);
    }
}
