//! Overlapping clusters of similar samples, built so no sample is
//! under-represented: seed samples are drawn round-robin over seeded
//! permutations, and nearest-neighbour fill breaks distance ties in favour
//! of the least-used sample.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AlleleMatrix;
use crate::error::{Error, Result};
use crate::seed::derive;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPlan {
    clusters: Vec<Vec<usize>>,
    usage_counts: Vec<usize>,
    n: usize,
    seed: u64,
}

impl ClusterPlan {
    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn cluster(&self, idx: usize) -> &[usize] {
        &self.clusters[idx]
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// How many clusters each sample belongs to.
    pub fn usage_counts(&self) -> &[usize] {
        &self.usage_counts
    }
}

/// Build `k` clusters of exactly `n` members each: a seed sample plus its
/// `n - 1` nearest neighbours by Hamming distance.
pub fn build_clusters(
    matrix: &AlleleMatrix,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<ClusterPlan> {
    let m = matrix.samples();
    if n == 0 || n > m {
        return Err(Error::InvalidParams(format!(
            "cluster size {n} must be between 1 and the sample count {m}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParams("cluster count must be at least 1".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, "cluster-plan", 0));
    let mut usage = vec![0usize; m];
    let mut clusters = Vec::with_capacity(k);

    // Seeds drawn without replacement in rounds: a fresh permutation per
    // round keeps per-sample seed counts within 1 of each other.
    let mut seed_order: Vec<usize> = Vec::with_capacity(k);
    while seed_order.len() < k {
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut rng);
        seed_order.extend(perm);
    }
    seed_order.truncate(k);

    for &seed_sample in &seed_order {
        let mut candidates: Vec<(usize, usize, u64, usize)> = (0..m)
            .filter(|&i| i != seed_sample)
            .map(|i| (matrix.hamming(seed_sample, i), usage[i], rng.gen::<u64>(), i))
            .collect();
        candidates.sort_unstable();
        let mut members: Vec<usize> = vec![seed_sample];
        members.extend(candidates.iter().take(n - 1).map(|&(.., i)| i));
        members.sort_unstable();
        for &i in &members {
            usage[i] += 1;
        }
        clusters.push(members);
    }

    Ok(ClusterPlan {
        clusters,
        usage_counts: usage,
        n,
        seed,
    })
}

/// Split into two disjoint random halves of sizes `⌊M/2⌋` and `⌈M/2⌉`.
pub fn split_cohort(matrix: &AlleleMatrix, seed: u64) -> Result<(AlleleMatrix, AlleleMatrix)> {
    let m = matrix.samples();
    if m < 2 {
        return Err(Error::InvalidParams(
            "splitting needs at least two samples".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, "split", 0));
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut rng);
    let mut first: Vec<usize> = perm[..m / 2].to_vec();
    let mut second: Vec<usize> = perm[m / 2..].to_vec();
    first.sort_unstable();
    second.sort_unstable();
    Ok((
        matrix.select_samples(&first)?,
        matrix.select_samples(&second)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hapdata::toy_cohort;

    #[test]
    fn degenerate_whole_cohort_cluster() {
        let m = toy_cohort();
        let plan = build_clusters(&m, 5, 1, 0).unwrap();
        assert_eq!(plan.cluster(0), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn singleton_clusters() {
        let m = toy_cohort();
        let plan = build_clusters(&m, 1, 10, 3).unwrap();
        for c in plan.clusters() {
            assert_eq!(c.len(), 1);
        }
    }

    #[test]
    fn nearest_neighbour_is_chosen() {
        // Sample 3 is the unique nearest neighbour of sample 0 (distance 1;
        // all others are at distance 4 or more).
        let m = toy_cohort();
        for seed in 0..20 {
            // With 5 clusters every sample seeds exactly once; the cluster
            // seeded at 0 is forced to {0, 3}.
            let plan = build_clusters(&m, 2, 5, seed).unwrap();
            assert!(plan.clusters().iter().any(|c| c.as_slice() == [0, 3]));
        }
    }

    #[test]
    fn every_sample_used_when_rounds_complete() {
        let m = toy_cohort();
        let plan = build_clusters(&m, 2, 5, 11).unwrap();
        assert!(plan.usage_counts().iter().all(|&u| u >= 1));
    }

    #[test]
    fn identical_inputs_and_seed_reproduce_the_plan() {
        let m = toy_cohort();
        let a = build_clusters(&m, 3, 7, 99).unwrap();
        let b = build_clusters(&m, 3, 7, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oversized_cluster_is_rejected() {
        let m = toy_cohort();
        assert!(build_clusters(&m, 6, 1, 0).is_err());
    }

    #[test]
    fn split_sizes_and_union() {
        let m = toy_cohort();
        let (a, b) = split_cohort(&m, 5).unwrap();
        assert_eq!(a.samples(), 2);
        assert_eq!(b.samples(), 3);
        let mut ids: Vec<&String> = a.sample_ids().iter().chain(b.sample_ids()).collect();
        ids.sort();
        let mut expected: Vec<&String> = m.sample_ids().iter().collect();
        expected.sort();
        assert_eq!(ids, expected);
        // Determinism.
        let (a2, b2) = split_cohort(&m, 5).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
    }
}
