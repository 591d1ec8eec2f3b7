//! Seeded inputs shared by the benchmarks.

use concern_core::cluster::{MarginAxis, MembershipVector};
use concern_core::priority::{FeatureVector, GroundTruth, RawFeatures};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` subreddits with random axis memberships.
pub fn memberships(n: usize, seed: u64) -> Vec<MembershipVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let axes: Vec<MarginAxis> = MarginAxis::ALL.into_iter().filter(|_| rng.random_bool(0.35)).collect();
            MembershipVector::new(format!("sub{i:04}"), &axes)
        })
        .collect()
}

/// `n` posts with uniform normalized features and a 1..5 rating for each.
pub fn rated_features(n: usize, seed: u64) -> (Vec<FeatureVector>, GroundTruth) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let feats: Vec<FeatureVector> = (0..n)
        .map(|i| FeatureVector {
            post_id: format!("p{i:05}"),
            created_utc: rng.random_range(0..1_000_000),
            raw: RawFeatures::default(),
            normalized: std::array::from_fn(|_| rng.random::<f64>()),
        })
        .collect();
    let truth = feats
        .iter()
        .map(|f| (f.post_id.clone(), rng.random_range(1.0..=5.0)))
        .collect();
    (feats, GroundTruth::new(truth).expect("ratings in range"))
}
