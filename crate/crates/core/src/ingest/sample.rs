use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AppDomain, Corpus, RawPost};
use crate::error::{Error, Result};

/// Sampling stratum: intersectional community crossed with software domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StratumKey {
    pub community: String,
    pub domain: AppDomain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePlan {
    pub communities: Vec<String>,
    /// Domains in refill order.
    pub domains: Vec<AppDomain>,
    pub per_stratum: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub community: String,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub posts: Vec<RawPost>,
    pub shortfalls: Vec<Shortfall>,
}

/// Draws `per_stratum` posts from every (community, domain) stratum.
///
/// Each stratum's pool is sorted by id and shuffled with a ChaCha8 stream
/// seeded by `seed`, so the draw does not depend on corpus order. A stratum
/// that runs short is topped up round-robin from the remaining posts of the
/// same community's other domains, in `plan.domains` order. Whatever cannot
/// be filled is reported as a [`Shortfall`].
pub fn stratified_sample(
    corpus: &Corpus,
    strata: &HashMap<String, StratumKey>,
    plan: &SamplePlan,
    seed: u64,
) -> Result<Sample> {
    if plan.per_stratum == 0 {
        return Err(Error::InvalidInput("per_stratum must be at least 1".into()));
    }
    let mut by_key: HashMap<&StratumKey, Vec<&RawPost>> = HashMap::new();
    for post in &corpus.posts {
        if let Some(key) = strata.get(&post.id) {
            by_key.entry(key).or_default().push(post);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut posts = Vec::new();
    let mut shortfalls = Vec::new();

    for community in &plan.communities {
        let mut pools: Vec<VecDeque<&RawPost>> = Vec::with_capacity(plan.domains.len());
        for &domain in &plan.domains {
            let key = StratumKey {
                community: community.clone(),
                domain,
            };
            let mut pool = by_key.get(&key).cloned().unwrap_or_default();
            pool.sort_by(|a, b| a.id.cmp(&b.id));
            pool.shuffle(&mut rng);
            pools.push(pool.into());
        }

        let mut missing = 0;
        for pool in pools.iter_mut() {
            let take = plan.per_stratum.min(pool.len());
            missing += plan.per_stratum - take;
            posts.extend(pool.drain(..take).map(|p| (*p).clone()));
        }

        while missing > 0 && pools.iter().any(|p| !p.is_empty()) {
            for pool in pools.iter_mut() {
                if missing == 0 {
                    break;
                }
                if let Some(p) = pool.pop_front() {
                    posts.push(p.clone());
                    missing -= 1;
                }
            }
        }
        if missing > 0 {
            log::warn!("community {community:?} is {missing} posts short of its quota");
            shortfalls.push(Shortfall {
                community: community.clone(),
                missing,
            });
        }
    }
    Ok(Sample { posts, shortfalls })
}
