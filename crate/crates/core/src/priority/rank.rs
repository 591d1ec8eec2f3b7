use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classify::EthicalConcernCategory;
use crate::error::{Error, Result};
use crate::sentiment::IdentityTerm;

use super::features::{priority_components, FeatureNorms, FeatureVector, PriorityComponents, PriorityWeights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPost {
    /// 1-based.
    pub rank: usize,
    pub post_id: String,
    pub created_utc: i64,
    pub priority: f64,
    pub category: EthicalConcernCategory,
    pub components: PriorityComponents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryPriority {
    pub category: EthicalConcernCategory,
    pub mean_priority: f64,
    pub posts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub posts: Vec<RankedPost>,
    /// Highest mean first; categories without posts are left out.
    pub categories: Vec<CategoryPriority>,
}

/// Ranks posts by priority (older first, then id, on ties) and averages
/// priority per category.
pub fn rank_and_aggregate(
    features: &[FeatureVector],
    weights: &PriorityWeights,
    norms: &FeatureNorms,
    identity: IdentityTerm,
    categories: &BTreeMap<String, EthicalConcernCategory>,
) -> Result<Ranking> {
    let mut posts = Vec::with_capacity(features.len());
    for f in features {
        let category = *categories
            .get(&f.post_id)
            .ok_or_else(|| Error::InvalidInput(format!("post {} has no category", f.post_id)))?;
        let components = priority_components(&norms.apply(&f.raw, identity), weights);
        posts.push(RankedPost {
            rank: 0,
            post_id: f.post_id.clone(),
            created_utc: f.created_utc,
            priority: components.sentiment + components.entropy + components.recency + components.popularity,
            category,
            components,
        });
    }
    posts.sort_by(|a, b| {
        b.priority
            .total_cmp(&a.priority)
            .then(a.created_utc.cmp(&b.created_utc))
            .then_with(|| a.post_id.cmp(&b.post_id))
    });
    for (i, p) in posts.iter_mut().enumerate() {
        p.rank = i + 1;
    }
    let mut sums: BTreeMap<EthicalConcernCategory, (f64, usize)> = BTreeMap::new();
    for p in &posts {
        let e = sums.entry(p.category).or_default();
        e.0 += p.priority;
        e.1 += 1;
    }
    let mut cats: Vec<CategoryPriority> = sums
        .into_iter()
        .map(|(category, (sum, n))| CategoryPriority {
            category,
            mean_priority: sum / n as f64,
            posts: n,
        })
        .collect();
    cats.sort_by(|a, b| b.mean_priority.total_cmp(&a.mean_priority).then(a.category.cmp(&b.category)));
    Ok(Ranking { posts, categories: cats })
}

/// `rank,post_id,priority,category,sentiment,entropy,recency,popularity`.
pub fn write_ranking_csv<W: Write>(writer: W, ranking: &Ranking) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::parse("ranking", e.to_string());
    w.write_record(["rank", "post_id", "priority", "category", "sentiment", "entropy", "recency", "popularity"])
        .map_err(err)?;
    for p in &ranking.posts {
        let c = &p.components;
        w.write_record([
            p.rank.to_string(),
            p.post_id.clone(),
            p.priority.to_string(),
            p.category.name().to_string(),
            c.sentiment.to_string(),
            c.entropy.to_string(),
            c.recency.to_string(),
            c.popularity.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("ranking", e))
}

/// `category,mean_priority,posts`.
pub fn write_category_csv<W: Write>(writer: W, ranking: &Ranking) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::parse("category priority", e.to_string());
    w.write_record(["category", "mean_priority", "posts"]).map_err(err)?;
    for c in &ranking.categories {
        w.write_record([c.category.name().to_string(), c.mean_priority.to_string(), c.posts.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("category priority", e))
}
