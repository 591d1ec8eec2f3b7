use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::RawPost;
use crate::lexicon::ThemeScores;
use crate::norm::Range;
use crate::sentiment::{sentiment_inputs, IdentityTerm, SentimentNorms, ToxicityAttributes, ValenceScore};

use super::entropy::{total_entropy, EntropyMode, ThemeDistribution};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Whole days since the Unix epoch.
pub fn recency(post: &RawPost) -> f64 {
    post.created_utc.div_euclid(SECONDS_PER_DAY) as f64
}

/// Upvote share of the corpus maximum plus upvote ratio plus comment share.
/// A zero maximum contributes nothing.
pub fn popularity(post: &RawPost, max_upvotes: u64, max_comments: u64) -> f64 {
    let frac = |v: u64, max: u64| if max == 0 { 0.0 } else { v as f64 / max as f64 };
    frac(post.upvotes, max_upvotes) + post.upvote_ratio + frac(post.num_comments, max_comments)
}

/// Feature names in weight order `w_a..w_j`.
pub const FEATURE_NAMES: [&str; 10] = ["tox", "sev", "ins", "pro", "thr", "ide", "vad", "ent", "rec", "pop"];

/// Unnormalized signals for one post.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RawFeatures {
    pub tox: f64,
    pub sev: f64,
    pub ins: f64,
    pub pro: f64,
    pub thr: f64,
    pub ide: f64,
    /// Valence compound as scored, not negated.
    pub vad: f64,
    pub ent_total: f64,
    pub rec: f64,
    pub pop: f64,
}

impl RawFeatures {
    pub fn toxicity(&self) -> ToxicityAttributes {
        ToxicityAttributes::from_array([self.tox, self.sev, self.ins, self.pro, self.thr, self.ide])
    }

    pub fn valence(&self) -> ValenceScore {
        ValenceScore { compound: self.vad }
    }

    /// Inputs in weight order, with valence negated.
    pub fn inputs(&self) -> [f64; 10] {
        let s = sentiment_inputs(&self.toxicity(), &self.valence());
        [s[0], s[1], s[2], s[3], s[4], s[5], s[6], self.ent_total, self.rec, self.pop]
    }
}

/// Corpus ranges used by every normalized feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorms {
    pub sentiment: SentimentNorms,
    pub ent_total: Range,
    pub rec: Range,
    pub pop: Range,
}

impl FeatureNorms {
    pub fn fit(raw: &[RawFeatures]) -> Result<Self> {
        let empty = || Error::InvalidInput("cannot normalize an empty feature set".into());
        let sentiment = SentimentNorms::fit(
            raw.iter()
                .map(|r| (r.toxicity(), r.valence()))
                .collect::<Vec<_>>()
                .iter()
                .map(|(a, v)| (a, v)),
        )
        .ok_or_else(empty)?;
        Ok(FeatureNorms {
            sentiment,
            ent_total: Range::of(raw.iter().map(|r| r.ent_total)).ok_or_else(empty)?,
            rec: Range::of(raw.iter().map(|r| r.rec)).ok_or_else(empty)?,
            pop: Range::of(raw.iter().map(|r| r.pop)).ok_or_else(empty)?,
        })
    }

    /// Normalized values in weight order. Identity attack stays raw unless
    /// `identity` says otherwise.
    pub fn apply(&self, raw: &RawFeatures, identity: IdentityTerm) -> [f64; 10] {
        let x = raw.inputs();
        let mut out = [0.0; 10];
        for k in 0..7 {
            out[k] = if k == 5 && identity == IdentityTerm::Raw {
                x[k]
            } else {
                self.sentiment.0[k].apply(x[k])
            };
        }
        out[7] = self.ent_total.apply(x[7]);
        out[8] = self.rec.apply(x[8]);
        out[9] = self.pop.apply(x[9]);
        out
    }
}

/// One post's features, raw and normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub post_id: String,
    pub created_utc: i64,
    pub raw: RawFeatures,
    pub normalized: [f64; 10],
}

/// Ten positive weights `w_a..w_j`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PriorityWeights(pub [f64; 10]);

impl Default for PriorityWeights {
    fn default() -> Self {
        PriorityWeights([1.0; 10])
    }
}

impl PriorityWeights {
    pub const KEYS: [&'static str; 10] = ["w_a", "w_b", "w_c", "w_d", "w_e", "w_f", "w_g", "w_h", "w_i", "w_j"];

    pub fn new(w: [f64; 10]) -> Result<Self> {
        for (k, v) in Self::KEYS.iter().zip(w.iter()) {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::Config(format!("weight {k} must be positive, got {v}")));
            }
        }
        Ok(PriorityWeights(w))
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let table: std::collections::BTreeMap<String, f64> =
            toml::from_str(s).map_err(|e| Error::parse("weights", e.to_string()))?;
        if let Some(extra) = table.keys().find(|k| !Self::KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown weight {extra:?}")));
        }
        let mut w = [0.0; 10];
        for (slot, key) in w.iter_mut().zip(Self::KEYS) {
            *slot = *table
                .get(key)
                .ok_or_else(|| Error::Config(format!("missing weight {key}")))?;
        }
        Self::new(w)
    }

    pub fn to_toml_string(&self) -> String {
        Self::KEYS
            .iter()
            .zip(self.0.iter())
            .map(|(k, v)| format!("{k} = {v:?}\n"))
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        PriorityWeights(self.0.map(|w| w * c))
    }
}

/// Per-post inputs gathered from the earlier stages.
#[derive(Debug, Clone, Copy)]
pub struct PostSignals<'a> {
    pub post: &'a RawPost,
    pub themes: &'a ThemeScores,
    pub toxicity: ToxicityAttributes,
    pub valence: ValenceScore,
}

/// Builds feature vectors and the corpus norms they were normalized with.
pub fn build_features(
    signals: &[PostSignals<'_>],
    dist: &ThemeDistribution,
    mode: EntropyMode,
    identity: IdentityTerm,
) -> Result<(Vec<FeatureVector>, FeatureNorms)> {
    let max_up = signals.iter().map(|s| s.post.upvotes).max().unwrap_or(0);
    let max_com = signals.iter().map(|s| s.post.num_comments).max().unwrap_or(0);
    let raw: Vec<RawFeatures> = signals
        .iter()
        .map(|s| {
            let t = s.toxicity;
            RawFeatures {
                tox: t.toxicity,
                sev: t.severe_toxicity,
                ins: t.insult,
                pro: t.profanity,
                thr: t.threat,
                ide: t.identity_attack,
                vad: s.valence.compound,
                ent_total: total_entropy(s.themes, dist, mode),
                rec: recency(s.post),
                pop: popularity(s.post, max_up, max_com),
            }
        })
        .collect();
    let norms = FeatureNorms::fit(&raw)?;
    let features = signals
        .iter()
        .zip(raw)
        .map(|(s, r)| FeatureVector {
            post_id: s.post.id.clone(),
            created_utc: s.post.created_utc,
            normalized: norms.apply(&r, identity),
            raw: r,
        })
        .collect();
    Ok((features, norms))
}

/// Weighted sum over normalized features in weight order.
pub fn weighted_sum(normalized: &[f64; 10], weights: &PriorityWeights) -> f64 {
    normalized.iter().zip(weights.0.iter()).map(|(x, w)| w * x).sum()
}

/// `Prio = Sent + w_h Nor(Ent_total) + w_i Nor(Rec) + w_j Nor(Pop)`.
pub fn priority(features: &FeatureVector, weights: &PriorityWeights, norms: &FeatureNorms, identity: IdentityTerm) -> f64 {
    weighted_sum(&norms.apply(&features.raw, identity), weights)
}

/// The four additive parts of a priority score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorityComponents {
    pub sentiment: f64,
    pub entropy: f64,
    pub recency: f64,
    pub popularity: f64,
}

pub fn priority_components(normalized: &[f64; 10], weights: &PriorityWeights) -> PriorityComponents {
    let w = &weights.0;
    PriorityComponents {
        sentiment: (0..7).map(|k| w[k] * normalized[k]).sum(),
        entropy: w[7] * normalized[7],
        recency: w[8] * normalized[8],
        popularity: w[9] * normalized[9],
    }
}
