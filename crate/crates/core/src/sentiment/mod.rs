//! Toxicity attributes, valence, and their weighted combination.

mod valence;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::classify::ClientError;
use crate::error::{Error, Result};
use crate::norm::Range;
use crate::text::tokenize;

pub use valence::{valence, ValenceLexicon, ValenceRules, ValenceScore};

/// The six toxicity attributes, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ToxicityAttributes {
    pub toxicity: f64,
    pub severe_toxicity: f64,
    pub insult: f64,
    pub profanity: f64,
    pub threat: f64,
    pub identity_attack: f64,
}

impl ToxicityAttributes {
    pub const NAMES: [&'static str; 6] = ["toxicity", "severe_toxicity", "insult", "profanity", "threat", "identity_attack"];

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.toxicity,
            self.severe_toxicity,
            self.insult,
            self.profanity,
            self.threat,
            self.identity_attack,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        ToxicityAttributes {
            toxicity: a[0],
            severe_toxicity: a[1],
            insult: a[2],
            profanity: a[3],
            threat: a[4],
            identity_attack: a[5],
        }
    }
}

/// Source of toxicity attributes (a remote scorer or the offline stub).
pub trait ToxicityProvider: Send + Sync {
    fn id(&self) -> &str;

    fn score(&self, text: &str) -> std::result::Result<ToxicityAttributes, ClientError>;

    fn max_parallelism(&self) -> Option<usize> {
        None
    }
}

/// Scores `text` and rejects any attribute outside [0, 1].
pub fn toxicity(text: &str, provider: &dyn ToxicityProvider) -> std::result::Result<ToxicityAttributes, ClientError> {
    let attrs = provider.score(text)?;
    for (name, v) in ToxicityAttributes::NAMES.iter().zip(attrs.as_array()) {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(ClientError::Protocol(format!("{name} = {v} outside [0,1]")));
        }
    }
    Ok(attrs)
}

pub const STUB_TOXICITY_ID: &str = "stub-toxicity";

/// Hits saturate at this many matches.
const STUB_SATURATION: f64 = 5.0;

#[derive(Deserialize)]
struct StubFile {
    toxicity: Vec<String>,
    severe_toxicity: Vec<String>,
    insult: Vec<String>,
    profanity: Vec<String>,
    threat: Vec<String>,
    identity_attack: Vec<String>,
}

/// Offline provider: each attribute is `min(1, hits / 5)` over its word list.
#[derive(Debug, Clone)]
pub struct StubToxicity {
    lists: [HashSet<String>; 6],
}

impl StubToxicity {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let f: StubFile = toml::from_str(s).map_err(|e| Error::parse("toxicity lexicon", e))?;
        let set = |v: Vec<String>| v.into_iter().map(|w| w.to_lowercase()).collect::<HashSet<_>>();
        Ok(StubToxicity {
            lists: [
                set(f.toxicity),
                set(f.severe_toxicity),
                set(f.insult),
                set(f.profanity),
                set(f.threat),
                set(f.identity_attack),
            ],
        })
    }
}

impl ToxicityProvider for StubToxicity {
    fn id(&self) -> &str {
        STUB_TOXICITY_ID
    }

    fn score(&self, text: &str) -> std::result::Result<ToxicityAttributes, ClientError> {
        let tokens = tokenize(text);
        let mut out = [0.0; 6];
        for (slot, list) in out.iter_mut().zip(&self.lists) {
            let hits = tokens.iter().filter(|t| list.contains(*t)).count() as f64;
            *slot = (hits / STUB_SATURATION).min(1.0);
        }
        Ok(ToxicityAttributes::from_array(out))
    }
}

/// Weights `w_a..w_g` for toxicity, severe toxicity, insult, profanity,
/// threat, identity attack and negated valence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentWeights(pub [f64; 7]);

impl Default for SentimentWeights {
    fn default() -> Self {
        SentimentWeights([1.0; 7])
    }
}

/// Whether the identity-attack term is min-max normalized like the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentityTerm {
    /// Used as reported by the provider.
    #[default]
    Raw,
    Normalized,
}

/// Corpus ranges for the seven sentiment inputs. The last slot is the range
/// of the negated valence compound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentNorms(pub [Range; 7]);

impl SentimentNorms {
    pub fn fit<'a>(rows: impl IntoIterator<Item = (&'a ToxicityAttributes, &'a ValenceScore)>) -> Option<Self> {
        let rows: Vec<[f64; 7]> = rows.into_iter().map(|(a, v)| sentiment_inputs(a, v)).collect();
        let mut ranges = [Range { min: 0.0, max: 0.0 }; 7];
        for (k, r) in ranges.iter_mut().enumerate() {
            *r = Range::of(rows.iter().map(|row| row[k]))?;
        }
        Some(SentimentNorms(ranges))
    }
}

/// The seven raw inputs in weight order; valence enters negated so more
/// negative text scores higher.
pub fn sentiment_inputs(attrs: &ToxicityAttributes, vad: &ValenceScore) -> [f64; 7] {
    let a = attrs.as_array();
    [a[0], a[1], a[2], a[3], a[4], a[5], -vad.compound]
}

/// The seven weighted terms after normalization (before weighting).
pub fn sentiment_terms(attrs: &ToxicityAttributes, vad: &ValenceScore, norms: &SentimentNorms, identity: IdentityTerm) -> [f64; 7] {
    let raw = sentiment_inputs(attrs, vad);
    let mut out = [0.0; 7];
    for k in 0..7 {
        out[k] = if k == 5 && identity == IdentityTerm::Raw {
            raw[k]
        } else {
            norms.0[k].apply(raw[k])
        };
    }
    out
}

/// `Sent = w_a Nor(tox) + w_b Nor(sev) + w_c Nor(ins) + w_d Nor(pro)
/// + w_e Nor(thr) + w_f ide + w_g Nor(-compound)`.
pub fn aggregate_sentiment(
    attrs: &ToxicityAttributes,
    vad: &ValenceScore,
    weights: &SentimentWeights,
    norms: &SentimentNorms,
    identity: IdentityTerm,
) -> f64 {
    sentiment_terms(attrs, vad, norms, identity)
        .iter()
        .zip(weights.0.iter())
        .map(|(x, w)| w * x)
        .sum()
}
