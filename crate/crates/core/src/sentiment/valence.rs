use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize_keep_apostrophes;

/// Compound valence in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValenceScore {
    pub compound: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ValenceRules {
    pub negation_window: usize,
    pub negation_scalar: f64,
    pub intensifier_increment: f64,
    pub normalization_alpha: f64,
    pub negators: Vec<String>,
    pub intensifiers: Vec<String>,
}

/// Token valences plus the negation and intensifier rules.
#[derive(Debug, Clone)]
pub struct ValenceLexicon {
    valences: HashMap<String, f64>,
    negators: HashSet<String>,
    intensifiers: HashSet<String>,
    window: usize,
    negation_scalar: f64,
    increment: f64,
    alpha: f64,
}

impl ValenceLexicon {
    pub fn new(valences: HashMap<String, f64>, rules: ValenceRules) -> Result<Self> {
        if !(rules.normalization_alpha > 0.0) {
            return Err(Error::Config("normalization_alpha must be positive".into()));
        }
        Ok(ValenceLexicon {
            valences,
            negators: rules.negators.into_iter().map(|s| s.to_lowercase()).collect(),
            intensifiers: rules.intensifiers.into_iter().map(|s| s.to_lowercase()).collect(),
            window: rules.negation_window,
            negation_scalar: rules.negation_scalar,
            increment: rules.intensifier_increment,
            alpha: rules.normalization_alpha,
        })
    }

    /// Parses a `token<TAB>mean valence[<TAB>...]` lexicon; columns past the
    /// second are ignored.
    pub fn parse_tsv(tsv: &str) -> Result<HashMap<String, f64>> {
        let mut out = HashMap::new();
        for (i, line) in tsv.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let token = cols.next().unwrap_or_default().trim();
            let value = cols
                .next()
                .ok_or_else(|| Error::parse(format!("valence lexicon line {}", i + 1), "missing valence column"))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|e| Error::parse(format!("valence lexicon line {}", i + 1), e))?;
            out.insert(token.to_lowercase(), v);
        }
        Ok(out)
    }

    pub fn from_sources(tsv: &str, rules_toml: &str) -> Result<Self> {
        let rules: ValenceRules = toml::from_str(rules_toml).map_err(|e| Error::parse("valence rules", e))?;
        Self::new(Self::parse_tsv(tsv)?, rules)
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.valences.get(token).copied()
    }

    /// Sum of rule-adjusted token valences.
    pub fn raw_sum(&self, tokens: &[String]) -> f64 {
        let mut sum = 0.0;
        for (i, tok) in tokens.iter().enumerate() {
            let Some(mut v) = self.get(tok) else { continue };
            if i > 0 && self.intensifiers.contains(&tokens[i - 1]) && v != 0.0 {
                v += self.increment * v.signum();
            }
            let lo = i.saturating_sub(self.window);
            if tokens[lo..i].iter().any(|t| self.negators.contains(t)) {
                v *= -self.negation_scalar;
            }
            sum += v;
        }
        sum
    }

    pub fn compound(&self, sum: f64) -> f64 {
        (sum / (sum * sum + self.alpha).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Rule-based valence: `S / sqrt(S^2 + alpha)` over the adjusted token sum.
pub fn valence(text: &str, lexicon: &ValenceLexicon) -> ValenceScore {
    let tokens = tokenize_keep_apostrophes(text);
    ValenceScore {
        compound: lexicon.compound(lexicon.raw_sum(&tokens)),
    }
}
