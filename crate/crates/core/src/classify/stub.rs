//! Offline, lexicon-driven stand-ins for the detector and categorizer.

use serde::Deserialize;

use super::{CategorizerClient, ClientError, DetectorClient, EthicalConcernCategory, PromptText, RawDetection};
use crate::error::{Error, Result};
use crate::text::{contains_phrase, tokenize};

pub const STUB_DETECTOR_ID: &str = "stub-detector";
pub const STUB_CATEGORIZER_ID: &str = "stub-categorizer";

#[derive(Deserialize)]
struct DetectorFile {
    lexemes: Vec<String>,
}

/// Flags a text when any configured lexeme occurs as a token sequence.
#[derive(Debug, Clone)]
pub struct StubDetector {
    lexemes: Vec<Vec<String>>,
}

impl StubDetector {
    pub fn new<S: AsRef<str>>(lexemes: &[S]) -> Self {
        StubDetector {
            lexemes: lexemes
                .iter()
                .map(|l| tokenize(l.as_ref()))
                .filter(|t| !t.is_empty())
                .collect(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let f: DetectorFile = toml::from_str(s).map_err(|e| Error::parse("detector lexicon", e))?;
        Ok(Self::new(&f.lexemes))
    }
}

impl DetectorClient for StubDetector {
    fn id(&self) -> &str {
        STUB_DETECTOR_ID
    }

    fn detect(&self, text: &str) -> std::result::Result<RawDetection, ClientError> {
        let tokens = tokenize(text);
        let hit = self.lexemes.iter().any(|l| contains_phrase(&tokens, l));
        Ok(RawDetection {
            is_concern: hit,
            confidence: if hit { 1.0 } else { 0.0 },
        })
    }
}

#[derive(Deserialize)]
struct RuleFile {
    rule: Vec<RuleEntry>,
}

#[derive(Deserialize)]
struct RuleEntry {
    category: String,
    phrases: Vec<String>,
}

/// First-match phrase rules over the windowed post; no match answers None.
#[derive(Debug, Clone)]
pub struct StubCategorizer {
    rules: Vec<(EthicalConcernCategory, Vec<Vec<String>>)>,
}

impl StubCategorizer {
    pub fn new(rules: Vec<(EthicalConcernCategory, Vec<String>)>) -> Self {
        StubCategorizer {
            rules: rules
                .into_iter()
                .map(|(c, phrases)| (c, phrases.iter().map(|p| tokenize(p)).filter(|t| !t.is_empty()).collect()))
                .collect(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let f: RuleFile = toml::from_str(s).map_err(|e| Error::parse("categorizer rules", e))?;
        let rules = f
            .rule
            .into_iter()
            .map(|r| Ok((r.category.parse::<EthicalConcernCategory>()?, r.phrases)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(rules))
    }

    /// The label the rules assign to `text`.
    pub fn label(&self, text: &str) -> EthicalConcernCategory {
        let tokens = tokenize(text);
        self.rules
            .iter()
            .find(|(_, phrases)| phrases.iter().any(|p| contains_phrase(&tokens, p)))
            .map(|(c, _)| *c)
            .unwrap_or(EthicalConcernCategory::NoneLabel)
    }
}

impl CategorizerClient for StubCategorizer {
    fn id(&self) -> &str {
        STUB_CATEGORIZER_ID
    }

    fn categorize(&self, prompt: &PromptText) -> std::result::Result<String, ClientError> {
        Ok(self.label(&prompt.windowed_post).name().to_string())
    }
}
