use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Ethical-concern taxonomy plus the explicit "no category" label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EthicalConcernCategory {
    Addiction,
    Censorship,
    Cyberbullying,
    Discrimination,
    HarmfulAdvertising,
    InappropriateContent,
    Misinformation,
    Privacy,
    Safety,
    Scam,
    SocialIsolation,
    NoneLabel,
}

impl EthicalConcernCategory {
    /// The eleven concern categories, without `NoneLabel`.
    pub const CONCERNS: [EthicalConcernCategory; 11] = [
        Self::Addiction,
        Self::Censorship,
        Self::Cyberbullying,
        Self::Discrimination,
        Self::HarmfulAdvertising,
        Self::InappropriateContent,
        Self::Misinformation,
        Self::Privacy,
        Self::Safety,
        Self::Scam,
        Self::SocialIsolation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Addiction => "Addiction",
            Self::Censorship => "Censorship",
            Self::Cyberbullying => "Cyberbullying",
            Self::Discrimination => "Discrimination",
            Self::HarmfulAdvertising => "Harmful Advertising",
            Self::InappropriateContent => "Inappropriate Content",
            Self::Misinformation => "Misinformation",
            Self::Privacy => "Privacy",
            Self::Safety => "Safety",
            Self::Scam => "Scam",
            Self::SocialIsolation => "Social Isolation",
            Self::NoneLabel => "None",
        }
    }

    pub fn is_concern(self) -> bool {
        self != Self::NoneLabel
    }
}

impl fmt::Display for EthicalConcernCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn squash(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

impl FromStr for EthicalConcernCategory {
    type Err = Error;

    /// Case-insensitive; spaces, underscores and hyphens are ignored, so
    /// "harmful advertising", "HarmfulAdvertising" and "harmful_advertising"
    /// all parse. Anything else (including lists) is rejected.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed.contains([',', ';', '\n', '/']) {
            return Err(Error::InvalidInput(format!("expected a single category, got {s:?}")));
        }
        let key = squash(trimmed);
        if key == "none" || key == "nonelabel" {
            return Ok(Self::NoneLabel);
        }
        Self::CONCERNS
            .iter()
            .copied()
            .find(|c| squash(c.name()) == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown category {s:?}")))
    }
}

impl Serialize for EthicalConcernCategory {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for EthicalConcernCategory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Category definitions, one per concern category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    definitions: BTreeMap<EthicalConcernCategory, String>,
}

impl Taxonomy {
    /// Builds a taxonomy; every one of the eleven categories must be defined.
    pub fn new(definitions: BTreeMap<EthicalConcernCategory, String>) -> Result<Self> {
        for c in EthicalConcernCategory::CONCERNS {
            match definitions.get(&c) {
                Some(d) if !d.trim().is_empty() => {}
                _ => return Err(Error::Config(format!("taxonomy is missing a definition for {c}"))),
            }
        }
        if definitions.contains_key(&EthicalConcernCategory::NoneLabel) {
            return Err(Error::Config("taxonomy must not define None".into()));
        }
        Ok(Taxonomy { definitions })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let raw: BTreeMap<String, String> = toml::from_str(s).map_err(|e| Error::parse("taxonomy", e))?;
        let mut defs = BTreeMap::new();
        for (k, v) in raw {
            let c: EthicalConcernCategory = k.parse().map_err(|_| Error::Config(format!("unknown taxonomy category {k:?}")))?;
            defs.insert(c, v);
        }
        Self::new(defs)
    }

    pub fn definition(&self, c: EthicalConcernCategory) -> Option<&str> {
        self.definitions.get(&c).map(String::as_str)
    }

    /// Definitions in category order.
    pub fn iter(&self) -> impl Iterator<Item = (EthicalConcernCategory, &str)> {
        self.definitions.iter().map(|(c, d)| (*c, d.as_str()))
    }
}
