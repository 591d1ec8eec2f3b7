use std::collections::{HashMap, HashSet};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Software domain of an app. Declaration order is the catalog order used
/// when refilling sample strata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppDomain {
    Business,
    Entertainment,
    Shopping,
    SocialMedia,
    UtilityProductivity,
}

impl AppDomain {
    pub const ALL: [AppDomain; 5] = [
        AppDomain::Business,
        AppDomain::Entertainment,
        AppDomain::Shopping,
        AppDomain::SocialMedia,
        AppDomain::UtilityProductivity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AppDomain::Business => "business",
            AppDomain::Entertainment => "entertainment",
            AppDomain::Shopping => "shopping",
            AppDomain::SocialMedia => "social_media",
            AppDomain::UtilityProductivity => "utility_productivity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppEntry {
    pub name: String,
    pub aliases: Vec<String>,
    pub domain: AppDomain,
}

#[derive(Debug, Clone, Deserialize)]
struct CatalogFile {
    #[serde(default)]
    default_allowlist: Vec<String>,
    #[serde(rename = "app")]
    apps: Vec<AppEntry>,
}

/// The apps under study, their aliases and domains.
#[derive(Debug, Clone, PartialEq)]
pub struct AppCatalog {
    entries: Vec<AppEntry>,
    default_allowlist: Vec<String>,
}

impl AppCatalog {
    pub fn new(entries: Vec<AppEntry>, default_allowlist: Vec<String>) -> Result<Self> {
        let mut names = HashSet::new();
        let mut alias_owner: HashMap<String, &str> = HashMap::new();
        for e in &entries {
            if !names.insert(e.name.to_lowercase()) {
                return Err(Error::Config(format!("duplicate app name {:?}", e.name)));
            }
            if e.aliases.is_empty() {
                return Err(Error::Config(format!("app {:?} has no aliases", e.name)));
            }
            for a in &e.aliases {
                let key = a.trim().to_lowercase();
                if key.is_empty() {
                    return Err(Error::Config(format!("app {:?} has an empty alias", e.name)));
                }
                if let Some(prev) = alias_owner.insert(key, &e.name) {
                    if prev != e.name {
                        return Err(Error::Config(format!(
                            "alias {a:?} maps to both {prev:?} and {:?}",
                            e.name
                        )));
                    }
                }
            }
        }
        let catalog = AppCatalog {
            entries,
            default_allowlist: Vec::new(),
        };
        let resolved = catalog.resolve(&default_allowlist)?;
        Ok(AppCatalog {
            default_allowlist: resolved,
            ..catalog
        })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: CatalogFile = toml::from_str(s).map_err(|e| Error::parse("app catalog", e))?;
        Self::new(file.apps, file.default_allowlist)
    }

    pub fn entries(&self) -> &[AppEntry] {
        &self.entries
    }

    pub fn default_allowlist(&self) -> &[String] {
        &self.default_allowlist
    }

    pub fn get(&self, name: &str) -> Option<&AppEntry> {
        self.entries.iter().find(|e| e.name.eq_ignore_ascii_case(name))
    }

    /// Maps user-supplied names (any case) to canonical names.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<String>> {
        names
            .iter()
            .map(|n| {
                self.get(n.trim())
                    .map(|e| e.name.clone())
                    .ok_or_else(|| Error::Config(format!("unknown app {n:?} in allowlist")))
            })
            .collect()
    }

    /// Builds a mention matcher restricted to `allowlist`.
    pub fn matcher(&self, allowlist: &[String]) -> Result<AppMatcher> {
        let wanted: HashSet<String> = self.resolve(allowlist)?.into_iter().collect();
        let apps = self
            .entries
            .iter()
            .filter(|e| wanted.contains(&e.name))
            .map(|e| {
                let alts: Vec<String> = e.aliases.iter().map(|a| regex::escape(a.trim())).collect();
                let pattern = format!(r"(?i)\b(?:{})\b", alts.join("|"));
                let re = Regex::new(&pattern).map_err(|err| Error::Config(err.to_string()))?;
                Ok((e.clone(), re))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AppMatcher { apps })
    }

    /// Matcher over every app in the catalog.
    pub fn matcher_all(&self) -> AppMatcher {
        let names: Vec<String> = self.entries.iter().map(|e| e.name.clone()).collect();
        self.matcher(&names).expect("catalog names resolve")
    }
}

/// One app mention found in a text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub app: String,
    pub domain: AppDomain,
    /// The text as written at the match site.
    pub matched: String,
    /// Byte offset of the match.
    pub offset: usize,
}

/// Case-insensitive whole-word alias matcher.
#[derive(Debug, Clone)]
pub struct AppMatcher {
    apps: Vec<(AppEntry, Regex)>,
}

impl AppMatcher {
    pub fn mentions_any(&self, text: &str) -> bool {
        self.apps.iter().any(|(_, re)| re.is_match(text))
    }

    /// Apps mentioned in `text`, in catalog order, with their first match.
    pub fn mentions(&self, text: &str) -> Vec<Mention> {
        self.apps
            .iter()
            .filter_map(|(e, re)| {
                re.find(text).map(|m| Mention {
                    app: e.name.clone(),
                    domain: e.domain,
                    matched: m.as_str().to_string(),
                    offset: m.start(),
                })
            })
            .collect()
    }

    /// The earliest mention in the text, if any.
    pub fn first_mention(&self, text: &str) -> Option<Mention> {
        self.mentions(text).into_iter().min_by_key(|m| m.offset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(name: &str, aliases: &[&str]) -> AppEntry {
        AppEntry {
            name: name.into(),
            aliases: aliases.iter().map(|s| s.to_string()).collect(),
            domain: AppDomain::SocialMedia,
        }
    }

    #[test]
    fn rejects_shared_alias() {
        let err = AppCatalog::new(vec![entry("A", &["x"]), entry("B", &["X"])], vec![]).unwrap_err();
        assert!(err.to_string().contains("maps to both"));
    }

    #[test]
    fn rejects_duplicate_names() {
        assert!(AppCatalog::new(vec![entry("A", &["x"]), entry("a", &["y"])], vec![]).is_err());
    }

    #[test]
    fn whole_word_case_insensitive() {
        let cat = AppCatalog::new(vec![entry("TikTok", &["tiktok", "tik tok"]), entry("Zoom", &["zoom app"])], vec![])
            .unwrap();
        let m = cat.matcher_all();
        assert!(m.mentions_any("my TIKTOK got banned"));
        assert!(m.mentions_any("on tik tok."));
        assert!(!m.mentions_any("tiktoks everywhere"));
        assert!(!m.mentions_any("zoom in please"));
        assert!(m.mentions_any("the Zoom app crashed"));
    }

    #[test]
    fn first_mention_picks_earliest() {
        let cat = AppCatalog::from_toml_str(include_str!("../../data/apps.toml")).unwrap();
        let m = cat.matcher(cat.default_allowlist()).unwrap();
        let first = m.first_mention("saw it on Twitter, then YouTube").unwrap();
        assert_eq!(first.app, "Twitter");
        assert_eq!(first.matched, "Twitter");
        assert!(!cat.default_allowlist().iter().any(|a| a == "Google" || a == "Amazon"));
    }
}
