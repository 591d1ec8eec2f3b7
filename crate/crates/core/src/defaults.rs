//! Data files bundled with the crate and loaders for them.

use crate::classify::{StubCategorizer, StubDetector, Taxonomy};
use crate::error::Result;
use crate::ingest::AppCatalog;
use crate::lexicon::{ThemeBindings, TopicLexicon};
use crate::sentiment::{StubToxicity, ValenceLexicon};
use crate::timeline::HolidayCalendar;

pub const APPS_TOML: &str = include_str!("../data/apps.toml");
pub const TAXONOMY_TOML: &str = include_str!("../data/taxonomy.toml");
pub const TOPICS_TOML: &str = include_str!("../data/topics.toml");
pub const THEMES_TOML: &str = include_str!("../data/themes.toml");
pub const VALENCE_LEXICON_TSV: &str = include_str!("../data/valence_lexicon.tsv");
pub const VALENCE_RULES_TOML: &str = include_str!("../data/valence_rules.toml");
pub const HOLIDAYS_TOML: &str = include_str!("../data/holidays.toml");
pub const DETECTOR_LEXICON_TOML: &str = include_str!("../data/detector_lexicon.toml");
pub const CATEGORIZER_RULES_TOML: &str = include_str!("../data/categorizer_rules.toml");
pub const TOXICITY_LEXICON_TOML: &str = include_str!("../data/toxicity_lexicon.toml");

pub fn app_catalog() -> Result<AppCatalog> {
    AppCatalog::from_toml_str(APPS_TOML)
}

pub fn taxonomy() -> Result<Taxonomy> {
    Taxonomy::from_toml_str(TAXONOMY_TOML)
}

pub fn topic_lexicon(stem: bool) -> Result<TopicLexicon> {
    TopicLexicon::from_toml_str(TOPICS_TOML, stem)
}

pub fn theme_bindings() -> Result<ThemeBindings> {
    ThemeBindings::from_toml_str(THEMES_TOML)
}

pub fn valence_lexicon() -> Result<ValenceLexicon> {
    ValenceLexicon::from_sources(VALENCE_LEXICON_TSV, VALENCE_RULES_TOML)
}

pub fn holiday_calendar() -> Result<HolidayCalendar> {
    HolidayCalendar::from_toml_str(HOLIDAYS_TOML)
}

pub fn stub_detector() -> Result<StubDetector> {
    StubDetector::from_toml_str(DETECTOR_LEXICON_TOML)
}

pub fn stub_categorizer() -> Result<StubCategorizer> {
    StubCategorizer::from_toml_str(CATEGORIZER_RULES_TOML)
}

pub fn stub_toxicity() -> Result<StubToxicity> {
    StubToxicity::from_toml_str(TOXICITY_LEXICON_TOML)
}
