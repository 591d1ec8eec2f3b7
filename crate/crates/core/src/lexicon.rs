//! Lexicon topic scoring and the three priority themes built on top of it.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{light_stem, tokenize};

/// The priority themes and the topics that make each of them up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorityTheme {
    Harm,
    Negativity,
    Children,
}

impl PriorityTheme {
    pub const ALL: [PriorityTheme; 3] = [PriorityTheme::Harm, PriorityTheme::Negativity, PriorityTheme::Children];

    /// The topic table the themes file is validated against.
    pub fn canonical_topics(self) -> &'static [&'static str] {
        match self {
            PriorityTheme::Harm => &["medical_emergency", "pain", "violence", "death", "injury", "kill", "terrorism"],
            PriorityTheme::Negativity => &[
                "hate",
                "negative_emotion",
                "nervousness",
                "suffering",
                "fear",
                "sadness",
                "shame",
                "confusion",
                "aggression",
                "anger",
                "disgust",
                "rage",
            ],
            PriorityTheme::Children => &["children", "youth"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PriorityTheme::Harm => "harm",
            PriorityTheme::Negativity => "negativity",
            PriorityTheme::Children => "children",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Term {
    tokens: Vec<String>,
    weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct TopicIndex {
    /// first token -> terms starting with it, longest first
    by_head: HashMap<String, Vec<Term>>,
}

#[derive(Deserialize)]
struct LexiconFile {
    topics: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    weights: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Topic name -> weighted term list. Multi-word terms match as contiguous
/// token runs; at each position the longest matching term wins and the
/// matched tokens are consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicLexicon {
    topics: BTreeMap<String, TopicIndex>,
    stem: bool,
}

impl TopicLexicon {
    pub fn new(topics: BTreeMap<String, Vec<(String, f64)>>, stem: bool) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (name, terms) in topics {
            if terms.is_empty() {
                return Err(Error::Config(format!("topic {name:?} has no terms")));
            }
            let mut idx = TopicIndex::default();
            let mut seen = HashSet::new();
            for (term, weight) in terms {
                if !(weight.is_finite() && weight > 0.0) {
                    return Err(Error::Config(format!("topic {name:?} term {term:?} has weight {weight}")));
                }
                let mut tokens = tokenize(&term);
                if stem {
                    tokens = tokens.iter().map(|t| light_stem(t)).collect();
                }
                if tokens.is_empty() || !seen.insert(tokens.clone()) {
                    continue;
                }
                idx.by_head.entry(tokens[0].clone()).or_default().push(Term { tokens, weight });
            }
            for v in idx.by_head.values_mut() {
                v.sort_by_key(|t| std::cmp::Reverse(t.tokens.len()));
            }
            out.insert(name, idx);
        }
        Ok(TopicLexicon { topics: out, stem })
    }

    pub fn from_toml_str(s: &str, stem: bool) -> Result<Self> {
        let f: LexiconFile = toml::from_str(s).map_err(|e| Error::parse("topic lexicon", e))?;
        let mut topics = BTreeMap::new();
        for (name, terms) in f.topics {
            let w = f.weights.get(&name);
            let weighted = terms
                .into_iter()
                .map(|t| {
                    let weight = w.and_then(|m| m.get(&t)).copied().unwrap_or(1.0);
                    (t, weight)
                })
                .collect();
            topics.insert(name, weighted);
        }
        Self::new(topics, stem)
    }

    pub fn has_topic(&self, topic: &str) -> bool {
        self.topics.contains_key(topic)
    }

    pub fn topic_names(&self) -> impl Iterator<Item = &str> {
        self.topics.keys().map(String::as_str)
    }

    /// Tokenizes text the way the lexicon expects.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        let toks = tokenize(text);
        if self.stem {
            toks.iter().map(|t| light_stem(t)).collect()
        } else {
            toks
        }
    }

    /// Weighted match total of `topic` over pre-tokenized text.
    pub fn matched_weight(&self, tokens: &[String], topic: &str) -> Result<f64> {
        let idx = self
            .topics
            .get(topic)
            .ok_or_else(|| Error::UnknownTopic(topic.to_string()))?;
        let mut total = 0.0;
        let mut i = 0;
        while i < tokens.len() {
            let hit = idx.by_head.get(&tokens[i]).and_then(|terms| {
                terms
                    .iter()
                    .find(|t| tokens.len() - i >= t.tokens.len() && tokens[i..i + t.tokens.len()] == t.tokens[..])
            });
            match hit {
                Some(t) => {
                    total += t.weight;
                    i += t.tokens.len();
                }
                None => i += 1,
            }
        }
        Ok(total)
    }

    pub fn topic_score_tokens(&self, tokens: &[String], topic: &str) -> Result<f64> {
        let matched = self.matched_weight(tokens, topic)?;
        if tokens.is_empty() {
            return Ok(0.0);
        }
        Ok(matched / tokens.len() as f64)
    }
}

/// Matched term weight divided by token count; 0 for empty text.
pub fn topic_score(text: &str, topic: &str, lexicon: &TopicLexicon) -> Result<f64> {
    lexicon.topic_score_tokens(&lexicon.tokens(text), topic)
}

/// Which lexicon topics feed which theme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThemeBindings {
    pub harm: Vec<String>,
    pub negativity: Vec<String>,
    pub children: Vec<String>,
}

impl ThemeBindings {
    /// The 21-topic table.
    pub fn canonical() -> Self {
        let own = |t: PriorityTheme| t.canonical_topics().iter().map(|s| s.to_string()).collect();
        ThemeBindings {
            harm: own(PriorityTheme::Harm),
            negativity: own(PriorityTheme::Negativity),
            children: own(PriorityTheme::Children),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::parse("theme bindings", e))
    }

    pub fn topics(&self, theme: PriorityTheme) -> &[String] {
        match theme {
            PriorityTheme::Harm => &self.harm,
            PriorityTheme::Negativity => &self.negativity,
            PriorityTheme::Children => &self.children,
        }
    }

    /// Checks the bindings against the canonical table and the lexicon.
    pub fn validate(&self, lexicon: &TopicLexicon) -> Result<()> {
        for theme in PriorityTheme::ALL {
            let got: HashSet<&str> = self.topics(theme).iter().map(String::as_str).collect();
            let want: HashSet<&str> = theme.canonical_topics().iter().copied().collect();
            if got != want || got.len() != self.topics(theme).len() {
                return Err(Error::Config(format!(
                    "theme {} must bind exactly {:?}",
                    theme.as_str(),
                    theme.canonical_topics()
                )));
            }
            if let Some(missing) = self.topics(theme).iter().find(|t| !lexicon.has_topic(t)) {
                return Err(Error::Config(format!("lexicon lacks topic {missing:?}")));
            }
        }
        Ok(())
    }
}

/// Sum of topic scores over the theme's topics.
pub fn theme_score(text: &str, theme: PriorityTheme, lexicon: &TopicLexicon, bindings: &ThemeBindings) -> Result<f64> {
    let tokens = lexicon.tokens(text);
    theme_score_tokens(&tokens, theme, lexicon, bindings)
}

fn theme_score_tokens(tokens: &[String], theme: PriorityTheme, lexicon: &TopicLexicon, bindings: &ThemeBindings) -> Result<f64> {
    bindings
        .topics(theme)
        .iter()
        .map(|t| lexicon.topic_score_tokens(tokens, t))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeScores {
    pub post_id: String,
    pub harm: f64,
    pub negativity: f64,
    pub children: f64,
}

impl ThemeScores {
    pub fn get(&self, theme: PriorityTheme) -> f64 {
        match theme {
            PriorityTheme::Harm => self.harm,
            PriorityTheme::Negativity => self.negativity,
            PriorityTheme::Children => self.children,
        }
    }
}

/// Scores one post on all three themes.
pub fn score_themes(post_id: &str, text: &str, lexicon: &TopicLexicon, bindings: &ThemeBindings) -> Result<ThemeScores> {
    let tokens = lexicon.tokens(text);
    Ok(ThemeScores {
        post_id: post_id.to_string(),
        harm: theme_score_tokens(&tokens, PriorityTheme::Harm, lexicon, bindings)?,
        negativity: theme_score_tokens(&tokens, PriorityTheme::Negativity, lexicon, bindings)?,
        children: theme_score_tokens(&tokens, PriorityTheme::Children, lexicon, bindings)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shipped() -> TopicLexicon {
        TopicLexicon::from_toml_str(include_str!("../data/topics.toml"), false).unwrap()
    }

    fn tiny() -> TopicLexicon {
        let mut m = BTreeMap::new();
        m.insert("violence".to_string(), vec![("hit".to_string(), 1.0), ("stab".to_string(), 1.0)]);
        m.insert("fear".to_string(), vec![("scared".to_string(), 2.0), ("so much pain".to_string(), 1.0)]);
        TopicLexicon::new(m, false).unwrap()
    }

    #[test]
    fn count_rule() {
        let text = "he tried to hit me and stab me at night";
        assert_eq!(tokenize(text).len(), 10);
        assert!((topic_score(text, "violence", &tiny()).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn empty_and_unmatched() {
        assert_eq!(topic_score("", "violence", &tiny()).unwrap(), 0.0);
        assert_eq!(topic_score("lovely day", "violence", &tiny()).unwrap(), 0.0);
        assert!(matches!(topic_score("x", "nope", &tiny()), Err(Error::UnknownTopic(_))));
    }

    #[test]
    fn weighted_and_multiword_terms() {
        // 5 tokens: "scared" weighs 2, "so much pain" consumes three tokens
        let s = topic_score("scared so much pain today", "fear", &tiny()).unwrap();
        assert!((s - 3.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn harm_sum_of_topic_scores() {
        let lex = shipped();
        let b = ThemeBindings::canonical();
        b.validate(&lex).unwrap();
        let text = "the pain after the injury in the hospital";
        let parts: f64 = b.harm.iter().map(|t| topic_score(text, t, &lex).unwrap()).sum();
        assert_eq!(theme_score(text, PriorityTheme::Harm, &lex, &b).unwrap(), parts);
        assert_eq!(theme_score("sunny", PriorityTheme::Harm, &lex, &b).unwrap(), 0.0);
    }

    #[test]
    fn shipped_themes_file_matches_table() {
        let b = ThemeBindings::from_toml_str(include_str!("../data/themes.toml")).unwrap();
        assert_eq!(b, ThemeBindings::canonical());
        let n: usize = PriorityTheme::ALL.iter().map(|t| b.topics(*t).len()).sum();
        assert_eq!(n, 21);
    }

    #[test]
    fn validation_rejects_moved_topic() {
        let mut b = ThemeBindings::canonical();
        let t = b.harm.pop().unwrap();
        b.negativity.push(t);
        assert!(b.validate(&shipped()).is_err());
    }

    fn naive_topic(tokens: &[String], terms: &[&str]) -> f64 {
        if tokens.is_empty() {
            return 0.0;
        }
        tokens.iter().filter(|t| terms.contains(&t.as_str())).count() as f64 / tokens.len() as f64
    }

    proptest! {
        #[test]
        fn multiset_invariance_and_bounds(words in prop::collection::vec(prop::sample::select(vec!["hit", "stab", "calm", "dog", "scared", "x"]), 0..30), rot in 0usize..30) {
            let lex = tiny();
            let text = words.join(" ");
            let s = topic_score(&text, "violence", &lex).unwrap();
            let mut rotated = words.clone();
            if !rotated.is_empty() {
                let k = rot % rotated.len();
                rotated.rotate_left(k);
            }
            prop_assert_eq!(s, topic_score(&rotated.join(" "), "violence", &lex).unwrap());
            prop_assert!((0.0..=1.0).contains(&s));
            let toks = tokenize(&text);
            prop_assert!((s - naive_topic(&toks, &["hit", "stab"])).abs() < 1e-12);
            let longer = format!("{text} hit");
            let before = lex.matched_weight(&toks, "violence").unwrap();
            let after = lex.matched_weight(&tokenize(&longer), "violence").unwrap();
            prop_assert!(after >= before);
        }
    }
}
