use std::collections::BTreeMap;

use concern_core::defaults::{theme_bindings, topic_lexicon, THEMES_TOML, TOPICS_TOML};
use concern_core::lexicon::{score_themes, theme_score, PriorityTheme};
use proptest::prelude::*;

const TOL: f64 = 1e-12;

// Frozen from a standalone token-count script run over the shipped lexicon.
#[test]
fn threat_fixture_matches_token_count_oracle() {
    let lex = topic_lexicon(false).unwrap();
    let b = theme_bindings().unwrap();
    let s = score_themes("p", "he threatened to kill her, the violence was terrifying", &lex, &b).unwrap();
    assert!((s.harm - 5.0 / 9.0).abs() < TOL, "{}", s.harm);
    assert!((s.negativity - 8.0 / 9.0).abs() < TOL, "{}", s.negativity);
    assert_eq!(s.children, 0.0);
}

#[test]
fn medical_fixture_matches_token_count_oracle() {
    let lex = topic_lexicon(false).unwrap();
    let b = theme_bindings().unwrap();
    let text = "My kids saw a graphic video of a medical emergency and started crying";
    let s = score_themes("p", text, &lex, &b).unwrap();
    assert!((s.harm - 2.0 / 13.0).abs() < TOL);
    assert!((s.negativity - 1.0 / 13.0).abs() < TOL);
    assert_eq!(s.children, 0.0);
}

#[derive(serde::Deserialize)]
struct Lexicon {
    topics: BTreeMap<String, Vec<String>>,
}

#[derive(serde::Deserialize)]
struct Themes {
    harm: Vec<String>,
    negativity: Vec<String>,
    children: Vec<String>,
}

fn words(s: &str) -> Vec<String> {
    s.to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

/// Straightforward rescoring: at each position take the longest listed term
/// that starts there, count it, and jump past it.
fn naive_theme(text: &str, topics: &[String], lex: &Lexicon) -> f64 {
    let toks = words(text);
    if toks.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for topic in topics {
        let mut terms: Vec<Vec<String>> = lex.topics[topic].iter().map(|t| words(t)).collect();
        terms.sort_by_key(|t| std::cmp::Reverse(t.len()));
        let mut hits = 0usize;
        let mut i = 0;
        while i < toks.len() {
            match terms.iter().find(|t| toks[i..].starts_with(t)) {
                Some(t) => {
                    hits += 1;
                    i += t.len();
                }
                None => i += 1,
            }
        }
        sum += hits as f64 / toks.len() as f64;
    }
    sum
}

fn vocabulary() -> Vec<String> {
    let lex: Lexicon = toml::from_str(TOPICS_TOML).unwrap();
    let mut v: Vec<String> = lex.topics.values().flat_map(|t| t.iter().take(12).cloned()).collect();
    v.extend(["the", "app", "was", "and", "my", "post", "really", "today", "medical emergency"].map(String::from));
    v.sort();
    v.dedup();
    v
}

proptest! {
    #[test]
    fn theme_score_equals_naive_rescoring(picks in prop::collection::vec(any::<prop::sample::Index>(), 0..40),
                                          seps in prop::collection::vec(prop::sample::select(vec![" ", ", ", ". ", "\n", "!  "]), 40)) {
        let vocab = vocabulary();
        let mut text = String::new();
        for (p, s) in picks.iter().zip(&seps) {
            text.push_str(p.get(&vocab));
            text.push_str(s);
        }
        let lex = topic_lexicon(false).unwrap();
        let b = theme_bindings().unwrap();
        let raw: Lexicon = toml::from_str(TOPICS_TOML).unwrap();
        let themes: Themes = toml::from_str(THEMES_TOML).unwrap();
        for (theme, topics) in [
            (PriorityTheme::Harm, &themes.harm),
            (PriorityTheme::Negativity, &themes.negativity),
            (PriorityTheme::Children, &themes.children),
        ] {
            let got = theme_score(&text, theme, &lex, &b).unwrap();
            let want = naive_theme(&text, topics, &raw);
            prop_assert!((got - want).abs() < TOL, "{theme:?}: {got} vs {want} for {text:?}");
        }
    }

    #[test]
    fn score_depends_only_on_token_multiset(picks in prop::collection::vec(any::<prop::sample::Index>(), 1..25), seed in any::<u64>()) {
        let vocab: Vec<String> = vocabulary().into_iter().filter(|w| !w.contains(' ')).collect();
        let mut toks: Vec<&str> = picks.iter().map(|p| p.get(&vocab).as_str()).collect();
        let lex = topic_lexicon(false).unwrap();
        let b = theme_bindings().unwrap();
        let a = score_themes("p", &toks.join(" "), &lex, &b).unwrap();
        let n = toks.len();
        toks.rotate_left((seed % n as u64) as usize);
        toks.reverse();
        let c = score_themes("p", &toks.join(" "), &lex, &b).unwrap();
        prop_assert!((a.harm - c.harm).abs() < TOL);
        prop_assert!((a.negativity - c.negativity).abs() < TOL);
        prop_assert!((a.children - c.children).abs() < TOL);
    }
}
