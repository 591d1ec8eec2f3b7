//! Tokenization shared by the lexicon-driven scorers.

/// Lowercases `text` and splits it on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Like [`tokenize`] but keeps apostrophes that sit inside a word, so
/// contractions such as `don't` survive as a single token.
pub fn tokenize_keep_apostrophes(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let inner_apostrophe = (c == '\'' || c == '’')
            && !cur.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if inner_apostrophe {
            cur.push('\'');
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Returns true when `phrase` occurs in `tokens` as a contiguous run.
pub fn contains_phrase(tokens: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && tokens.windows(phrase.len()).any(|w| w == phrase)
}

/// Number of (possibly overlapping) occurrences of `phrase` in `tokens`.
pub fn count_phrase(tokens: &[String], phrase: &[String]) -> usize {
    if phrase.is_empty() {
        return 0;
    }
    tokens.windows(phrase.len()).filter(|w| *w == phrase).count()
}

/// A light suffix stripper used when stemming is switched on. It only folds
/// common inflections (plural `s`/`es`, `ing`, `ed`) and leaves short words alone.
pub fn light_stem(token: &str) -> String {
    let n = token.chars().count();
    for (suffix, min_len) in [("ing", 6), ("ed", 5), ("es", 5), ("s", 4)] {
        if n >= min_len && token.ends_with(suffix) && !token.ends_with("ss") {
            return token[..token.len() - suffix.len()].to_string();
        }
    }
    token.to_string()
}
