//! Post corpora: parsing, windowing, filtering and stratified sampling.

mod catalog;
mod sample;

use std::collections::HashSet;
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use catalog::{AppCatalog, AppDomain, AppEntry, AppMatcher, Mention};
pub use sample::{stratified_sample, Sample, SamplePlan, Shortfall, StratumKey};

/// Default number of characters kept on either side of a windowing keyword.
pub const DEFAULT_WINDOW_RADIUS: usize = 300;

/// One forum post with its engagement metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: String,
    pub subreddit: String,
    /// Seconds since the Unix epoch (UTC).
    pub created_utc: i64,
    pub title: String,
    pub body: String,
    pub upvotes: u64,
    pub upvote_ratio: f64,
    pub num_comments: u64,
}

impl RawPost {
    /// Title and body joined by a newline; the text every matcher sees.
    pub fn full_text(&self) -> String {
        format!("{}\n{}", self.title, self.body)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("field `id` is empty".into());
        }
        if self.created_utc <= 0 {
            return Err(format!("field `created_utc` must be positive, got {}", self.created_utc));
        }
        if !(0.0..=1.0).contains(&self.upvote_ratio) {
            return Err(format!("field `upvote_ratio` out of [0,1]: {}", self.upvote_ratio));
        }
        Ok(())
    }
}

/// A record that could not be turned into a [`RawPost`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    /// 1-based line number in the input stream.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub posts: Vec<RawPost>,
    pub errors: Vec<RecordError>,
}

impl Corpus {
    pub fn from_posts(posts: Vec<RawPost>) -> Self {
        Corpus {
            posts,
            errors: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }
}

/// Parses line-delimited JSON posts. Malformed lines and duplicate ids are
/// collected as [`RecordError`]s; the first occurrence of an id wins.
pub fn parse_posts<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::parse(format!("line {line_no}"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let post: RawPost = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => {
                corpus.errors.push(RecordError {
                    line: line_no,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if let Err(message) = post.validate() {
            corpus.errors.push(RecordError { line: line_no, message });
            continue;
        }
        if !seen.insert(post.id.clone()) {
            corpus.errors.push(RecordError {
                line: line_no,
                message: format!("duplicate id {:?}", post.id),
            });
            continue;
        }
        corpus.posts.push(post);
    }
    Ok(corpus)
}

/// Writes posts back out as JSONL, one record per line.
pub fn write_posts<W: Write>(mut writer: W, posts: &[RawPost]) -> Result<()> {
    for post in posts {
        let line = serde_json::to_string(post).map_err(|e| Error::parse("serialize post", e))?;
        writeln!(writer, "{line}").map_err(|e| Error::io("<posts>", e))?;
    }
    Ok(())
}

/// A keyword-centred excerpt of a post.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowedText {
    pub post_id: String,
    pub keyword: String,
    pub text: String,
}

fn chars_eq_ignore_case(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Char offset of the first case-insensitive occurrence of `needle`.
pub(crate) fn find_ignore_case(haystack: &[char], needle: &[char]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    (0..=haystack.len() - needle.len()).find(|&start| {
        haystack[start..start + needle.len()]
            .iter()
            .zip(needle)
            .all(|(&a, &b)| chars_eq_ignore_case(a, b))
    })
}

/// Cuts the post's full text down to the first occurrence of `keyword` plus
/// `radius` characters on each side. Offsets count Unicode scalar values.
pub fn window_text(post: &RawPost, keyword: &str, radius: usize) -> Result<WindowedText> {
    let text: Vec<char> = post.full_text().chars().collect();
    let needle: Vec<char> = keyword.chars().collect();
    let start = find_ignore_case(&text, &needle).ok_or_else(|| Error::KeywordNotFound {
        post_id: post.id.clone(),
        keyword: keyword.to_string(),
    })?;
    let lo = start.saturating_sub(radius);
    let hi = (start + needle.len() + radius).min(text.len());
    Ok(WindowedText {
        post_id: post.id.clone(),
        keyword: keyword.to_string(),
        text: text[lo..hi].iter().collect(),
    })
}

/// Seconds since the epoch of midnight UTC on `date`.
pub fn date_to_timestamp(date: NaiveDate) -> i64 {
    date.and_hms_opt(0, 0, 0)
        .expect("midnight is always valid")
        .and_utc()
        .timestamp()
}

/// Keeps posts created on or after `min_date` that mention at least one
/// allowlisted app. Order is preserved.
pub fn filter_corpus(
    corpus: &Corpus,
    catalog: &AppCatalog,
    allowlist: &[String],
    min_date: NaiveDate,
) -> Result<Corpus> {
    let matcher = catalog.matcher(allowlist)?;
    let min_ts = date_to_timestamp(min_date);
    let posts = corpus
        .posts
        .iter()
        .filter(|p| p.created_utc >= min_ts && matcher.mentions_any(&p.full_text()))
        .cloned()
        .collect();
    Ok(Corpus {
        posts,
        errors: corpus.errors.clone(),
    })
}
