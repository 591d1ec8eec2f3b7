//! Aggregate frequency tables and chart rendering.

mod chart;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classify::EthicalConcernCategory;
use crate::error::{Error, Result};
use crate::ingest::{AppMatcher, RawPost};

pub use chart::render_bar_svg;

/// One aggregate row; `key` has one entry per key column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub key: Vec<String>,
    pub numerator: u64,
    pub denominator: u64,
}

impl FrequencyRow {
    pub fn frequency(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Percentage with one decimal, e.g. `22.3%`.
    pub fn percent(&self) -> String {
        format_percent(self.frequency())
    }

    /// Proportion with three decimals, e.g. `0.026`.
    pub fn proportion(&self) -> String {
        format_proportion(self.frequency())
    }
}

pub fn format_percent(f: f64) -> String {
    format!("{:.1}%", 100.0 * f)
}

pub fn format_proportion(f: f64) -> String {
    format!("{f:.3}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub key_columns: Vec<String>,
    pub rows: Vec<FrequencyRow>,
}

impl FrequencyTable {
    pub fn row(&self, key: &[&str]) -> Option<&FrequencyRow> {
        self.rows.iter().find(|r| r.key.iter().map(String::as_str).eq(key.iter().copied()))
    }

    /// Rows by descending frequency, ties in table order.
    pub fn sorted_by_frequency(&self) -> Vec<&FrequencyRow> {
        let mut rows: Vec<&FrequencyRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.frequency().total_cmp(&a.frequency()));
        rows
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::parse("frequency table", e.to_string());
        let mut header = self.key_columns.clone();
        header.extend(["numerator", "denominator", "proportion", "percent"].map(String::from));
        w.write_record(&header).map_err(err)?;
        for r in &self.rows {
            let mut rec = r.key.clone();
            rec.extend([r.numerator.to_string(), r.denominator.to_string(), r.proportion(), r.percent()]);
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("frequency table", e))
    }
}

/// Share of categorized posts in each of the eleven categories. `None`
/// labels are not counted; categories without posts keep a zero row.
pub fn frequency_by_category(categories: impl IntoIterator<Item = EthicalConcernCategory>) -> Result<FrequencyTable> {
    let mut counts: BTreeMap<EthicalConcernCategory, u64> = BTreeMap::new();
    for c in categories.into_iter().filter(|c| c.is_concern()) {
        *counts.entry(c).or_default() += 1;
    }
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::InvalidInput("no categorized posts".into()));
    }
    Ok(FrequencyTable {
        key_columns: vec!["category".into()],
        rows: EthicalConcernCategory::CONCERNS
            .iter()
            .map(|c| FrequencyRow {
                key: vec![c.name().into()],
                numerator: counts.get(c).copied().unwrap_or(0),
                denominator: total,
            })
            .collect(),
    })
}

/// Concern posts over all posts mentioning each app. A post naming several
/// apps counts once for each; apps never mentioned are left out.
pub fn frequency_by_app(posts: &[RawPost], concerns: &BTreeMap<String, bool>, matcher: &AppMatcher) -> FrequencyTable {
    let mut counts: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for p in posts {
        let Some(&flag) = concerns.get(&p.id) else { continue };
        let apps: BTreeSet<String> = matcher.mentions(&p.full_text()).into_iter().map(|m| m.app).collect();
        for app in apps {
            let c = counts.entry(app).or_default();
            c.0 += flag as u64;
            c.1 += 1;
        }
    }
    FrequencyTable {
        key_columns: vec!["app".into()],
        rows: counts
            .into_iter()
            .map(|(app, (n, d))| FrequencyRow {
                key: vec![app],
                numerator: n,
                denominator: d,
            })
            .collect(),
    }
}

/// Per cluster, the share of its posts in each category. Every post's
/// subreddit must belong to a cluster; every cluster gets all eleven rows.
pub fn frequency_by_community(
    posts: &[RawPost],
    cluster_of: &BTreeMap<String, String>,
    categories: &BTreeMap<String, EthicalConcernCategory>,
) -> Result<FrequencyTable> {
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    let mut hits: BTreeMap<(&str, EthicalConcernCategory), u64> = BTreeMap::new();
    for p in posts {
        let cluster = cluster_of
            .get(&p.subreddit)
            .ok_or_else(|| Error::InvalidInput(format!("subreddit {} of post {} has no cluster", p.subreddit, p.id)))?;
        *totals.entry(cluster).or_default() += 1;
        if let Some(c) = categories.get(&p.id).filter(|c| c.is_concern()) {
            *hits.entry((cluster.as_str(), *c)).or_default() += 1;
        }
    }
    let mut rows = Vec::new();
    for (cluster, total) in totals {
        for c in EthicalConcernCategory::CONCERNS {
            rows.push(FrequencyRow {
                key: vec![cluster.to_string(), c.name().to_string()],
                numerator: hits.get(&(cluster, c)).copied().unwrap_or(0),
                denominator: total,
            });
        }
    }
    Ok(FrequencyTable {
        key_columns: vec!["cluster".into(), "category".into()],
        rows,
    })
}
