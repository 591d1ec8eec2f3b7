//! Intersectional community detection over subreddit membership vectors.

mod dendrogram;
mod naming;

use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dendrogram::{agglomerate, cut_at_gap, Cluster, Dendrogram, Linkage, Merge, DEFAULT_GAP_FACTOR};
pub use naming::{name_clusters, CommunityCluster, MIXED};

/// The seven marginalization axes, in their fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MarginAxis {
    #[serde(rename = "BIPOC")]
    Bipoc,
    WomenAFAB,
    #[serde(rename = "LGBTQIA")]
    Lgbtqia,
    LowSES,
    GlobalSouth,
    PhysicalHealth,
    MentalHealth,
}

impl MarginAxis {
    pub const COUNT: usize = 7;
    pub const ALL: [MarginAxis; 7] = [
        MarginAxis::Bipoc,
        MarginAxis::WomenAFAB,
        MarginAxis::Lgbtqia,
        MarginAxis::LowSES,
        MarginAxis::GlobalSouth,
        MarginAxis::PhysicalHealth,
        MarginAxis::MentalHealth,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MarginAxis::Bipoc => "BIPOC",
            MarginAxis::WomenAFAB => "WomenAFAB",
            MarginAxis::Lgbtqia => "LGBTQIA",
            MarginAxis::LowSES => "LowSES",
            MarginAxis::GlobalSouth => "GlobalSouth",
            MarginAxis::PhysicalHealth => "PhysicalHealth",
            MarginAxis::MentalHealth => "MentalHealth",
        }
    }

    /// Column name in the membership CSV.
    pub fn column(self) -> &'static str {
        match self {
            MarginAxis::Bipoc => "bipoc",
            MarginAxis::WomenAFAB => "women_afab",
            MarginAxis::Lgbtqia => "lgbtqia",
            MarginAxis::LowSES => "low_ses",
            MarginAxis::GlobalSouth => "global_south",
            MarginAxis::PhysicalHealth => "physical_health",
            MarginAxis::MentalHealth => "mental_health",
        }
    }
}

impl fmt::Display for MarginAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Binary membership of one subreddit across the seven axes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipVector {
    pub subreddit: String,
    pub bits: [bool; MarginAxis::COUNT],
}

impl MembershipVector {
    pub fn new(subreddit: impl Into<String>, axes: &[MarginAxis]) -> Self {
        let mut bits = [false; MarginAxis::COUNT];
        for &a in axes {
            bits[a as usize] = true;
        }
        MembershipVector {
            subreddit: subreddit.into(),
            bits,
        }
    }

    pub fn has(&self, axis: MarginAxis) -> bool {
        self.bits[axis as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn distance(&self, other: &MembershipVector) -> f64 {
        let diff = self
            .bits
            .iter()
            .zip(other.bits.iter())
            .filter(|(a, b)| a != b)
            .count();
        (diff as f64).sqrt()
    }

    /// An intersectional subreddit sits on at least two axes.
    pub fn is_intersectional(&self) -> bool {
        self.count() >= 2
    }
}

/// Reads the membership CSV (`subreddit` plus one 0/1 column per axis).
pub fn read_memberships<R: Read>(reader: R) -> Result<Vec<MembershipVector>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::parse("membership csv", e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::parse("membership csv", format!("missing column {name:?}")))
    };
    let sub_col = col("subreddit")?;
    let axis_cols = MarginAxis::ALL
        .iter()
        .map(|a| col(a.column()))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::parse(format!("membership csv row {row}"), e))?;
        let mut bits = [false; MarginAxis::COUNT];
        for (axis, &c) in axis_cols.iter().enumerate() {
            bits[axis] = match rec.get(c) {
                Some("1") => true,
                Some("0") => false,
                other => {
                    return Err(Error::parse(
                        format!("membership csv row {row}"),
                        format!("column {:?} must be 0 or 1, got {other:?}", MarginAxis::ALL[axis].column()),
                    ))
                }
            };
        }
        let v = MembershipVector {
            subreddit: rec.get(sub_col).unwrap_or_default().to_string(),
            bits,
        };
        if !v.is_intersectional() {
            log::warn!("subreddit {:?} has fewer than two axes set", v.subreddit);
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_between_single_axis_vectors() {
        let a = MembershipVector::new("a", &[MarginAxis::Bipoc]);
        let b = MembershipVector::new("b", &[MarginAxis::WomenAFAB]);
        assert_eq!(a.distance(&b), 2f64.sqrt());
        assert_eq!(a.distance(&a), 0.0);
    }

    #[test]
    fn reads_csv() {
        let csv = "subreddit,bipoc,women_afab,lgbtqia,low_ses,global_south,physical_health,mental_health\n\
                   BlackWomenDivest,1,1,0,0,0,0,0\n\
                   ketogd,0,1,0,0,0,1,0\n";
        let v = read_memberships(csv.as_bytes()).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v[0].has(MarginAxis::Bipoc) && v[0].has(MarginAxis::WomenAFAB));
        assert!(v[1].has(MarginAxis::PhysicalHealth));
    }

    #[test]
    fn rejects_non_binary_cells() {
        let csv = "subreddit,bipoc,women_afab,lgbtqia,low_ses,global_south,physical_health,mental_health\n\
                   x,2,1,0,0,0,0,0\n";
        assert!(read_memberships(csv.as_bytes()).is_err());
    }
}
