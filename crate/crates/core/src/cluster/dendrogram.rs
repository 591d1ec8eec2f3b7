use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{MarginAxis, MembershipVector};
use crate::error::{Error, Result};

pub const DEFAULT_GAP_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Average,
    Complete,
    Single,
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "average" => Ok(Linkage::Average),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(Error::Config(format!("unknown linkage {other:?}"))),
        }
    }
}

/// One merge step. Node ids follow the usual convention: leaves are
/// `0..n`, and merge `i` creates node `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    /// Leaf vectors, sorted by subreddit name.
    pub leaves: Vec<MembershipVector>,
    pub merges: Vec<Merge>,
    pub linkage: Linkage,
}

impl Dendrogram {
    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn heights(&self) -> impl Iterator<Item = f64> + '_ {
        self.merges.iter().map(|m| m.height)
    }

    /// Leaf indices per cluster after applying the first `n_merges` merges.
    /// Clusters are ordered by their smallest leaf index.
    pub fn clusters_after(&self, n_merges: usize) -> Vec<Vec<usize>> {
        let n = self.leaves.len();
        let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
        for m in &self.merges[..n_merges.min(self.merges.len())] {
            let mut a = members[m.left].take().expect("node merged twice");
            let b = members[m.right].take().expect("node merged twice");
            a.extend(b);
            members.push(Some(a));
        }
        let mut out: Vec<Vec<usize>> = members
            .into_iter()
            .flatten()
            .map(|mut v| {
                v.sort_unstable();
                v
            })
            .collect();
        out.sort_by_key(|v| v[0]);
        out
    }

    /// Graphviz rendering for inspection.
    pub fn to_dot(&self) -> String {
        let n = self.leaves.len();
        let mut s = String::from("digraph dendrogram {\n  rankdir=BT;\n  node [shape=box, fontsize=10];\n");
        for (i, leaf) in self.leaves.iter().enumerate() {
            let axes: Vec<&str> = MarginAxis::ALL
                .iter()
                .filter(|a| leaf.has(**a))
                .map(|a| a.label())
                .collect();
            let _ = writeln!(
                s,
                "  n{i} [label=\"{}\\n{}\"];",
                escape(&leaf.subreddit),
                axes.join(" x ")
            );
        }
        for (k, m) in self.merges.iter().enumerate() {
            let id = n + k;
            let _ = writeln!(s, "  n{id} [shape=point, xlabel=\"{:.3}\"];", m.height);
            let _ = writeln!(s, "  n{} -> n{id};", m.left);
            let _ = writeln!(s, "  n{} -> n{id};", m.right);
        }
        s.push_str("}\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Agglomerative clustering on Euclidean distances between membership
/// vectors.
///
/// Input is first sorted by subreddit name so the tree does not depend on
/// input order. Among equally close pairs the one with the lexicographically
/// smallest (lower id, higher id) node pair merges first.
pub fn agglomerate(vectors: &[MembershipVector], linkage: Linkage) -> Result<Dendrogram> {
    if vectors.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "agglomerative clustering needs at least 2 vectors, got {}",
            vectors.len()
        )));
    }
    let mut leaves = vectors.to_vec();
    leaves.sort_by(|a, b| a.subreddit.cmp(&b.subreddit));
    let mut names = HashSet::new();
    for l in &leaves {
        if !names.insert(l.subreddit.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate subreddit {:?}", l.subreddit)));
        }
    }

    let n = leaves.len();
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = leaves[i].distance(&leaves[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    // slot -> (node id, size); None once absorbed
    let mut slots: Vec<Option<(usize, usize)>> = (0..n).map(|i| Some((i, 1))).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None; // (d, lo id, hi id, slot a, slot b)
        for a in 0..n {
            let Some((ida, _)) = slots[a] else { continue };
            for b in (a + 1)..n {
                let Some((idb, _)) = slots[b] else { continue };
                let d = dist[a * n + b];
                let (lo, hi) = if ida < idb { (ida, idb) } else { (idb, ida) };
                let better = match best {
                    None => true,
                    Some((bd, blo, bhi, _, _)) => d < bd || (d == bd && (lo, hi) < (blo, bhi)),
                };
                if better {
                    best = Some((d, lo, hi, a, b));
                }
            }
        }
        let (height, lo, hi, a, b) = best.expect("at least two active clusters");
        let (_, size_a) = slots[a].unwrap();
        let (_, size_b) = slots[b].unwrap();
        let merged_size = size_a + size_b;

        for k in 0..n {
            if k == a || k == b || slots[k].is_none() {
                continue;
            }
            let dak = dist[a * n + k];
            let dbk = dist[b * n + k];
            let d = match linkage {
                Linkage::Single => dak.min(dbk),
                Linkage::Complete => dak.max(dbk),
                Linkage::Average => (size_a as f64 * dak + size_b as f64 * dbk) / merged_size as f64,
            };
            dist[a * n + k] = d;
            dist[k * n + a] = d;
        }
        slots[a] = Some((n + step, merged_size));
        slots[b] = None;
        merges.push(Merge {
            left: lo,
            right: hi,
            height,
            size: merged_size,
        });
    }

    Ok(Dendrogram {
        leaves,
        merges,
        linkage,
    })
}

/// A flat cluster before naming.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub members: Vec<MembershipVector>,
}

impl Cluster {
    /// Fraction of members carrying each axis.
    pub fn profile(&self) -> [f64; MarginAxis::COUNT] {
        let mut p = [0.0; MarginAxis::COUNT];
        if self.members.is_empty() {
            return p;
        }
        for m in &self.members {
            for (slot, bit) in p.iter_mut().zip(m.bits.iter()) {
                if *bit {
                    *slot += 1.0;
                }
            }
        }
        let n = self.members.len() as f64;
        p.iter_mut().for_each(|v| *v /= n);
        p
    }
}

/// Number of merges applied by the gap rule.
pub(crate) fn gap_cut_index(heights: &[f64], gap_factor: f64) -> usize {
    (1..heights.len())
        .find(|&i| heights[i] > gap_factor * heights[i - 1])
        .unwrap_or(heights.len().saturating_sub(1))
}

/// Cuts the tree just below the first merge whose height exceeds
/// `gap_factor` times the height of the merge before it. Without such a gap
/// the cut keeps the last merge's two children apart.
pub fn cut_at_gap(d: &Dendrogram, gap_factor: f64) -> Vec<Cluster> {
    let heights: Vec<f64> = d.heights().collect();
    let applied = gap_cut_index(&heights, gap_factor);
    d.clusters_after(applied)
        .into_iter()
        .map(|idx| Cluster {
            members: idx.into_iter().map(|i| d.leaves[i].clone()).collect(),
        })
        .collect()
}
