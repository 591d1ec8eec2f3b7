use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Cluster, MarginAxis};

/// Name given to a cluster with no majority axis.
pub const MIXED: &str = "Mixed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityCluster {
    pub name: String,
    pub members: Vec<String>,
    pub profile: [f64; MarginAxis::COUNT],
}

pub(crate) fn name_for_profile(profile: &[f64; MarginAxis::COUNT]) -> String {
    let axes: Vec<&str> = MarginAxis::ALL
        .iter()
        .zip(profile.iter())
        .filter(|(_, f)| **f > 0.5)
        .map(|(a, _)| a.label())
        .collect();
    if axes.is_empty() {
        MIXED.to_string()
    } else {
        axes.join(" x ")
    }
}

/// Names each cluster after the axes held by a strict majority of its
/// members, joined with " x " in axis order. Repeated names get a `#2`,
/// `#3`, ... suffix in cluster order.
pub fn name_clusters(clusters: &[Cluster]) -> Vec<CommunityCluster> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    clusters
        .iter()
        .map(|c| {
            let profile = c.profile();
            let base = name_for_profile(&profile);
            let count = seen.entry(base.clone()).or_insert(0);
            *count += 1;
            let name = if *count == 1 { base } else { format!("{base} #{count}") };
            CommunityCluster {
                name,
                members: c.members.iter().map(|m| m.subreddit.clone()).collect(),
                profile,
            }
        })
        .collect()
}
