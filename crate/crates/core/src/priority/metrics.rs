use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 20;
pub const DEFAULT_RELEVANCE_THRESHOLD: f64 = 4.0;

/// Mean survey rating per post, each in [1, 5].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth(BTreeMap<String, f64>);

impl GroundTruth {
    pub fn new(ratings: BTreeMap<String, f64>) -> Result<Self> {
        if let Some((id, r)) = ratings.iter().find(|(_, r)| !(1.0..=5.0).contains(*r)) {
            return Err(Error::InvalidInput(format!("rating {r} for post {id} outside [1, 5]")));
        }
        Ok(GroundTruth(ratings))
    }

    /// Reads `post_id,mean_rating` rows with a header line.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            post_id: String,
            mean_rating: f64,
        }
        let mut map = BTreeMap::new();
        for (i, row) in csv::Reader::from_reader(reader).deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::parse(format!("ground truth row {}", i + 2), e.to_string()))?;
            if map.insert(row.post_id.clone(), row.mean_rating).is_some() {
                return Err(Error::InvalidInput(format!("duplicate ground truth for post {}", row.post_id)));
            }
        }
        Self::new(map)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::parse("ground truth", e.to_string());
        w.write_record(["post_id", "mean_rating"]).map_err(err)?;
        for (id, r) in &self.0 {
            w.write_record([id.as_str(), &r.to_string()]).map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("ground truth", e))
    }

    pub fn get(&self, post_id: &str) -> Option<f64> {
        self.0.get(post_id).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_relevant(&self, post_id: &str, threshold: f64) -> Option<bool> {
        self.get(post_id).map(|r| r >= threshold)
    }
}

/// Precision and recall of one ranked list at a cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtK {
    pub precision: f64,
    pub recall: f64,
    /// Cutoff actually used after clamping to the list length.
    pub k: usize,
    pub relevant: usize,
}

/// `|rel ∩ top-k| / k` and `|rel ∩ top-k| / |rel|`, with `k` clamped to the
/// list length. With no relevant items recall is 1 and precision 0.
pub fn precision_recall_at_k(ranked: &[&str], truth: &GroundTruth, k: usize, threshold: f64) -> Result<AtK> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if ranked.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate an empty ranking".into()));
    }
    let mut flags = Vec::with_capacity(ranked.len());
    for id in ranked {
        flags.push(
            truth
                .is_relevant(id, threshold)
                .ok_or_else(|| Error::InvalidInput(format!("post {id} has no ground truth")))?,
        );
    }
    Ok(at_k_flags(&flags, k))
}

pub(crate) fn at_k_flags(flags: &[bool], k: usize) -> AtK {
    let k = k.min(flags.len());
    let relevant = flags.iter().filter(|f| **f).count();
    let hits = flags[..k].iter().filter(|f| **f).count();
    let recall = if relevant == 0 { 1.0 } else { hits as f64 / relevant as f64 };
    AtK {
        precision: hits as f64 / k as f64,
        recall,
        k,
        relevant,
    }
}

/// Cross-validated precision and recall, averaged over test folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub precision_at_k: f64,
    pub recall_at_k: f64,
    /// Requested cutoff; each fold clamps it to its own size.
    pub k: usize,
    pub per_fold: Vec<AtK>,
    /// Test folds with no relevant posts.
    pub degenerate_folds: usize,
}

impl EvalMetrics {
    pub fn from_folds(k: usize, per_fold: Vec<AtK>) -> Self {
        let n = per_fold.len().max(1) as f64;
        EvalMetrics {
            precision_at_k: per_fold.iter().map(|f| f.precision).sum::<f64>() / n,
            recall_at_k: per_fold.iter().map(|f| f.recall).sum::<f64>() / n,
            k,
            degenerate_folds: per_fold.iter().filter(|f| f.relevant == 0).count(),
            per_fold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn truth(ratings: &[f64]) -> (GroundTruth, Vec<String>) {
        let ids: Vec<String> = (0..ratings.len()).map(|i| format!("p{i:03}")).collect();
        let map = ids.iter().cloned().zip(ratings.iter().copied()).collect();
        (GroundTruth::new(map).unwrap(), ids)
    }

    #[test]
    fn five_of_ten() {
        let (t, ids) = truth(&[5.0, 1.0, 4.0, 2.0, 2.0, 4.5, 4.0, 1.0, 3.9, 4.0]);
        let r: Vec<&str> = ids.iter().map(String::as_str).collect();
        let m = precision_recall_at_k(&r, &t, 3, 4.0).unwrap();
        assert_eq!(m.precision, 2.0 / 3.0);
        assert_eq!(m.recall, 2.0 / 5.0);
    }

    #[test]
    fn clamps_and_conventions() {
        let (t, ids) = truth(&[5.0, 4.0]);
        let r: Vec<&str> = ids.iter().map(String::as_str).collect();
        let m = precision_recall_at_k(&r, &t, 20, 4.0).unwrap();
        assert_eq!((m.precision, m.recall, m.k), (1.0, 1.0, 2));
        let (t, ids) = truth(&[1.0, 2.0, 3.0]);
        let r: Vec<&str> = ids.iter().map(String::as_str).collect();
        let m = precision_recall_at_k(&r, &t, 2, 4.0).unwrap();
        assert_eq!((m.precision, m.recall), (0.0, 1.0));
        assert!(precision_recall_at_k(&r, &t, 0, 4.0).is_err());
        assert!(precision_recall_at_k(&["nope"], &t, 1, 4.0).is_err());
    }

    #[test]
    fn csv_roundtrip_and_validation() {
        let (t, _) = truth(&[1.0, 4.25, 5.0]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(GroundTruth::from_csv(buf.as_slice()).unwrap(), t);
        assert!(GroundTruth::from_csv("post_id,mean_rating\na,6\n".as_bytes()).is_err());
        assert!(GroundTruth::from_csv("post_id,mean_rating\na,2\na,3\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn at_k_properties(flags in prop::collection::vec(any::<bool>(), 1..60)) {
            let mut last_recall = 0.0;
            for k in 1..=flags.len() + 3 {
                let m = at_k_flags(&flags, k);
                prop_assert!((0.0..=1.0).contains(&m.precision));
                prop_assert!((0.0..=1.0).contains(&m.recall));
                prop_assert!(m.recall >= last_recall);
                last_recall = m.recall;
            }
            let rel = flags.iter().filter(|f| **f).count();
            let full = at_k_flags(&flags, flags.len());
            prop_assert_eq!(full.precision, rel as f64 / flags.len() as f64);
        }
    }
}
