//! Min-max normalization.

use serde::{Deserialize, Serialize};

/// Observed range of one variable over the scored corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Range> {
        values.into_iter().fold(None, |acc, v| match acc {
            None => Some(Range { min: v, max: v }),
            Some(r) => Some(Range {
                min: r.min.min(v),
                max: r.max.max(v),
            }),
        })
    }

    /// `(v - min) / (max - min)`, or 0 when the range is degenerate.
    pub fn apply(&self, v: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            (v - self.min) / span
        } else {
            0.0
        }
    }
}

/// Maps every value into [0, 1] by the list's own min and max. A constant
/// list maps to all zeros.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    match Range::of(values.iter().copied()) {
        Some(r) => values.iter().map(|&v| r.apply(v)).collect(),
        None => Vec::new(),
    }
}
