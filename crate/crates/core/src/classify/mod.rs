//! Ethical-concern detection and categorization behind pluggable clients.

mod agreement;
mod cache;
mod category;
mod client;
mod prompt;
mod stub;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::WindowedText;

pub use agreement::{cohens_kappa, evaluate_category_labels, AgreementReport};
pub use cache::{read_labels, write_labels, LabelRecord};
pub use category::{EthicalConcernCategory, Taxonomy};
pub use client::{CategorizerClient, ClassifyError, ClientError, DetectorClient, RawDetection, RetryPolicy};
pub use prompt::{assemble_category_prompt, PromptText, DEFAULT_TASK_PROMPT, DEFINITIONS_HEADER, POST_HEADER};
pub use stub::{StubCategorizer, StubDetector, STUB_CATEGORIZER_ID, STUB_DETECTOR_ID};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcernDetection {
    pub post_id: String,
    pub is_concern: bool,
    pub confidence: f64,
    pub source: String,
}

fn attribute(post_id: &str) -> impl Fn(ClientError) -> ClassifyError + '_ {
    move |source| ClassifyError {
        post_id: post_id.to_string(),
        source,
    }
}

/// Asks `client` whether the windowed post voices an ethical concern.
pub fn detect_concern(windowed: &WindowedText, client: &dyn DetectorClient) -> Result<ConcernDetection, ClassifyError> {
    let raw = client.detect(&windowed.text).map_err(attribute(&windowed.post_id))?;
    if !raw.confidence.is_finite() || !(0.0..=1.0).contains(&raw.confidence) {
        return Err(attribute(&windowed.post_id)(ClientError::Protocol(format!(
            "confidence {} outside [0,1]",
            raw.confidence
        ))));
    }
    Ok(ConcernDetection {
        post_id: windowed.post_id.clone(),
        is_concern: raw.is_concern,
        confidence: raw.confidence,
        source: client.id().to_string(),
    })
}

/// Sends the assembled prompt and parses exactly one category from the reply.
pub fn categorize(prompt: &PromptText, post_id: &str, client: &dyn CategorizerClient) -> Result<EthicalConcernCategory, ClassifyError> {
    let reply = client.categorize(prompt).map_err(attribute(post_id))?;
    let cleaned = reply.trim().trim_matches(|c| c == '"' || c == '\'' || c == '`').trim_end_matches('.');
    cleaned
        .parse::<EthicalConcernCategory>()
        .map_err(|_| attribute(post_id)(ClientError::Protocol(format!("reply {reply:?} is not a single category label"))))
}

/// Inputs shared by every post in a classification batch.
pub struct Classifier<'a> {
    pub detector: &'a dyn DetectorClient,
    pub categorizer: &'a dyn CategorizerClient,
    pub taxonomy: &'a Taxonomy,
    pub task_prompt: &'a str,
    pub retry: RetryPolicy,
}

#[derive(Debug, Clone, Default)]
pub struct BatchOutcome {
    pub labels: BTreeMap<String, LabelRecord>,
    pub failures: Vec<ClassifyError>,
}

impl Classifier<'_> {
    fn parallelism(&self) -> Option<usize> {
        match (self.detector.max_parallelism(), self.categorizer.max_parallelism()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    fn classify_one(&self, w: &WindowedText, cached: Option<&LabelRecord>) -> Result<LabelRecord, ClassifyError> {
        if let Some(r) = cached {
            if !r.is_concern || r.category.is_some() {
                return Ok(r.clone());
            }
        }
        let detection = match cached {
            Some(r) => ConcernDetection {
                post_id: r.post_id.clone(),
                is_concern: r.is_concern,
                confidence: r.confidence.unwrap_or(1.0),
                source: r.source.clone(),
            },
            None => self.retry_call(&w.post_id, || detect_concern(w, self.detector))?,
        };
        let category = if detection.is_concern {
            let prompt = assemble_category_prompt(w, self.taxonomy, self.task_prompt);
            Some(self.retry_call(&w.post_id, || categorize(&prompt, &w.post_id, self.categorizer))?)
        } else {
            None
        };
        Ok(LabelRecord {
            post_id: w.post_id.clone(),
            is_concern: detection.is_concern,
            confidence: Some(detection.confidence),
            category,
            source: format!("{}+{}", detection.source, self.categorizer.id()),
        })
    }

    fn retry_call<T>(&self, post_id: &str, mut f: impl FnMut() -> Result<T, ClassifyError>) -> Result<T, ClassifyError> {
        self.retry.run(|| f().map_err(|e| e.source)).map_err(attribute(post_id))
    }

    /// Classifies every window, reusing `cached` verdicts. Posts whose client
    /// calls fail after retries are reported in `failures`; the rest of the
    /// batch continues.
    pub fn run(&self, windows: &[WindowedText], cached: &BTreeMap<String, LabelRecord>) -> BatchOutcome {
        let work = |w: &WindowedText| self.classify_one(w, cached.get(&w.post_id));
        let results: Vec<Result<LabelRecord, ClassifyError>> = match self.parallelism() {
            Some(1) => windows.iter().map(work).collect(),
            Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                Ok(pool) => pool.install(|| windows.par_iter().map(work).collect()),
                Err(_) => windows.iter().map(work).collect(),
            },
            None => windows.par_iter().map(work).collect(),
        };
        let mut out = BatchOutcome::default();
        for r in results {
            match r {
                Ok(rec) => {
                    out.labels.insert(rec.post_id.clone(), rec);
                }
                Err(e) => {
                    log::warn!("classification failed: {e}");
                    out.failures.push(e);
                }
            }
        }
        out
    }
}
