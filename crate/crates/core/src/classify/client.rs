use std::thread;
use std::time::Duration;

use thiserror::Error;

use super::PromptText;

/// Failure reported by a detector or categorizer backend.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClientError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl ClientError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ClientError::Transport(_) | ClientError::Timeout)
    }
}

/// A client failure attributed to the post being classified.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("post {post_id}: {source}")]
pub struct ClassifyError {
    pub post_id: String,
    #[source]
    pub source: ClientError,
}

impl ClassifyError {
    pub fn is_retryable(&self) -> bool {
        self.source.is_retryable()
    }
}

/// Raw verdict as returned by a detector backend, before range checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawDetection {
    pub is_concern: bool,
    pub confidence: f64,
}

/// Binary ethical-concern detector.
///
/// Implementations are called from several threads unless
/// [`max_parallelism`](Self::max_parallelism) says otherwise.
pub trait DetectorClient: Send + Sync {
    fn id(&self) -> &str;

    fn detect(&self, text: &str) -> Result<RawDetection, ClientError>;

    fn max_parallelism(&self) -> Option<usize> {
        None
    }
}

/// Single-label categorizer: prompt in, one category name out.
pub trait CategorizerClient: Send + Sync {
    fn id(&self) -> &str;

    fn categorize(&self, prompt: &PromptText) -> Result<String, ClientError>;

    fn max_parallelism(&self) -> Option<usize> {
        None
    }
}

/// Retry schedule for retryable client failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    /// Delay before the second attempt; doubles for every further attempt.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(attempts: u32) -> Self {
        RetryPolicy {
            attempts,
            base_delay: Duration::ZERO,
        }
    }

    /// Runs `call` until it succeeds, fails with a non-retryable error, or
    /// the attempt budget is spent.
    pub fn run<T>(&self, mut call: impl FnMut() -> Result<T, ClientError>) -> Result<T, ClientError> {
        let attempts = self.attempts.max(1);
        let mut delay = self.base_delay;
        let mut attempt = 1;
        loop {
            match call() {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && attempt < attempts => {
                    log::debug!("attempt {attempt}/{attempts} failed: {e}; retrying");
                    if !delay.is_zero() {
                        thread::sleep(delay);
                    }
                    delay *= 2;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}
