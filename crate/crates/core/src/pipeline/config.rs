use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::cluster::{Linkage, DEFAULT_GAP_FACTOR};
use crate::error::{Error, Result};
use crate::ingest::DEFAULT_WINDOW_RADIUS;
use crate::priority::{EntropyMode, DEFAULT_BIN_COUNT, DEFAULT_FOLDS, DEFAULT_K, DEFAULT_RELEVANCE_THRESHOLD, GRID_VALUES};
use crate::sentiment::IdentityTerm;
use crate::timeline::{OrderCriterion, DEFAULT_EVENT_THRESHOLD, DEFAULT_FOURIER_ORDER, DEFAULT_MAX_ORDER};

/// Full pipeline configuration, normally read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub input: InputConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub ingest: IngestConfig,
    #[serde(default)]
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub sample: Option<SampleConfig>,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub themes: ThemesConfig,
    #[serde(default)]
    pub sentiment: SentimentConfig,
    #[serde(default)]
    pub priority: PriorityConfig,
    #[serde(default)]
    pub timeline: TimelineConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// JSONL posts.
    pub posts: PathBuf,
    /// Community membership CSV.
    pub memberships: Option<PathBuf>,
    /// World events CSV.
    pub events: Option<PathBuf>,
    /// Survey ground truth CSV.
    pub truth: Option<PathBuf>,
}

/// Overrides for the bundled data files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub apps: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub topics: Option<PathBuf>,
    pub themes: Option<PathBuf>,
    pub holidays: Option<PathBuf>,
    pub task_prompt: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestConfig {
    /// Empty means the catalog's default allowlist.
    pub apps: Vec<String>,
    pub min_date: NaiveDate,
    pub window_radius: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            apps: Vec::new(),
            min_date: NaiveDate::from_ymd_opt(2018, 1, 1).expect("valid date"),
            window_radius: DEFAULT_WINDOW_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub linkage: Linkage,
    pub gap_factor: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            linkage: Linkage::Average,
            gap_factor: DEFAULT_GAP_FACTOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub per_stratum: usize,
    /// Cluster names to sample; empty means all clusters.
    #[serde(default)]
    pub communities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub retries: u32,
    pub retry_delay_ms: u64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            retries: 3,
            retry_delay_ms: 500,
        }
    }
}

impl ClassifyConfig {
    pub fn retry_policy(&self) -> crate::classify::RetryPolicy {
        crate::classify::RetryPolicy {
            attempts: self.retries,
            base_delay: std::time::Duration::from_millis(self.retry_delay_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThemesConfig {
    pub stem: bool,
    pub bins: usize,
    pub entropy: EntropyMode,
}

impl Default for ThemesConfig {
    fn default() -> Self {
        ThemesConfig {
            stem: false,
            bins: DEFAULT_BIN_COUNT,
            entropy: EntropyMode::Entropy,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SentimentConfig {
    pub identity: IdentityTerm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorityConfig {
    /// Weights TOML; all ones when absent and not tuning.
    pub weights: Option<PathBuf>,
    pub tune: bool,
    pub k: usize,
    pub folds: usize,
    pub relevance_threshold: f64,
    pub grid_values: Vec<f64>,
}

impl Default for PriorityConfig {
    fn default() -> Self {
        PriorityConfig {
            weights: None,
            tune: false,
            k: DEFAULT_K,
            folds: DEFAULT_FOLDS,
            relevance_threshold: DEFAULT_RELEVANCE_THRESHOLD,
            grid_values: GRID_VALUES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimelineConfig {
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub fourier_order: usize,
    pub max_order: usize,
    pub criterion: OrderCriterion,
    pub event_threshold: i64,
}

impl Default for TimelineConfig {
    fn default() -> Self {
        TimelineConfig {
            start: None,
            end: None,
            fourier_order: DEFAULT_FOURIER_ORDER,
            max_order: DEFAULT_MAX_ORDER,
            criterion: OrderCriterion::default(),
            event_threshold: DEFAULT_EVENT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Adds wall-clock stage timings to the manifest, which makes it differ
    /// between runs.
    pub record_timings: bool,
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::parse("pipeline config", e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.input.posts);
        for p in [
            &mut self.input.memberships,
            &mut self.input.events,
            &mut self.input.truth,
            &mut self.data.apps,
            &mut self.data.taxonomy,
            &mut self.data.topics,
            &mut self.data.themes,
            &mut self.data.holidays,
            &mut self.data.task_prompt,
            &mut self.priority.weights,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Checks settings that would otherwise fail late in a run.
    pub fn validate(&self) -> Result<()> {
        if self.priority.tune && self.input.truth.is_none() {
            return Err(Error::Config("priority.tune needs input.truth".into()));
        }
        if self.priority.tune && self.priority.weights.is_some() {
            return Err(Error::Config("priority.weights and priority.tune are mutually exclusive".into()));
        }
        if self.priority.k == 0 || self.priority.folds < 2 {
            return Err(Error::Config("priority.k must be >= 1 and priority.folds >= 2".into()));
        }
        if self.priority.grid_values.is_empty() || self.priority.grid_values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("priority.grid_values must be non-empty and positive".into()));
        }
        if self.themes.bins == 0 {
            return Err(Error::Config("themes.bins must be at least 1".into()));
        }
        if self.classify.retries == 0 {
            return Err(Error::Config("classify.retries must be at least 1".into()));
        }
        if !(self.cluster.gap_factor > 1.0) {
            return Err(Error::Config("cluster.gap_factor must exceed 1".into()));
        }
        if let (Some(a), Some(b)) = (self.timeline.start, self.timeline.end) {
            if b < a {
                return Err(Error::Config("timeline.end precedes timeline.start".into()));
            }
        }
        if self.sample.is_some() && self.input.memberships.is_none() {
            return Err(Error::Config("sampling by community needs input.memberships".into()));
        }
        if let Some(s) = &self.sample {
            if s.per_stratum == 0 {
                return Err(Error::Config("sample.per_stratum must be at least 1".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = PipelineConfig::from_toml_str("[input]\nposts = \"p.jsonl\"\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.priority.k, 20);
        assert_eq!(c.ingest.window_radius, 300);
        c.validate().unwrap();
    }

    #[test]
    fn tune_without_truth_is_rejected() {
        let c = PipelineConfig::from_toml_str("[input]\nposts = \"p.jsonl\"\n[priority]\ntune = true\n").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(PipelineConfig::from_toml_str("[input]\nposts = \"p\"\nextra = 1\n").is_err());
    }

    #[test]
    fn relative_paths_resolve() {
        let mut c = PipelineConfig::from_toml_str("[input]\nposts = \"p.jsonl\"\ntruth = \"/abs/t.csv\"\n").unwrap();
        c.resolve_paths(Path::new("/base"));
        assert_eq!(c.input.posts, PathBuf::from("/base/p.jsonl"));
        assert_eq!(c.input.truth, Some(PathBuf::from("/abs/t.csv")));
    }
}
