//! Per-post priority scores, weight tuning and ranking.

mod entropy;
mod features;
mod grid;
mod metrics;
mod rank;

pub use entropy::{
    entropy_term, fit_theme_distribution, surprisal_term, theme_term, total_entropy, EntropyMode, ThemeDistribution,
    ThemeHistogram, DEFAULT_BIN_COUNT, PHI_FLOOR,
};
pub use features::{
    build_features, popularity, priority, priority_components, recency, weighted_sum, FeatureNorms, FeatureVector,
    PostSignals, PriorityComponents, PriorityWeights, RawFeatures, FEATURE_NAMES, SECONDS_PER_DAY,
};
pub use grid::{
    fold_assignment, grid_search, search_problem, CvConfig, CvProblem, FoldSelection, GridResult, GridSpec, DEFAULT_FOLDS,
    DEFAULT_SEED, GRID_VALUES,
};
pub use metrics::{precision_recall_at_k, AtK, EvalMetrics, GroundTruth, DEFAULT_K, DEFAULT_RELEVANCE_THRESHOLD};
pub use rank::{rank_and_aggregate, write_category_csv, write_ranking_csv, CategoryPriority, RankedPost, Ranking};
