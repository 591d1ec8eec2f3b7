use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::features::{weighted_sum, FeatureVector, PriorityWeights};
use super::metrics::{at_k_flags, AtK, EvalMetrics, GroundTruth, DEFAULT_K, DEFAULT_RELEVANCE_THRESHOLD};

pub const GRID_VALUES: [f64; 4] = [1.0, 2.0, 5.0, 10.0];
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_SEED: u64 = 7;

/// Candidate values for each of the ten weights, kept sorted and unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    values: [Vec<f64>; 10],
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::full()
    }
}

impl GridSpec {
    pub fn new(values: [Vec<f64>; 10]) -> Result<Self> {
        let mut values = values;
        for (k, v) in values.iter_mut().enumerate() {
            if v.is_empty() {
                return Err(Error::Config(format!("no grid values for {}", PriorityWeights::KEYS[k])));
            }
            if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(Error::Config(format!(
                    "grid value {bad} for {} is not positive",
                    PriorityWeights::KEYS[k]
                )));
            }
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        Ok(GridSpec { values })
    }

    /// Every weight ranges over {1, 2, 5, 10}.
    pub fn full() -> Self {
        GridSpec {
            values: std::array::from_fn(|_| GRID_VALUES.to_vec()),
        }
    }

    /// A single candidate.
    pub fn fixed(weights: &PriorityWeights) -> Self {
        GridSpec {
            values: weights.0.map(|w| vec![w]),
        }
    }

    /// Replaces the values of weight `index` (0 for `w_a`).
    pub fn with_values(mut self, index: usize, values: Vec<f64>) -> Result<Self> {
        if index >= 10 {
            return Err(Error::Config(format!("weight index {index} out of range")));
        }
        self.values[index] = values;
        Self::new(self.values)
    }

    pub fn values(&self, index: usize) -> &[f64] {
        &self.values[index]
    }

    pub fn cardinality(&self) -> u64 {
        self.values.iter().map(|v| v.len() as u64).product()
    }

    /// Candidate at a position in lexicographic order (`w_a` most significant).
    pub fn candidate(&self, mut index: u64) -> PriorityWeights {
        let mut w = [0.0; 10];
        for l in (0..10).rev() {
            let d = self.values[l].len() as u64;
            w[l] = self.values[l][(index % d) as usize];
            index /= d;
        }
        PriorityWeights(w)
    }

    pub fn candidates(&self) -> impl Iterator<Item = PriorityWeights> + '_ {
        (0..self.cardinality()).map(|i| self.candidate(i))
    }

    pub fn contains(&self, weights: &PriorityWeights) -> bool {
        self.values.iter().zip(weights.0.iter()).all(|(v, w)| v.contains(w))
    }
}

/// Cross-validation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub folds: usize,
    pub seed: u64,
    pub relevance_threshold: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: DEFAULT_K,
            folds: DEFAULT_FOLDS,
            seed: DEFAULT_SEED,
            relevance_threshold: DEFAULT_RELEVANCE_THRESHOLD,
        }
    }
}

/// What one fold chose and how it did on its held-out posts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSelection {
    pub fold: usize,
    pub weights: PriorityWeights,
    pub train_precision: f64,
    pub test: AtK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: PriorityWeights,
    pub metrics: EvalMetrics,
    pub folds: Vec<FoldSelection>,
    pub candidates: u64,
}

/// Posts with ground truth, laid out for repeated ranking.
#[derive(Debug, Clone)]
pub struct CvProblem {
    ids: Vec<String>,
    rows: Vec<[f64; 10]>,
    columns: Vec<Vec<f64>>,
    relevant: Vec<bool>,
    /// Mean rating in millionths, summed exactly to break training ties.
    gain: Vec<i64>,
    /// Position in (created_utc, post_id) order; smaller ranks first on ties.
    tie: Vec<u32>,
    fold_of: Vec<usize>,
    fold_sizes: Vec<usize>,
    cfg: CvConfig,
}

impl CvProblem {
    pub fn new(features: &[FeatureVector], truth: &GroundTruth, cfg: CvConfig) -> Result<Self> {
        if cfg.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if cfg.folds < 2 {
            return Err(Error::Config("cross validation needs at least 2 folds".into()));
        }
        if truth.len() < cfg.folds {
            return Err(Error::InvalidInput(format!(
                "ground truth has {} posts, fewer than {} folds",
                truth.len(),
                cfg.folds
            )));
        }
        let by_id: BTreeMap<&str, &FeatureVector> = features.iter().map(|f| (f.post_id.as_str(), f)).collect();
        let mut picked = Vec::with_capacity(truth.len());
        for (id, rating) in truth.iter() {
            let f = by_id
                .get(id)
                .ok_or_else(|| Error::InvalidInput(format!("ground truth post {id} has no features")))?;
            picked.push((*f, rating));
        }
        let n = picked.len();
        let mut by_age: Vec<usize> = (0..n).collect();
        by_age.sort_by(|&a, &b| {
            picked[a]
                .0
                .created_utc
                .cmp(&picked[b].0.created_utc)
                .then_with(|| picked[a].0.post_id.cmp(&picked[b].0.post_id))
        });
        let mut tie = vec![0u32; n];
        for (r, &i) in by_age.iter().enumerate() {
            tie[i] = r as u32;
        }
        let fold_of = fold_assignment(n, cfg.folds, cfg.seed);
        let mut fold_sizes = vec![0; cfg.folds];
        for &f in &fold_of {
            fold_sizes[f] += 1;
        }
        let rows: Vec<[f64; 10]> = picked.iter().map(|(f, _)| f.normalized).collect();
        Ok(CvProblem {
            ids: picked.iter().map(|(f, _)| f.post_id.clone()).collect(),
            columns: (0..10).map(|l| rows.iter().map(|r| r[l]).collect()).collect(),
            rows,
            relevant: picked.iter().map(|(_, r)| *r >= cfg.relevance_threshold).collect(),
            gain: picked.iter().map(|(_, r)| (r * 1e6).round() as i64).collect(),
            tie,
            fold_of,
            fold_sizes,
            cfg,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    fn order(&self, scores: &[f64], a: usize, b: usize) -> Ordering {
        scores[b].total_cmp(&scores[a]).then(self.tie[a].cmp(&self.tie[b]))
    }

    /// Indices of `members` in priority order under `weights`.
    pub fn rank(&self, weights: &PriorityWeights, members: impl Iterator<Item = usize>) -> Vec<usize> {
        let scores: Vec<f64> = self.rows.iter().map(|r| weighted_sum(r, weights)).collect();
        let mut idx: Vec<usize> = members.collect();
        idx.sort_by(|&a, &b| self.order(&scores, a, b));
        idx
    }

    fn k_train(&self, fold: usize) -> usize {
        self.cfg.k.min(self.len() - self.fold_sizes[fold])
    }

    pub fn train_at_k(&self, weights: &PriorityWeights, fold: usize) -> AtK {
        let ranked = self.rank(weights, (0..self.len()).filter(|&i| self.fold_of[i] != fold));
        at_k_flags(&ranked.iter().map(|&i| self.relevant[i]).collect::<Vec<_>>(), self.cfg.k)
    }

    pub fn test_at_k(&self, weights: &PriorityWeights, fold: usize) -> AtK {
        let ranked = self.rank(weights, (0..self.len()).filter(|&i| self.fold_of[i] == fold));
        at_k_flags(&ranked.iter().map(|&i| self.relevant[i]).collect::<Vec<_>>(), self.cfg.k)
    }

    /// Held-out metrics when every fold uses the same weights.
    pub fn evaluate(&self, weights: &PriorityWeights) -> EvalMetrics {
        EvalMetrics::from_folds(self.cfg.k, (0..self.cfg.folds).map(|f| self.test_at_k(weights, f)).collect())
    }

    /// Held-out metrics of a uniformly shuffled ranking, one shuffle per fold.
    pub fn evaluate_random(&self, seed: u64) -> EvalMetrics {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let per_fold = (0..self.cfg.folds)
            .map(|f| {
                let mut flags: Vec<bool> = (0..self.len())
                    .filter(|&i| self.fold_of[i] == f)
                    .map(|i| self.relevant[i])
                    .collect();
                flags.shuffle(&mut rng);
                at_k_flags(&flags, self.cfg.k)
            })
            .collect();
        EvalMetrics::from_folds(self.cfg.k, per_fold)
    }
}

/// Seeded fold labels: a shuffled position `p` lands in fold `p % folds`.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    for (p, &i) in perm.iter().enumerate() {
        fold_of[i] = p % folds;
    }
    fold_of
}

/// A fold's training score for one candidate: relevant hits in the top k,
/// then the summed rating of those k posts, then the candidate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TrainScore {
    hits: usize,
    gain: i64,
    index: u64,
}

impl TrainScore {
    const NONE: TrainScore = TrainScore {
        hits: 0,
        gain: i64::MIN,
        index: u64::MAX,
    };

    fn beats(&self, other: &TrainScore) -> bool {
        (self.hits, self.gain, std::cmp::Reverse(self.index)) > (other.hits, other.gain, std::cmp::Reverse(other.index))
    }
}

type FoldBest = Vec<TrainScore>;

fn merge_best(mut a: FoldBest, b: FoldBest) -> FoldBest {
    for (x, y) in a.iter_mut().zip(b) {
        if y.beats(x) {
            *x = y;
        }
    }
    a
}

struct Sweep<'a> {
    problem: &'a CvProblem,
    grid: &'a GridSpec,
    split: usize,
    inner: u64,
    top: usize,
    k_train: Vec<usize>,
}

impl Sweep<'_> {
    fn run_chunk(&self, chunk: u64) -> FoldBest {
        let p = self.problem;
        let n = p.len();
        let folds = p.cfg.folds;
        let dims: Vec<usize> = (0..10).map(|l| self.grid.values[l].len()).collect();
        let mut digit = [0usize; 10];
        let mut rest = chunk;
        for l in (0..self.split).rev() {
            digit[l] = (rest % dims[l] as u64) as usize;
            rest /= dims[l] as u64;
        }
        // partial[l] holds the score contribution of weights 0..l
        let mut partial = vec![vec![0.0f64; n]; 11];
        let refresh = |partial: &mut Vec<Vec<f64>>, digit: &[usize; 10], from: usize| {
            for l in from..10 {
                let w = self.grid.values[l][digit[l]];
                let (lo, hi) = partial.split_at_mut(l + 1);
                for ((dst, src), x) in hi[0].iter_mut().zip(&lo[l]).zip(&p.columns[l]) {
                    *dst = src + w * x;
                }
            }
        };
        refresh(&mut partial, &digit, 0);
        let mut best: FoldBest = vec![TrainScore::NONE; folds];
        let mut idx: Vec<usize> = (0..n).collect();
        let base = chunk * self.inner;
        for local in 0..self.inner {
            if local > 0 {
                let mut l = 9;
                loop {
                    digit[l] += 1;
                    if digit[l] < dims[l] {
                        break;
                    }
                    digit[l] = 0;
                    l -= 1;
                }
                refresh(&mut partial, &digit, l);
            }
            let scores = &partial[10];
            let cmp = |a: &usize, b: &usize| p.order(scores, *a, *b);
            if self.top < n {
                idx.select_nth_unstable_by(self.top - 1, cmp);
            }
            idx[..self.top].sort_unstable_by(cmp);
            for (f, slot) in best.iter_mut().enumerate() {
                let want = self.k_train[f];
                let (mut seen, mut hits, mut gain) = (0, 0, 0);
                for &i in &idx[..self.top] {
                    if p.fold_of[i] == f {
                        continue;
                    }
                    hits += p.relevant[i] as usize;
                    gain += p.gain[i];
                    seen += 1;
                    if seen == want {
                        break;
                    }
                }
                let score = TrainScore {
                    hits,
                    gain,
                    index: base + local,
                };
                if score.beats(slot) {
                    *slot = score;
                }
            }
        }
        best
    }
}

/// Exhaustive cross-validated search over `grid`. Each fold keeps the
/// candidate with the highest training precision@k; ties go to the higher
/// summed rating of the training top k, then to the first candidate in
/// lexicographic order. The returned weights are the ones chosen by the most folds, ties going to
/// the lexicographically smallest.
pub fn grid_search(features: &[FeatureVector], truth: &GroundTruth, grid: &GridSpec, cfg: CvConfig) -> Result<GridResult> {
    let problem = CvProblem::new(features, truth, cfg)?;
    search_problem(&problem, grid)
}

pub fn search_problem(problem: &CvProblem, grid: &GridSpec) -> Result<GridResult> {
    let cfg = problem.cfg;
    let n = problem.len();
    let max_test = *problem.fold_sizes.iter().max().expect("folds >= 2");
    let dims: Vec<u64> = grid.values.iter().map(|v| v.len() as u64).collect();
    let mut split = 0;
    let mut chunks = 1u64;
    while split < 10 && chunks < 256 {
        chunks *= dims[split];
        split += 1;
    }
    let sweep = Sweep {
        problem,
        grid,
        split,
        inner: dims[split..].iter().product(),
        top: (cfg.k + max_test).min(n),
        k_train: (0..cfg.folds).map(|f| problem.k_train(f)).collect(),
    };
    let per_chunk: Vec<FoldBest> = (0..chunks).into_par_iter().map(|c| sweep.run_chunk(c)).collect();
    let best = per_chunk
        .into_iter()
        .reduce(merge_best)
        .expect("at least one chunk");

    let mut votes: BTreeMap<u64, usize> = BTreeMap::new();
    let mut selections = Vec::with_capacity(cfg.folds);
    for (fold, &TrainScore { hits, index, .. }) in best.iter().enumerate() {
        *votes.entry(index).or_default() += 1;
        let weights = grid.candidate(index);
        selections.push(FoldSelection {
            fold,
            weights,
            train_precision: hits as f64 / sweep.k_train[fold] as f64,
            test: problem.test_at_k(&weights, fold),
        });
    }
    // index order, so the first maximum is the smallest tuple
    let winner = votes
        .iter()
        .fold((u64::MAX, 0), |acc, (&i, &c)| if c > acc.1 { (i, c) } else { acc })
        .0;
    Ok(GridResult {
        best: grid.candidate(winner),
        metrics: EvalMetrics::from_folds(cfg.k, selections.iter().map(|s| s.test).collect()),
        folds: selections,
        candidates: grid.cardinality(),
    })
}
