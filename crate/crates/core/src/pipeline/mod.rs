//! End-to-end pipeline with content-addressed stage caching.

mod cache;
mod config;
mod manifest;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{
    read_labels, write_labels, CategorizerClient, Classifier, DetectorClient, EthicalConcernCategory, LabelRecord,
    Taxonomy, DEFAULT_TASK_PROMPT,
};
use crate::cluster::{agglomerate, cut_at_gap, name_clusters, read_memberships, CommunityCluster};
use crate::error::{Error, Result};
use crate::ingest::{
    filter_corpus, parse_posts, stratified_sample, window_text, AppCatalog, AppDomain, Corpus, RawPost, SamplePlan,
    Shortfall, StratumKey, WindowedText,
};
use crate::lexicon::{score_themes, ThemeBindings, ThemeScores, TopicLexicon};
use crate::priority::{
    build_features, fit_theme_distribution, rank_and_aggregate, write_category_csv, write_ranking_csv, CvConfig, CvProblem,
    EvalMetrics, FeatureVector, GridResult, GridSpec, GroundTruth, PostSignals, PriorityWeights, FEATURE_NAMES,
};
use crate::report::{frequency_by_app, frequency_by_category, frequency_by_community, render_bar_svg};
use crate::sentiment::{toxicity, valence, ToxicityAttributes, ToxicityProvider, ValenceLexicon, ValenceScore};
use crate::timeline::{
    align_events, classify_outliers, fit_baseline, fit_seasonal, rank_events, read_events, render_timeline_svg,
    weekly_frequencies, write_timeline_csv, ChartOptions, HolidayCalendar,
};

pub use cache::{cache_key, sha256_hex, write_atomic, StageCache};
pub use config::{
    ClassifyConfig, ClusterConfig, DataConfig, IngestConfig, InputConfig, OutputConfig, PipelineConfig, PriorityConfig,
    SampleConfig, SentimentConfig, ThemesConfig, TimelineConfig,
};
pub use manifest::{RunManifest, StageRecord, StageStatus};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CACHE_DIR: &str = ".cache";
/// Number of seeded shuffles averaged for the random-ranking baseline.
pub const RANDOM_BASELINE_RUNS: u64 = 100;

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Cluster,
    Sample,
    Window,
    Classify,
    Themes,
    Sentiment,
    Features,
    Tune,
    Prioritize,
    Timeline,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Ingest,
        Stage::Cluster,
        Stage::Sample,
        Stage::Window,
        Stage::Classify,
        Stage::Themes,
        Stage::Sentiment,
        Stage::Features,
        Stage::Tune,
        Stage::Prioritize,
        Stage::Timeline,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Cluster => "cluster",
            Stage::Sample => "sample",
            Stage::Window => "window",
            Stage::Classify => "classify",
            Stage::Themes => "themes",
            Stage::Sentiment => "sentiment",
            Stage::Features => "features",
            Stage::Tune => "tune",
            Stage::Prioritize => "prioritize",
            Stage::Timeline => "timeline",
            Stage::Report => "report",
        }
    }
}

/// The external classifiers a run talks to.
#[derive(Clone, Copy)]
pub struct Clients<'a> {
    pub detector: &'a dyn DetectorClient,
    pub categorizer: &'a dyn CategorizerClient,
    pub toxicity: &'a dyn ToxicityProvider,
}

struct Inputs {
    posts: Vec<u8>,
    memberships: Option<Vec<u8>>,
    events: Option<Vec<u8>>,
    truth: Option<Vec<u8>>,
    weights: Option<String>,
    apps: String,
    taxonomy: String,
    topics: String,
    themes: String,
    holidays: String,
    task_prompt: String,
    hashes: BTreeMap<String, String>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

impl Inputs {
    fn load(cfg: &PipelineConfig) -> Result<Self> {
        let mut hashes = BTreeMap::new();
        let mut opt_bytes = |name: &str, p: &Option<PathBuf>| -> Result<Option<Vec<u8>>> {
            p.as_deref()
                .map(|p| {
                    let b = read_bytes(p)?;
                    hashes.insert(name.to_string(), sha256_hex(&b));
                    Ok(b)
                })
                .transpose()
        };
        let posts = opt_bytes("posts", &Some(cfg.input.posts.clone()))?.expect("always present");
        let memberships = opt_bytes("memberships", &cfg.input.memberships)?;
        let events = opt_bytes("events", &cfg.input.events)?;
        let truth = opt_bytes("truth", &cfg.input.truth)?;
        let weights = opt_bytes("weights", &cfg.priority.weights)?;
        let apps = opt_bytes("data.apps", &cfg.data.apps)?;
        let taxonomy = opt_bytes("data.taxonomy", &cfg.data.taxonomy)?;
        let topics = opt_bytes("data.topics", &cfg.data.topics)?;
        let themes = opt_bytes("data.themes", &cfg.data.themes)?;
        let holidays = opt_bytes("data.holidays", &cfg.data.holidays)?;
        let prompt = opt_bytes("data.task_prompt", &cfg.data.task_prompt)?;
        let text = |b: Option<Vec<u8>>, default: &str, what: &str| -> Result<String> {
            match b {
                Some(b) => String::from_utf8(b).map_err(|e| Error::parse(what, e.to_string())),
                None => Ok(default.to_string()),
            }
        };
        use crate::defaults as d;
        Ok(Inputs {
            posts,
            memberships,
            events,
            truth,
            weights: weights.map(|b| text(Some(b), "", "weights")).transpose()?,
            apps: text(apps, d::APPS_TOML, "apps")?,
            taxonomy: text(taxonomy, d::TAXONOMY_TOML, "taxonomy")?,
            topics: text(topics, d::TOPICS_TOML, "topics")?,
            themes: text(themes, d::THEMES_TOML, "themes")?,
            holidays: text(holidays, d::HOLIDAYS_TOML, "holidays")?,
            task_prompt: text(prompt, DEFAULT_TASK_PROMPT, "task prompt")?,
            hashes,
        })
    }
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec(v).expect("config serializes")
}

/// Applies `f` to every item, honoring a client's parallelism cap.
fn par_map<T: Sync, R: Send>(items: &[T], limit: Option<usize>, f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    match limit {
        Some(1) => items.iter().map(f).collect(),
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            Err(_) => items.iter().map(f).collect(),
        },
        None => items.par_iter().map(f).collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SentimentRow {
    post_id: String,
    toxicity: ToxicityAttributes,
    valence: ValenceScore,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SampleOutcome {
    posts: Vec<RawPost>,
    shortfalls: Vec<Shortfall>,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
    cache: StageCache,
    run_id: String,
    outputs: BTreeMap<String, String>,
    stages: Vec<StageRecord>,
}

enum Outcome<T> {
    Done(T, Option<String>),
    Skipped(String),
}

impl Run<'_> {
    fn stage<T>(&mut self, stage: Stage, f: impl FnOnce(&mut Self) -> Result<Outcome<T>>) -> Result<Option<T>> {
        let start = Instant::now();
        let result = f(self);
        let millis = self.cfg.output.record_timings.then(|| start.elapsed().as_millis() as u64);
        let (status, note, value, err) = match result {
            Ok(Outcome::Done(v, note)) => (StageStatus::Completed, note, Some(v), None),
            Ok(Outcome::Skipped(why)) => (StageStatus::Skipped, Some(why), None, None),
            Err(e) => (StageStatus::Failed, Some(e.to_string()), None, Some(e)),
        };
        self.stages.push(StageRecord {
            name: stage.name().to_string(),
            status,
            note,
            millis,
        });
        match err {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }

    fn skip(&mut self, stage: Stage, why: &str) {
        self.stages.push(StageRecord {
            name: stage.name().to_string(),
            status: StageStatus::Skipped,
            note: Some(why.to_string()),
            millis: None,
        });
    }

    /// Writes an output with a run-id header suited to its format.
    fn emit(&mut self, rel: &str, body: &[u8]) -> Result<()> {
        let header = if rel.ends_with(".svg") {
            format!("<!-- run_id={} -->\n", self.run_id)
        } else if rel.ends_with(".dot") {
            format!("// run_id={}\n", self.run_id)
        } else {
            format!("# run_id={}\n", self.run_id)
        };
        let mut bytes = header.into_bytes();
        bytes.extend_from_slice(body);
        write_atomic(&self.out.join(rel), &bytes)?;
        self.outputs.insert(rel.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    fn emit_with(&mut self, rel: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.emit(rel, &buf)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::parse("csv output", e.to_string())
}

/// Runs every stage. See [`run_pipeline_until`].
pub fn run_pipeline(cfg: &PipelineConfig, clients: &Clients<'_>, out: &Path) -> Result<RunManifest> {
    run_pipeline_until(cfg, clients, out, Stage::Report)
}

/// Runs stages in order through `last`, writing outputs under `out` and the
/// manifest last. On failure the manifest records how far the run got and
/// the error is returned.
pub fn run_pipeline_until(cfg: &PipelineConfig, clients: &Clients<'_>, out: &Path, last: Stage) -> Result<RunManifest> {
    cfg.validate()?;
    let inputs = Inputs::load(cfg)?;
    let config_hash = sha256_hex(&json(cfg));
    let version = env!("CARGO_PKG_VERSION");
    let run_id = cache_key(&[
        config_hash.as_bytes(),
        &json(&inputs.hashes),
        &cfg.seed.to_le_bytes(),
        version.as_bytes(),
    ])[..16]
        .to_string();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut run = Run {
        cfg,
        out,
        cache: StageCache::new(out.join(CACHE_DIR)),
        run_id: run_id.clone(),
        outputs: BTreeMap::new(),
        stages: Vec::new(),
    };
    let result = execute(&mut run, &inputs, clients, last);
    let manifest = RunManifest {
        run_id,
        tool_version: version.to_string(),
        seed: cfg.seed,
        config_hash,
        inputs: inputs.hashes.clone(),
        outputs: run.outputs,
        stages: run.stages,
        completed: result.is_ok(),
        error: result.as_ref().err().map(|e| e.to_string()),
    };
    manifest.write(&out.join(MANIFEST_FILE))?;
    result.map(|_| manifest)
}

fn execute(run: &mut Run<'_>, inputs: &Inputs, clients: &Clients<'_>, last: Stage) -> Result<()> {
    let cfg = run.cfg;
    let catalog = AppCatalog::from_toml_str(&inputs.apps)?;
    let allowlist = if cfg.ingest.apps.is_empty() {
        catalog.default_allowlist().to_vec()
    } else {
        catalog.resolve(&cfg.ingest.apps)?
    };
    let matcher = catalog.matcher(&allowlist)?;
    let taxonomy = Taxonomy::from_toml_str(&inputs.taxonomy)?;
    let lexicon = TopicLexicon::from_toml_str(&inputs.topics, cfg.themes.stem)?;
    let bindings = ThemeBindings::from_toml_str(&inputs.themes)?;
    bindings.validate(&lexicon)?;
    let holidays = HolidayCalendar::from_toml_str(&inputs.holidays)?;
    let preset_weights = inputs.weights.as_deref().map(PriorityWeights::from_toml_str).transpose()?;
    let truth = inputs
        .truth
        .as_deref()
        .map(GroundTruth::from_csv)
        .transpose()?;
    let events = inputs.events.as_deref().map(read_events).transpose()?;
    let h = |name: &str| inputs.hashes.get(name).cloned().unwrap_or_default().into_bytes();
    let reached = |s: Stage| s <= last;

    // ingest
    let k_ingest = cache_key(&[&h("posts"), inputs.apps.as_bytes(), &json(&allowlist), &json(&cfg.ingest)]);
    let corpus: Corpus = run
        .stage(Stage::Ingest, |r| {
            let (c, hit) = r.cache.get_or_compute("ingest", &k_ingest, || {
                let parsed = parse_posts(inputs.posts.as_slice())?;
                filter_corpus(&parsed, &catalog, &allowlist, cfg.ingest.min_date)
            })?;
            r.emit_with("ingest_errors.csv", |buf| {
                let mut w = csv::Writer::from_writer(buf);
                w.write_record(["line", "message"]).map_err(csv_err)?;
                for e in &c.errors {
                    w.write_record([e.line.to_string(), e.message.clone()]).map_err(csv_err)?;
                }
                w.flush().map_err(|e| Error::io("ingest_errors.csv", e))
            })?;
            if hit {
                log::info!("ingest: reused cached corpus");
            }
            let note = format!("{} posts kept, {} bad lines", c.posts.len(), c.errors.len());
            Ok(Outcome::Done(c, Some(note)))
        })?
        .expect("ingest always runs");
    if !reached(Stage::Cluster) {
        return Ok(());
    }

    // cluster
    let k_cluster = cache_key(&[&h("memberships"), &json(&cfg.cluster)]);
    let clusters: Option<Vec<CommunityCluster>> = run.stage(Stage::Cluster, |r| {
        let Some(bytes) = inputs.memberships.as_deref() else {
            return Ok(Outcome::Skipped("no membership file".into()));
        };
        let ((dot, named), _) = r.cache.get_or_compute("cluster", &k_cluster, || {
            let vectors = read_memberships(bytes)?;
            let d = agglomerate(&vectors, cfg.cluster.linkage)?;
            Ok((d.to_dot(), name_clusters(&cut_at_gap(&d, cfg.cluster.gap_factor))))
        })?;
        r.emit("dendrogram.dot", dot.as_bytes())?;
        r.emit_with("clusters.csv", |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["cluster", "subreddit"]).map_err(csv_err)?;
            for c in &named {
                for m in &c.members {
                    w.write_record([c.name.as_str(), m.as_str()]).map_err(csv_err)?;
                }
            }
            w.flush().map_err(|e| Error::io("clusters.csv", e))
        })?;
        let note = format!("{} clusters", named.len());
        Ok(Outcome::Done(named, Some(note)))
    })?;
    let cluster_of: BTreeMap<String, String> = clusters
        .iter()
        .flatten()
        .flat_map(|c| c.members.iter().map(move |m| (m.clone(), c.name.clone())))
        .collect();
    if !reached(Stage::Sample) {
        return Ok(());
    }

    // sample
    let k_sample = cache_key(&[k_ingest.as_bytes(), k_cluster.as_bytes(), &json(&cfg.sample), &cfg.seed.to_le_bytes()]);
    let sampled = run.stage(Stage::Sample, |r| {
        let Some(sc) = &cfg.sample else {
            return Ok(Outcome::Skipped("no sampling configured".into()));
        };
        let (s, _) = r.cache.get_or_compute("sample", &k_sample, || {
            let mut strata = HashMap::new();
            for p in &corpus.posts {
                let (Some(community), Some(m)) = (cluster_of.get(&p.subreddit), matcher.first_mention(&p.full_text())) else {
                    continue;
                };
                strata.insert(
                    p.id.clone(),
                    StratumKey {
                        community: community.clone(),
                        domain: m.domain,
                    },
                );
            }
            let mut communities = if sc.communities.is_empty() {
                clusters.iter().flatten().map(|c| c.name.clone()).collect()
            } else {
                sc.communities.clone()
            };
            communities.sort();
            communities.dedup();
            let plan = SamplePlan {
                communities,
                domains: AppDomain::ALL.to_vec(),
                per_stratum: sc.per_stratum,
            };
            let s = stratified_sample(&corpus, &strata, &plan, cfg.seed)?;
            Ok(SampleOutcome {
                posts: s.posts,
                shortfalls: s.shortfalls,
            })
        })?;
        r.emit_with("sample_shortfalls.csv", |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["community", "missing"]).map_err(csv_err)?;
            for f in &s.shortfalls {
                w.write_record([f.community.clone(), f.missing.to_string()]).map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::io("sample_shortfalls.csv", e))
        })?;
        let note = format!("{} posts sampled", s.posts.len());
        Ok(Outcome::Done(s, Some(note)))
    })?;
    let (posts, k_corpus): (Vec<RawPost>, String) = match sampled {
        Some(s) => (s.posts, k_sample),
        None => (corpus.posts, k_ingest),
    };
    if !reached(Stage::Window) {
        return Ok(());
    }

    // window
    let windows: Vec<WindowedText> = run
        .stage(Stage::Window, |_| {
            let mut out = Vec::with_capacity(posts.len());
            for p in &posts {
                let Some(m) = matcher.first_mention(&p.full_text()) else { continue };
                match window_text(p, &m.matched, cfg.ingest.window_radius) {
                    Ok(w) => out.push(w),
                    Err(e) => log::warn!("{e}; post skipped"),
                }
            }
            let note = format!("{} windows", out.len());
            Ok(Outcome::Done(out, Some(note)))
        })?
        .expect("window always runs");
    if !reached(Stage::Classify) {
        return Ok(());
    }

    // classify
    let k_classify = cache_key(&[
        k_corpus.as_bytes(),
        &cfg.ingest.window_radius.to_le_bytes(),
        clients.detector.id().as_bytes(),
        clients.categorizer.id().as_bytes(),
        inputs.taxonomy.as_bytes(),
        inputs.task_prompt.as_bytes(),
    ]);
    let labels: BTreeMap<String, LabelRecord> = run
        .stage(Stage::Classify, |r| {
            let path = r.cache.path("classify", &k_classify, "jsonl");
            let cached = match std::fs::File::open(&path) {
                Ok(f) => read_labels(std::io::BufReader::new(f))?,
                Err(_) => BTreeMap::new(),
            };
            let classifier = Classifier {
                detector: clients.detector,
                categorizer: clients.categorizer,
                taxonomy: &taxonomy,
                task_prompt: &inputs.task_prompt,
                retry: cfg.classify.retry_policy(),
            };
            let outcome = classifier.run(&windows, &cached);
            let mut buf = Vec::new();
            write_labels(&mut buf, &outcome.labels)?;
            write_atomic(&path, &buf)?;
            if let Some(first) = outcome.failures.first() {
                return Err(Error::Config(format!(
                    "{} posts failed classification (first: {first}); rerun to resume",
                    outcome.failures.len()
                )));
            }
            r.emit_with("labels.csv", |buf| {
                let mut w = csv::Writer::from_writer(buf);
                w.write_record(["post_id", "is_concern", "confidence", "category"]).map_err(csv_err)?;
                for l in outcome.labels.values() {
                    w.write_record([
                        l.post_id.clone(),
                        l.is_concern.to_string(),
                        l.confidence.map(|c| c.to_string()).unwrap_or_default(),
                        l.category.map(|c| c.name().to_string()).unwrap_or_default(),
                    ])
                    .map_err(csv_err)?;
                }
                w.flush().map_err(|e| Error::io("labels.csv", e))
            })?;
            let concerns = outcome.labels.values().filter(|l| l.is_concern).count();
            let note = format!("{concerns} of {} posts flagged", outcome.labels.len());
            Ok(Outcome::Done(outcome.labels, Some(note)))
        })?
        .expect("classify always runs");
    let categories: BTreeMap<String, EthicalConcernCategory> = labels
        .values()
        .filter_map(|l| l.category.filter(|c| l.is_concern && c.is_concern()).map(|c| (l.post_id.clone(), c)))
        .collect();
    let concern_posts: Vec<&RawPost> = posts.iter().filter(|p| categories.contains_key(&p.id)).collect();
    if !reached(Stage::Themes) {
        return Ok(());
    }

    // themes
    let k_themes = cache_key(&[
        k_classify.as_bytes(),
        inputs.topics.as_bytes(),
        inputs.themes.as_bytes(),
        &json(&cfg.themes.stem),
    ]);
    let themes: Vec<ThemeScores> = run
        .stage(Stage::Themes, |r| {
            let (t, _) = r.cache.get_or_compute("themes", &k_themes, || {
                concern_posts
                    .par_iter()
                    .map(|p| score_themes(&p.id, &p.full_text(), &lexicon, &bindings))
                    .collect::<Result<Vec<_>>>()
            })?;
            r.emit_with("themes.csv", |buf| {
                let mut w = csv::Writer::from_writer(buf);
                w.write_record(["post_id", "harm", "negativity", "children"]).map_err(csv_err)?;
                for t in &t {
                    w.write_record([t.post_id.clone(), t.harm.to_string(), t.negativity.to_string(), t.children.to_string()])
                        .map_err(csv_err)?;
                }
                w.flush().map_err(|e| Error::io("themes.csv", e))
            })?;
            Ok(Outcome::Done(t, None))
        })?
        .expect("themes always run");
    if !reached(Stage::Sentiment) {
        return Ok(());
    }

    // sentiment
    let k_sent = cache_key(&[k_classify.as_bytes(), clients.toxicity.id().as_bytes()]);
    let sentiment: Vec<SentimentRow> = run
        .stage(Stage::Sentiment, |r| {
            let (rows, _) = r.cache.get_or_compute("sentiment", &k_sent, || {
                let vlex: ValenceLexicon = crate::defaults::valence_lexicon()?;
                let retry = cfg.classify.retry_policy();
                par_map(&concern_posts, clients.toxicity.max_parallelism(), |p| {
                    let text = p.full_text();
                    let tox = retry.run(|| toxicity(&text, clients.toxicity)).map_err(|e| {
                        Error::Client(crate::classify::ClassifyError {
                            post_id: p.id.clone(),
                            source: e,
                        })
                    })?;
                    Ok(SentimentRow {
                        post_id: p.id.clone(),
                        toxicity: tox,
                        valence: valence(&text, &vlex),
                    })
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()
            })?;
            r.emit_with("sentiment.csv", |buf| {
                let mut w = csv::Writer::from_writer(buf);
                let mut header: Vec<&str> = vec!["post_id"];
                header.extend(ToxicityAttributes::NAMES);
                header.push("compound");
                w.write_record(&header).map_err(csv_err)?;
                for row in &rows {
                    let mut rec = vec![row.post_id.clone()];
                    rec.extend(row.toxicity.as_array().iter().map(|v| v.to_string()));
                    rec.push(row.valence.compound.to_string());
                    w.write_record(&rec).map_err(csv_err)?;
                }
                w.flush().map_err(|e| Error::io("sentiment.csv", e))
            })?;
            Ok(Outcome::Done(rows, None))
        })?
        .expect("sentiment always runs");
    if !reached(Stage::Features) {
        return Ok(());
    }

    // features
    let features: Option<Vec<FeatureVector>> = run.stage(Stage::Features, |r| {
        if concern_posts.is_empty() {
            return Ok(Outcome::Skipped("no categorized concern posts".into()));
        }
        let dist = fit_theme_distribution(&themes, cfg.themes.bins)?;
        let signals: Vec<PostSignals<'_>> = concern_posts
            .iter()
            .zip(&themes)
            .zip(&sentiment)
            .map(|((p, t), s)| PostSignals {
                post: p,
                themes: t,
                toxicity: s.toxicity,
                valence: s.valence,
            })
            .collect();
        let (fv, _) = build_features(&signals, &dist, cfg.themes.entropy, cfg.sentiment.identity)?;
        r.emit_with("features.csv", |buf| write_features_csv(buf, &fv))?;
        Ok(Outcome::Done(fv, None))
    })?;
    let Some(features) = features else {
        for s in Stage::ALL.into_iter().filter(|s| *s > Stage::Features && *s <= last) {
            if s == Stage::Timeline || s == Stage::Report {
                continue;
            }
            run.skip(s, "no features");
        }
        return tail(run, &posts, &labels, &categories, &matcher, clusters.as_deref(), &cluster_of, &holidays, events, last);
    };
    if !reached(Stage::Tune) {
        return Ok(());
    }

    // tune and evaluate
    let cv = CvConfig {
        k: cfg.priority.k,
        folds: cfg.priority.folds,
        seed: cfg.seed,
        relevance_threshold: cfg.priority.relevance_threshold,
    };
    let k_tune = cache_key(&[
        k_themes.as_bytes(),
        k_sent.as_bytes(),
        &json(&cfg.themes),
        &json(&cfg.sentiment),
        &json(&cfg.priority),
        &h("truth"),
        &cfg.seed.to_le_bytes(),
    ]);
    let weights: PriorityWeights = run
        .stage(Stage::Tune, |r| {
            let Some(truth) = &truth else {
                let w = preset_weights.unwrap_or_default();
                return Ok(Outcome::Done(w, Some("no ground truth; weights not evaluated".into())));
            };
            let problem = CvProblem::new(&features, truth, cv)?;
            let (weights, tuned) = if cfg.priority.tune {
                let grid = GridSpec::new(std::array::from_fn(|_| cfg.priority.grid_values.clone()))?;
                let (res, _) = r
                    .cache
                    .get_or_compute("tune", &k_tune, || crate::priority::search_problem(&problem, &grid))?;
                r.emit_with("tuning.csv", |buf| write_tuning_csv(buf, &res))?;
                (res.best, Some(res))
            } else {
                (preset_weights.unwrap_or_default(), None)
            };
            r.emit("weights.toml", weights.to_toml_string().as_bytes())?;
            let mut rows: Vec<(String, EvalMetrics)> = Vec::new();
            if let Some(res) = &tuned {
                rows.push(("tuned".into(), res.metrics.clone()));
            } else {
                rows.push(("configured".into(), problem.evaluate(&weights)));
            }
            rows.push(("uniform".into(), problem.evaluate(&PriorityWeights::default())));
            let random: Vec<EvalMetrics> = (0..RANDOM_BASELINE_RUNS)
                .map(|i| problem.evaluate_random(cfg.seed.wrapping_add(i)))
                .collect();
            let mean = |f: fn(&EvalMetrics) -> f64| random.iter().map(f).sum::<f64>() / random.len() as f64;
            let mut rnd = random[0].clone();
            rnd.precision_at_k = mean(|m| m.precision_at_k);
            rnd.recall_at_k = mean(|m| m.recall_at_k);
            rnd.per_fold.clear();
            rows.push(("random".into(), rnd));
            r.emit_with("evaluation.csv", |buf| {
                let mut w = csv::Writer::from_writer(buf);
                w.write_record(["system", "k", "precision_at_k", "recall_at_k", "degenerate_folds"])
                    .map_err(csv_err)?;
                for (name, m) in &rows {
                    w.write_record([
                        name.clone(),
                        m.k.to_string(),
                        format!("{:.3}", m.precision_at_k),
                        format!("{:.3}", m.recall_at_k),
                        m.degenerate_folds.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
                w.flush().map_err(|e| Error::io("evaluation.csv", e))
            })?;
            Ok(Outcome::Done(weights, None))
        })?
        .expect("tune always runs");
    if !reached(Stage::Prioritize) {
        return Ok(());
    }

    // prioritize
    run.stage(Stage::Prioritize, |r| {
        let raw: Vec<_> = features.iter().map(|f| f.raw).collect();
        let norms = crate::priority::FeatureNorms::fit(&raw)?;
        let ranking = rank_and_aggregate(&features, &weights, &norms, cfg.sentiment.identity, &categories)?;
        r.emit_with("ranking.csv", |buf| write_ranking_csv(buf, &ranking))?;
        r.emit_with("category_priority.csv", |buf| write_category_csv(buf, &ranking))?;
        let bars: Vec<(String, f64)> = ranking
            .categories
            .iter()
            .map(|c| (c.category.name().to_string(), c.mean_priority))
            .collect();
        r.emit("category_priority.svg", render_bar_svg("Mean priority by category", &bars).as_bytes())?;
        Ok(Outcome::Done((), None))
    })?;
    tail(run, &posts, &labels, &categories, &matcher, clusters.as_deref(), &cluster_of, &holidays, events, last)
}

#[allow(clippy::too_many_arguments)]
fn tail(
    run: &mut Run<'_>,
    posts: &[RawPost],
    labels: &BTreeMap<String, LabelRecord>,
    categories: &BTreeMap<String, EthicalConcernCategory>,
    matcher: &crate::ingest::AppMatcher,
    clusters: Option<&[CommunityCluster]>,
    cluster_of: &BTreeMap<String, String>,
    holidays: &HolidayCalendar,
    events: Option<Vec<crate::timeline::WorldEvent>>,
    last: Stage,
) -> Result<()> {
    let cfg = run.cfg;
    if last < Stage::Timeline {
        return Ok(());
    }
    run.stage(Stage::Timeline, |r| {
        let obs: Vec<(i64, bool)> = posts
            .iter()
            .filter_map(|p| labels.get(&p.id).map(|l| (p.created_utc, l.is_concern)))
            .collect();
        let dates = obs.iter().filter_map(|(ts, _)| chrono::DateTime::from_timestamp(*ts, 0).map(|d| d.date_naive()));
        let (lo, hi) = dates.fold((None, None), |(a, b): (Option<chrono::NaiveDate>, Option<chrono::NaiveDate>), d| {
            (Some(a.map_or(d, |a| a.min(d))), Some(b.map_or(d, |b| b.max(d))))
        });
        let (Some(start), Some(end)) = (cfg.timeline.start.or(lo), cfg.timeline.end.or(hi)) else {
            return Ok(Outcome::Skipped("no labeled posts".into()));
        };
        let series = weekly_frequencies(obs, start, end)?;
        let mut notes = Vec::new();
        let seasonal = match fit_seasonal(&series, holidays, cfg.timeline.fourier_order) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("seasonal fit: {e}");
                notes.push(format!("seasonal fit: {e}"));
                None
            }
        };
        let forecasts = seasonal.as_ref().map(|s| s.forecasts.clone()).unwrap_or_default();
        let flags = classify_outliers(&series, &forecasts)?;
        r.emit_with("timeline.csv", |buf| write_timeline_csv(buf, &series, &forecasts, &flags))?;
        match fit_baseline(&series, cfg.timeline.max_order, cfg.timeline.criterion) {
            Ok(b) => {
                let bflags = classify_outliers(&series, &b.forecasts)?;
                r.emit_with("baseline.csv", |buf| write_timeline_csv(buf, &series, &b.forecasts, &bflags))?;
                notes.push(format!("baseline order {}", b.model.order));
            }
            Err(e) => {
                log::warn!("baseline fit: {e}");
                notes.push(format!("baseline fit: {e}"));
            }
        }
        let mut annotations = Vec::new();
        if let Some(events) = &events {
            let selected = rank_events(events, cfg.timeline.event_threshold)?;
            annotations = align_events(&flags, &selected);
            r.emit_with("events.csv", |buf| {
                let mut w = csv::Writer::from_writer(buf);
                w.write_record(["event", "date", "total", "week_start", "alignment"]).map_err(csv_err)?;
                for (e, a) in selected.iter().zip(&annotations) {
                    w.write_record([
                        e.name.clone(),
                        e.date.to_string(),
                        e.total.to_string(),
                        a.week_start.map(|d| d.to_string()).unwrap_or_default(),
                        a.describe(),
                    ])
                    .map_err(csv_err)?;
                }
                w.flush().map_err(|e| Error::io("events.csv", e))
            })?;
        }
        let svg = render_timeline_svg(&series, &forecasts, &flags, &annotations, &ChartOptions::default());
        r.emit("timeline.svg", svg.as_bytes())?;
        Ok(Outcome::Done((), (!notes.is_empty()).then(|| notes.join("; "))))
    })?;
    if last < Stage::Report {
        return Ok(());
    }
    run.stage(Stage::Report, |r| {
        if !categories.is_empty() {
            let t = frequency_by_category(categories.values().copied())?;
            r.emit_with("category_frequency.csv", |buf| t.write_csv(buf))?;
        }
        let flags: BTreeMap<String, bool> = labels.iter().map(|(k, l)| (k.clone(), l.is_concern)).collect();
        let t = frequency_by_app(posts, &flags, matcher);
        r.emit_with("app_frequency.csv", |buf| t.write_csv(buf))?;
        if clusters.is_some() {
            let assigned: Vec<RawPost> = posts
                .iter()
                .filter(|p| cluster_of.contains_key(&p.subreddit))
                .cloned()
                .collect();
            if assigned.len() < posts.len() {
                log::warn!("{} posts come from subreddits outside every cluster", posts.len() - assigned.len());
            }
            let t = frequency_by_community(&assigned, cluster_of, categories)?;
            r.emit_with("community_frequency.csv", |buf| t.write_csv(buf))?;
        }
        Ok(Outcome::Done((), None))
    })?;
    Ok(())
}

/// `post_id,created_utc`, then raw and normalized values for each feature.
pub fn write_features_csv<W: std::io::Write>(writer: W, features: &[FeatureVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["post_id".to_string(), "created_utc".to_string()];
    header.extend(FEATURE_NAMES.iter().map(|n| format!("raw_{n}")));
    header.extend(FEATURE_NAMES.iter().map(|n| format!("nor_{n}")));
    w.write_record(&header).map_err(csv_err)?;
    for f in features {
        let r = &f.raw;
        let raw = [r.tox, r.sev, r.ins, r.pro, r.thr, r.ide, r.vad, r.ent_total, r.rec, r.pop];
        let mut rec = vec![f.post_id.clone(), f.created_utc.to_string()];
        rec.extend(raw.iter().chain(f.normalized.iter()).map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("features", e))
}

/// One row per fold with the selected weights and its scores.
pub fn write_tuning_csv<W: std::io::Write>(writer: W, result: &GridResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["fold".to_string()];
    header.extend(PriorityWeights::KEYS.iter().map(|k| k.to_string()));
    header.extend(["train_precision", "test_k", "test_precision", "test_recall"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for f in &result.folds {
        let mut rec = vec![f.fold.to_string()];
        rec.extend(f.weights.0.iter().map(|v| v.to_string()));
        rec.extend([
            f.train_precision.to_string(),
            f.test.k.to_string(),
            f.test.precision.to_string(),
            f.test.recall.to_string(),
        ]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("tuning", e))
}
