//! `concern`: ingest forum posts, classify ethical concerns, rank them and
//! track their frequency over time.

mod http;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use concern_core::classify::{cohens_kappa, CategorizerClient, DetectorClient, EthicalConcernCategory};
use concern_core::cluster::{agglomerate, cut_at_gap, name_clusters, read_memberships, Linkage};
use concern_core::pipeline::{run_pipeline_until, write_atomic, Clients, PipelineConfig, RunManifest, Stage, StageStatus};
use concern_core::sentiment::ToxicityProvider;
use concern_core::timeline::{rank_events, read_events, score_summary};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "concern", version, about = "Mine, rank and track ethical concerns in forum posts")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Classifier backend.
    #[arg(long, global = true, value_enum, default_value_t = ClientKind::Stub)]
    client: ClientKind,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClientKind {
    Stub,
    Http,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and filter the post corpus.
    Ingest(IngestArgs),
    /// Cluster subreddits into intersectional communities.
    Cluster(ClusterArgs),
    /// Flag posts that raise an ethical concern.
    Detect(ClassifyArgs),
    /// Assign a concern category to flagged posts.
    Categorize(ClassifyArgs),
    /// Score harm, negativity and children themes.
    Themes(PipelineArgs),
    /// Score toxicity attributes and valence.
    Sentiment(PipelineArgs),
    /// Rank concern posts and aggregate by category.
    Prioritize(PrioritizeArgs),
    /// Grid-search the priority weights against survey ratings.
    Tune(TuneArgs),
    /// Evaluate fixed weights against survey ratings.
    Eval(EvalArgs),
    /// Fit the weekly seasonal model and flag outliers.
    Timeline(TimelineArgs),
    /// Select world events by rater agreement.
    Events(EventsArgs),
    /// Write the frequency tables.
    Report(PipelineArgs),
    /// Run every stage.
    Run(PipelineArgs),
}

#[derive(Args, Default)]
struct PipelineArgs {
    /// Posts file (JSONL); overrides the config.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    common: PipelineArgs,
    /// App catalog (TOML).
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Earliest post date kept.
    #[arg(long)]
    min_date: Option<NaiveDate>,
    /// Comma-separated app allowlist.
    #[arg(long, value_delimiter = ',')]
    apps: Vec<String>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Membership table (CSV).
    #[arg(long)]
    memberships: Option<PathBuf>,
    #[arg(long, value_parser = parse_enum::<Linkage>)]
    linkage: Option<Linkage>,
    /// Cut where a merge height exceeds the previous one by this factor.
    #[arg(long)]
    gap_factor: Option<f64>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: PipelineArgs,
    /// Reference labels (CSV `post_id,label`) to measure agreement against.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct PrioritizeArgs {
    #[command(flatten)]
    common: PipelineArgs,
    /// Weights file (TOML, keys w_a..w_j).
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    common: PipelineArgs,
    /// Survey ratings (CSV `post_id,mean_rating`).
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Comma-separated candidate values for every weight.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: PipelineArgs,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Args)]
struct TimelineArgs {
    #[command(flatten)]
    common: PipelineArgs,
    #[arg(long)]
    start: Option<NaiveDate>,
    #[arg(long)]
    end: Option<NaiveDate>,
    /// World events (CSV `name,date,score...`).
    #[arg(long)]
    events: Option<PathBuf>,
}

#[derive(Args)]
struct EventsArgs {
    /// World events (CSV `name,date,score...`).
    #[arg(long)]
    events: Option<PathBuf>,
    /// Keep events whose summed score exceeds this.
    #[arg(long)]
    threshold: Option<i64>,
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase())).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Config from `--config`, or a minimal one built around `--input`.
fn load_config(cli: &Cli, input: Option<&Path>) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => {
            let Some(posts) = input else {
                bail!("either --config or --input is required");
            };
            let toml = format!("[input]\nposts = {}\n", toml_path(posts));
            PipelineConfig::from_toml_str(&toml)?
        }
    };
    if let Some(p) = input {
        cfg.input.posts = p.to_path_buf();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn toml_path(p: &Path) -> String {
    serde_json::to_string(&p.to_string_lossy()).expect("string serializes")
}

fn optional_config(cli: &Cli) -> Result<Option<PipelineConfig>> {
    cli.config.as_deref().map(PipelineConfig::load).transpose().map_err(Into::into)
}

struct Backends {
    detector: Box<dyn DetectorClient>,
    categorizer: Box<dyn CategorizerClient>,
    toxicity: Box<dyn ToxicityProvider>,
}

impl Backends {
    fn new(kind: ClientKind) -> Result<Self> {
        Ok(match kind {
            ClientKind::Stub => Backends {
                detector: Box::new(concern_core::defaults::stub_detector()?),
                categorizer: Box::new(concern_core::defaults::stub_categorizer()?),
                toxicity: Box::new(concern_core::defaults::stub_toxicity()?),
            },
            ClientKind::Http => Backends {
                detector: Box::new(http::HttpDetector::from_env()?),
                categorizer: Box::new(http::HttpCategorizer::from_env()?),
                toxicity: Box::new(http::HttpToxicity::from_env()?),
            },
        })
    }

    fn clients(&self) -> Clients<'_> {
        Clients {
            detector: self.detector.as_ref(),
            categorizer: self.categorizer.as_ref(),
            toxicity: self.toxicity.as_ref(),
        }
    }
}

fn run_stage(cli: &Cli, cfg: &PipelineConfig, last: Stage) -> Result<RunManifest> {
    let backends = Backends::new(cli.client)?;
    let manifest_path = cli.out.join(concern_core::pipeline::MANIFEST_FILE);
    let before = std::fs::metadata(&manifest_path).and_then(|m| m.modified()).ok();
    let manifest = run_pipeline_until(cfg, &backends.clients(), &cli.out, last).map_err(|e| {
        let after = std::fs::metadata(&manifest_path).and_then(|m| m.modified()).ok();
        let err = anyhow::Error::from(e);
        if after.is_some() && after != before {
            err.context(format!("run failed; see {}", manifest_path.display()))
        } else {
            err
        }
    })?;
    print_summary(&manifest, &cli.out);
    Ok(manifest)
}

fn print_summary(m: &RunManifest, out: &Path) {
    println!("run {} -> {}", m.run_id, out.display());
    for s in &m.stages {
        let status = match s.status {
            StageStatus::Completed => "ok",
            StageStatus::Skipped => "skipped",
            StageStatus::Failed => "FAILED",
        };
        match &s.note {
            Some(n) => println!("  {:<11} {:<8} {}", s.name, status, n),
            None => println!("  {:<11} {}", s.name, status),
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => {
            let mut cfg = load_config(&cli, a.common.input.as_deref())?;
            if let Some(c) = &a.catalog {
                cfg.data.apps = Some(c.clone());
            }
            if let Some(d) = a.min_date {
                cfg.ingest.min_date = d;
            }
            if !a.apps.is_empty() {
                cfg.ingest.apps = a.apps.clone();
            }
            run_stage(&cli, &cfg, Stage::Ingest)?;
        }
        Command::Cluster(a) => cluster(&cli, a)?,
        Command::Detect(a) => {
            let cfg = load_config(&cli, a.common.input.as_deref())?;
            run_stage(&cli, &cfg, Stage::Classify)?;
            if let Some(r) = &a.reference {
                agreement(&cli.out, r, |l| l.is_concern.to_string())?;
            }
        }
        Command::Categorize(a) => {
            let cfg = load_config(&cli, a.common.input.as_deref())?;
            run_stage(&cli, &cfg, Stage::Classify)?;
            if let Some(r) = &a.reference {
                agreement(&cli.out, r, |l| l.category.clone())?;
            }
        }
        Command::Themes(a) => {
            let cfg = load_config(&cli, a.input.as_deref())?;
            run_stage(&cli, &cfg, Stage::Themes)?;
        }
        Command::Sentiment(a) => {
            let cfg = load_config(&cli, a.input.as_deref())?;
            run_stage(&cli, &cfg, Stage::Sentiment)?;
        }
        Command::Prioritize(a) => {
            let mut cfg = load_config(&cli, a.common.input.as_deref())?;
            if let Some(w) = &a.weights {
                cfg.priority.weights = Some(w.clone());
                cfg.priority.tune = false;
            }
            run_stage(&cli, &cfg, Stage::Prioritize)?;
        }
        Command::Tune(a) => {
            let mut cfg = load_config(&cli, a.common.input.as_deref())?;
            cfg.priority.tune = true;
            if let Some(t) = &a.truth {
                cfg.input.truth = Some(t.clone());
            }
            if let Some(k) = a.k {
                cfg.priority.k = k;
            }
            if let Some(f) = a.folds {
                cfg.priority.folds = f;
            }
            if !a.grid.is_empty() {
                cfg.priority.grid_values = a.grid.clone();
            }
            run_stage(&cli, &cfg, Stage::Tune)?;
            print_file(&cli.out.join("evaluation.csv"))?;
        }
        Command::Eval(a) => {
            let mut cfg = load_config(&cli, a.common.input.as_deref())?;
            cfg.priority.tune = false;
            if let Some(t) = &a.truth {
                cfg.input.truth = Some(t.clone());
            }
            if cfg.input.truth.is_none() {
                bail!("eval needs survey ratings (--truth or input.truth)");
            }
            if let Some(w) = &a.weights {
                cfg.priority.weights = Some(w.clone());
            }
            if let Some(k) = a.k {
                cfg.priority.k = k;
            }
            if let Some(f) = a.folds {
                cfg.priority.folds = f;
            }
            run_stage(&cli, &cfg, Stage::Tune)?;
            print_file(&cli.out.join("evaluation.csv"))?;
        }
        Command::Timeline(a) => {
            let mut cfg = load_config(&cli, a.common.input.as_deref())?;
            if a.start.is_some() {
                cfg.timeline.start = a.start;
            }
            if a.end.is_some() {
                cfg.timeline.end = a.end;
            }
            if let Some(e) = &a.events {
                cfg.input.events = Some(e.clone());
            }
            run_stage(&cli, &cfg, Stage::Timeline)?;
        }
        Command::Events(a) => events(&cli, a)?,
        Command::Report(a) | Command::Run(a) => {
            let cfg = load_config(&cli, a.input.as_deref())?;
            run_stage(&cli, &cfg, Stage::Report)?;
        }
    }
    Ok(())
}

fn print_file(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        println!("{line}");
    }
    Ok(())
}

fn cluster(cli: &Cli, a: &ClusterArgs) -> Result<()> {
    let cfg = optional_config(cli)?;
    let path = a
        .memberships
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.input.memberships.clone()))
        .context("--memberships is required without a configured membership file")?;
    let defaults = cfg.map(|c| c.cluster).unwrap_or_default();
    let linkage = a.linkage.unwrap_or(defaults.linkage);
    let gap = a.gap_factor.unwrap_or(defaults.gap_factor);
    let file = std::fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let vectors = read_memberships(file)?;
    let dendro = agglomerate(&vectors, linkage)?;
    let named = name_clusters(&cut_at_gap(&dendro, gap));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cluster", "subreddit"])?;
    for c in &named {
        for m in &c.members {
            w.write_record([c.name.as_str(), m.as_str()])?;
        }
        println!("{} ({} subreddits)", c.name, c.members.len());
    }
    write_atomic(&cli.out.join("clusters.csv"), &w.into_inner()?)?;
    write_atomic(&cli.out.join("dendrogram.dot"), dendro.to_dot().as_bytes())?;
    Ok(())
}

fn events(cli: &Cli, a: &EventsArgs) -> Result<()> {
    let cfg = optional_config(cli)?;
    let path = a
        .events
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.input.events.clone()))
        .context("--events is required without a configured events file")?;
    let threshold = a
        .threshold
        .or_else(|| cfg.as_ref().map(|c| c.timeline.event_threshold))
        .unwrap_or(concern_core::timeline::DEFAULT_EVENT_THRESHOLD);
    let file = std::fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let all = read_events(file)?;
    let selected = rank_events(&all, threshold)?;
    if let Some(s) = score_summary(&selected) {
        println!(
            "{} of {} events above {threshold}; totals min {} median {} max {}",
            selected.len(),
            all.len(),
            s.min,
            s.median,
            s.max
        );
    } else {
        println!("0 of {} events above {threshold}", all.len());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["event", "date", "total"])?;
    for e in &selected {
        println!("  {}  {:<40} {}", e.date, e.name, e.total);
        w.write_record([e.name.clone(), e.date.to_string(), e.total.to_string()])?;
    }
    write_atomic(&cli.out.join("selected_events.csv"), &w.into_inner()?)?;
    Ok(())
}

/// Compares `labels.csv` in `out` with a reference `post_id,label` file.
fn agreement(out: &Path, reference: &Path, pick: impl Fn(&LabelRow) -> String) -> Result<()> {
    let ours = read_label_rows(&out.join("labels.csv"))?;
    let mut rdr = csv::Reader::from_path(reference).with_context(|| format!("opening {}", reference.display()))?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let (Some(id), Some(label)) = (rec.get(0), rec.get(1)) else {
            bail!("{}: expected post_id,label", reference.display());
        };
        let Some(row) = ours.get(id.trim()) else {
            log::warn!("reference post {id} was not labeled in this run");
            continue;
        };
        a.push(normalize_label(label));
        b.push(normalize_label(&pick(row)));
    }
    let r = cohens_kappa(&a, &b)?;
    println!(
        "agreement on {} posts: kappa {:.3}, observed {:.3}, chance {:.3}",
        r.n, r.kappa, r.observed_agreement, r.expected_agreement
    );
    Ok(())
}

fn normalize_label(s: &str) -> String {
    let t = s.trim();
    match t.parse::<EthicalConcernCategory>() {
        Ok(c) => c.name().to_string(),
        Err(_) => t.to_lowercase(),
    }
}

struct LabelRow {
    is_concern: bool,
    category: String,
}

fn read_label_rows(path: &Path) -> Result<BTreeMap<String, LabelRow>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.insert(
            rec[0].to_string(),
            LabelRow {
                is_concern: &rec[1] == "true",
                category: rec[3].to_string(),
            },
        );
    }
    Ok(out)
}
