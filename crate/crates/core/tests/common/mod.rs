#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use concern_core::ingest::write_posts;
use concern_core::pipeline::{Clients, PipelineConfig};
use concern_core::sentiment::StubToxicity;
use concern_core::classify::{StubCategorizer, StubDetector};
use concern_core::synth::{synth_corpus, SynthSpec};

pub const EVENTS_CSV: &str = "name,date,r1,r2,r3,r4,r5\n\
Platform outage,2019-03-13,2,2,2,1,2\n\
Privacy hearing,2019-07-24,2,2,1,2,2\n\
Minor redesign,2019-09-02,1,0,1,0,1\n\
Moderation policy change,2020-02-10,2,2,2,2,1\n";

pub struct Stubs {
    pub detector: StubDetector,
    pub categorizer: StubCategorizer,
    pub toxicity: StubToxicity,
}

impl Stubs {
    pub fn new() -> Self {
        Stubs {
            detector: concern_core::defaults::stub_detector().unwrap(),
            categorizer: concern_core::defaults::stub_categorizer().unwrap(),
            toxicity: concern_core::defaults::stub_toxicity().unwrap(),
        }
    }

    pub fn clients(&self) -> Clients<'_> {
        Clients {
            detector: &self.detector,
            categorizer: &self.categorizer,
            toxicity: &self.toxicity,
        }
    }
}

/// Writes a synthetic posts file, membership table and event list into `dir`
/// and returns a config pointing at them.
pub fn workspace(dir: &Path, posts: usize, extra: &str) -> PipelineConfig {
    let corpus = synth_corpus(&SynthSpec {
        posts,
        ..Default::default()
    });
    let mut buf = Vec::new();
    write_posts(&mut buf, &corpus.posts).unwrap();
    std::fs::write(dir.join("posts.jsonl"), buf).unwrap();
    std::fs::write(dir.join("memberships.csv"), corpus.memberships_csv()).unwrap();
    std::fs::write(dir.join("events.csv"), EVENTS_CSV).unwrap();
    let toml = format!(
        "[input]\nposts = \"posts.jsonl\"\nmemberships = \"memberships.csv\"\nevents = \"events.csv\"\n{extra}\n\n[classify]\nretry_delay_ms = 0\n"
    );
    let path = dir.join("config.toml");
    std::fs::write(&path, toml).unwrap();
    PipelineConfig::load(&path).unwrap()
}

/// Every regular file under `dir` except the stage cache, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        if entry.file_name() == ".cache" || !entry.file_type().unwrap().is_file() {
            continue;
        }
        out.insert(PathBuf::from(entry.file_name()), std::fs::read(entry.path()).unwrap());
    }
    out
}

/// Asserts two snapshots match, naming the first differing file.
pub fn assert_same(a: &BTreeMap<PathBuf, Vec<u8>>, b: &BTreeMap<PathBuf, Vec<u8>>) {
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, va) in a {
        let vb = &b[k];
        if va != vb {
            let (sa, sb) = (String::from_utf8_lossy(va), String::from_utf8_lossy(vb));
            let line = sa.lines().zip(sb.lines()).position(|(x, y)| x != y);
            panic!(
                "{} differs at line {:?}:\n{:?}\n{:?}",
                k.display(),
                line,
                line.and_then(|i| sa.lines().nth(i)),
                line.and_then(|i| sb.lines().nth(i))
            );
        }
    }
}
