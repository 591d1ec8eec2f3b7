//! Seeded synthetic corpora for demos, benchmarks and end-to-end tests.

use std::fmt::Write as _;

use chrono::NaiveDate;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster::{MarginAxis, MembershipVector};
use crate::ingest::{date_to_timestamp, RawPost};

const SUBREDDITS: [(&str, &[MarginAxis]); 9] = [
    ("blackladies", &[MarginAxis::Bipoc, MarginAxis::WomenAFAB]),
    ("blackgirlgamers", &[MarginAxis::Bipoc, MarginAxis::WomenAFAB]),
    ("queerpoc", &[MarginAxis::Bipoc, MarginAxis::Lgbtqia]),
    ("lgbtmentalhealth", &[MarginAxis::Lgbtqia, MarginAxis::MentalHealth]),
    ("transsupport", &[MarginAxis::Lgbtqia, MarginAxis::MentalHealth]),
    ("disabilityfinance", &[MarginAxis::LowSES, MarginAxis::PhysicalHealth]),
    ("chronicillnessbudget", &[MarginAxis::LowSES, MarginAxis::PhysicalHealth]),
    ("desiwomen", &[MarginAxis::GlobalSouth, MarginAxis::WomenAFAB]),
    ("painandanxiety", &[MarginAxis::PhysicalHealth, MarginAxis::MentalHealth]),
];

const APPS: [&str; 6] = ["youtube", "facebook", "instagram", "discord", "twitter", "tiktok"];

const CONCERNS: [&str; 12] = [
    "they removed my post without any reason",
    "my account got shadowbanned after one video",
    "someone scammed me out of forty dollars",
    "i was bullied in the comments every day",
    "people kept harassing me after the stream",
    "the replies were openly racist",
    "they were tracking my location all along",
    "my data leak notice arrived a month late",
    "the feed is full of misinformation about vaccines",
    "so many misleading ads for miracle cures",
    "i feel addicted and cannot stop scrolling",
    "a predator messaged my children",
];

const NEUTRAL: [&str; 8] = [
    "how do i change the theme to dark mode",
    "the new layout looks clean and fast",
    "what is your favorite channel this week",
    "i love the music recommendations lately",
    "does anyone know how to export my playlists",
    "great update, the app feels smoother",
    "looking for friends to join a study group",
    "the notifications finally work again",
];

const COLOR: [&str; 10] = [
    "it makes me so angry and sad",
    "honestly this is terrible and scary",
    "the violence in those clips is disturbing",
    "i am in pain and nobody helps",
    "what an idiot move by the company",
    "thanks for reading, have a good day",
    "kids and youth see this too",
    "i hate how they handle reports",
    "there was a death threat in my inbox",
    "it is fine i guess",
];

/// Shape of a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub posts: usize,
    pub start: NaiveDate,
    pub weeks: u32,
    /// Baseline probability that a post raises a concern.
    pub concern_share: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            posts: 400,
            start: NaiveDate::from_ymd_opt(2019, 1, 7).expect("valid date"),
            weeks: 130,
            concern_share: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub posts: Vec<RawPost>,
    pub memberships: Vec<MembershipVector>,
}

impl SynthCorpus {
    /// Membership table in the CSV layout the cluster reader expects.
    pub fn memberships_csv(&self) -> String {
        let mut s = String::from("subreddit");
        for a in MarginAxis::ALL {
            s.push(',');
            s.push_str(a.column());
        }
        s.push('\n');
        for m in &self.memberships {
            s.push_str(&m.subreddit);
            for a in MarginAxis::ALL {
                let _ = write!(s, ",{}", u8::from(m.has(a)));
            }
            s.push('\n');
        }
        s
    }
}

/// Builds a corpus whose concern share follows a yearly cycle.
pub fn synth_corpus(spec: &SynthSpec) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let t0 = date_to_timestamp(spec.start);
    let span = i64::from(spec.weeks.max(1)) * 7 * 86_400;
    let mut posts = Vec::with_capacity(spec.posts);
    for i in 0..spec.posts {
        let created_utc = t0 + rng.random_range(0..span);
        let phase = (created_utc - t0) as f64 / (365.25 * 86_400.0) * std::f64::consts::TAU;
        let p = (spec.concern_share * (1.0 + 0.4 * phase.sin())).clamp(0.0, 1.0);
        let (sub, _) = SUBREDDITS.choose(&mut rng).expect("non-empty");
        let app = APPS.choose(&mut rng).expect("non-empty");
        let core = if rng.random_bool(p) {
            CONCERNS.choose(&mut rng)
        } else {
            NEUTRAL.choose(&mut rng)
        }
        .expect("non-empty");
        let color = COLOR.choose(&mut rng).expect("non-empty");
        posts.push(RawPost {
            id: format!("t3_{i:06}"),
            subreddit: sub.to_string(),
            created_utc,
            title: format!("Question about {app}"),
            body: format!("On {app} {core}. {color}."),
            upvotes: rng.random_range(0..500),
            upvote_ratio: rng.random_range(0.5..1.0),
            num_comments: rng.random_range(0..200),
        });
    }
    posts.sort_by(|a, b| (a.created_utc, &a.id).cmp(&(b.created_utc, &b.id)));
    let memberships = SUBREDDITS.iter().map(|(s, axes)| MembershipVector::new(*s, axes)).collect();
    SynthCorpus { posts, memberships }
}
