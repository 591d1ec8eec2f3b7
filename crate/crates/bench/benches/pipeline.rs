use concern_bench::{memberships, rated_features};
use concern_core::cluster::{agglomerate, Linkage};
use concern_core::priority::{grid_search, CvConfig, GridSpec, PriorityWeights, GRID_VALUES};
use concern_core::synth::{synth_corpus, SynthSpec};
use concern_core::timeline::{fit_seasonal, weekly_frequencies};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bench_agglomerate(c: &mut Criterion) {
    let mut g = c.benchmark_group("agglomerate");
    for n in [50, 200, 800] {
        let v = memberships(n, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &v, |b, v| {
            b.iter(|| agglomerate(black_box(v), Linkage::Average).unwrap())
        });
    }
    g.finish();
}

fn bench_grid(c: &mut Criterion) {
    let mut g = c.benchmark_group("grid_search");
    g.sample_size(10);
    let (feats, truth) = rated_features(400, 2);
    let cfg = CvConfig::default();
    for free in [5usize, 10] {
        let mut spec = GridSpec::fixed(&PriorityWeights::default());
        for k in 0..free {
            spec = spec.with_values(k, GRID_VALUES.to_vec()).unwrap();
        }
        g.bench_with_input(BenchmarkId::new("free_weights", free), &spec, |b, spec| {
            b.iter(|| grid_search(black_box(&feats), &truth, spec, cfg).unwrap())
        });
    }
    g.finish();
}

fn bench_seasonal(c: &mut Criterion) {
    let corpus = synth_corpus(&SynthSpec {
        posts: 5_000,
        weeks: 260,
        ..Default::default()
    });
    let spec = SynthSpec::default();
    let end = spec.start + chrono::Duration::weeks(260);
    let series = weekly_frequencies(
        corpus.posts.iter().map(|p| (p.created_utc, p.body.len() % 2 == 0)),
        spec.start,
        end,
    )
    .unwrap();
    let cal = concern_core::defaults::holiday_calendar().unwrap();
    c.bench_function("fit_seasonal_260_weeks", |b| b.iter(|| fit_seasonal(black_box(&series), &cal, 3).unwrap()));
}

criterion_group!(benches, bench_agglomerate, bench_grid, bench_seasonal);
criterion_main!(benches);
