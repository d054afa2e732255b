use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use failtax::analytics::{aggregate, aggregate_sequential};
use failtax::classifier::{BackendConfig, Classifier, ResponseCache};
use failtax::fixtures::figure_result_set;
use failtax::ingestion::{Dataset, IncidentRecord};
use failtax::prompting::PromptVersion;

const CAUSES: [&str; 6] = [
    "Ransomware exploited an unpatched vulnerability in the billing server",
    "Customer records were exposed after a data leak at a vendor",
    "Trading platform outage lasted six hours",
    "Checkout page became slow under holiday load",
    "Software bug miscalculated insurance premiums",
    "Scheduled maintenance notice",
];

fn synthetic_dataset(n: usize) -> Dataset {
    let records = (0..n)
        .map(|i| IncidentRecord::new(format!("r{i}"), CAUSES[i % CAUSES.len()], "Finance"))
        .collect();
    Dataset::from_records(records, "bench").unwrap()
}

fn bench_classify(c: &mut Criterion) {
    let ds = synthetic_dataset(20_000);
    let cache = ResponseCache::new();
    let mut group = c.benchmark_group("classify_dataset_oracle");
    group.sample_size(20);
    for threads in [1usize, 4, 8] {
        let classifier = Classifier::new(BackendConfig {
            max_in_flight: threads,
            ..BackendConfig::oracle()
        })
        .unwrap();
        let name = if threads == 1 { "sequential" } else { "parallel" };
        group.bench_with_input(BenchmarkId::new(name, threads), &threads, |b, _| {
            b.iter(|| black_box(classifier.run_dataset(&ds, PromptVersion::V2, &cache)))
        });
    }
    group.finish();
}

fn bench_aggregate(c: &mut Criterion) {
    let (records, results) = figure_result_set();
    // Repeat the figure set so the fold has enough work to split.
    let pairs: Vec<_> = std::iter::repeat_n(records.iter().zip(&results), 20)
        .flatten()
        .collect();
    let mut group = c.benchmark_group("aggregate");
    group.bench_function("parallel", |b| b.iter(|| black_box(aggregate(&pairs).unwrap())));
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(aggregate_sequential(&pairs).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_classify, bench_aggregate);
criterion_main!(benches);
