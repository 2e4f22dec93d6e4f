//! Sequential vs parallel execution on the hot paths of the pipeline.

use std::hint::black_box;

use annorel_core::agreement::{build_graph, AgreementConfig, AgreementMetric};
use annorel_core::labels::{annotation_prob_labels, sample_prob_labels, DefaultLabelGenerator};
use annorel_core::synthetic::crossed_csv;
use annorel_core::{AnnotationFrame, Execution, LabelMapping};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const LABELS: [&str; 3] = ["neg", "neu", "pos"];

fn bench(c: &mut Criterion) {
    let annotators: Vec<String> = (1..=8).map(|a| format!("a{a}")).collect();
    let csv = crossed_csv(20_000, &[0.2; 8], &LABELS, 7);
    let data = AnnotationFrame::from_csv_bytes(&csv, false).unwrap();
    let generator = DefaultLabelGenerator { mapping: LabelMapping::from_labels(LABELS).unwrap() };
    let labels = annotation_prob_labels(&data, &annotators, &generator, Execution::Sequential).unwrap();

    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let name = format!("{exec:?}").to_lowercase();
        group.bench_with_input(BenchmarkId::new("labels", &name), &exec, |b, &exec| {
            b.iter(|| annotation_prob_labels(black_box(&data), &annotators, &generator, exec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sample_probs", &name), &exec, |b, &exec| {
            b.iter(|| sample_prob_labels(black_box(&labels), None, exec).unwrap())
        });
        for metric in [AgreementMetric::KrippendorffNominal, AgreementMetric::Cosine] {
            let config = AgreementConfig { metric, overlap_threshold: 15 };
            group.bench_with_input(BenchmarkId::new(format!("graph_{metric}"), &name), &exec, |b, &exec| {
                b.iter(|| build_graph(black_box(&labels), &config, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
