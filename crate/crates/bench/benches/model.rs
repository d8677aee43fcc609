use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use zeroshot::datasets::news_aggregator_tree;
use zeroshot::{class_scores, Architecture, DEFAULT_TARGET_LENGTH};
use zeroshot_bench::{instance, store};

const DIM: usize = 300;
const HIDDEN: usize = 128;

fn forward_backward(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_backward");
    for arch in Architecture::ALL {
        let inst = instance(arch, DIM, HIDDEN, DEFAULT_TARGET_LENGTH, 1);
        group.bench_function(BenchmarkId::new("forward", arch), |b| {
            b.iter(|| {
                inst.model
                    .forward(black_box(&inst.sentence), black_box(&inst.tag))
                    .unwrap()
            })
        });
        let (_, cache) = inst.model.forward(&inst.sentence, &inst.tag).unwrap();
        group.bench_function(BenchmarkId::new("backward", arch), |b| {
            b.iter(|| inst.model.backward(black_box(&cache), 1.0).unwrap())
        });
    }
    group.finish();
}

fn category_tree(c: &mut Criterion) {
    let tree = news_aggregator_tree();
    let words = [
        "finance", "revenue", "internet", "android", "actor", "music", "health", "disease",
    ];
    let store = store(1000, &words, DIM, 2);
    let sentence = (0..20)
        .map(|i| format!("w{}", i * 37 % 1000))
        .collect::<Vec<_>>()
        .join(" ");
    let mut group = c.benchmark_group("class_scores");
    for arch in Architecture::ALL {
        let model = instance(arch, DIM, HIDDEN, 1, 3).model;
        group.bench_function(BenchmarkId::from_parameter(arch), |b| {
            b.iter(|| {
                class_scores(
                    &model,
                    &store,
                    black_box(&sentence),
                    &tree,
                    DEFAULT_TARGET_LENGTH,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, forward_backward, category_tree);
criterion_main!(benches);
