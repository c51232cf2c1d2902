use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use equifair::debias::{hard_debias_with_subspace, identify_subspace, NeutralPolicy};
use equifair::eo::{fit_eo_hard, fit_eo_soft, LossSpec};
use equifair::metrics::multilabel_auc_with;
use equifair::synth::{
    generate_cohort, generate_embeddings, generate_multilabel, Attribute, CohortConfig, EmbeddingPlantConfig,
    MultilabelConfig,
};
use equifair::Execution;

const PATHS: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn eo_apply(c: &mut Criterion) {
    let cfg = CohortConfig::preset(Attribute::Ethnicity).with_samples(100_000).with_seed(1);
    let preds = generate_cohort(&cfg).unwrap().modalities.remove(0).1;
    let hard = fit_eo_hard(&preds, &LossSpec::default()).unwrap();
    let soft = fit_eo_soft(&preds, &LossSpec::default()).unwrap();
    let mut group = c.benchmark_group("eo_apply");
    for (name, exec) in PATHS {
        group.bench_with_input(BenchmarkId::new("hard", name), &exec, |b, &e| {
            b.iter(|| hard.apply_with(&preds, 3, e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("soft", name), &exec, |b, &e| {
            b.iter(|| soft.apply_with(&preds, 3, e).unwrap())
        });
    }
    group.finish();
}

fn multilabel(c: &mut Criterion) {
    let (scores, labels) = generate_multilabel(&MultilabelConfig { n_samples: 20_000, ..Default::default() }).unwrap();
    let mut group = c.benchmark_group("multilabel_auc");
    for (name, exec) in PATHS {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| multilabel_auc_with(&scores, &labels, e).unwrap())
        });
    }
    group.finish();
}

fn neutralize(c: &mut Criterion) {
    let plant = generate_embeddings(&EmbeddingPlantConfig {
        vocab_size: 20_000,
        dim: 200,
        sigma: 0.01,
        leakage: 0.2,
        ..Default::default()
    })
    .unwrap();
    let sub = identify_subspace(&plant.embeddings, &plant.sets, 1).unwrap();
    let mut group = c.benchmark_group("hard_debias");
    group.sample_size(20);
    for (name, exec) in PATHS {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| {
                hard_debias_with_subspace(&plant.embeddings, &plant.sets, &NeutralPolicy::default(), &sub, e).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, eo_apply, multilabel, neutralize);
criterion_main!(benches);
