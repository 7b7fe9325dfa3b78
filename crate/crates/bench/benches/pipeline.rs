//! Hot paths, each benched at a size where one iteration stays in the
//! low-millisecond range: one training epoch, one spanning evaluation,
//! one regression fit, one bootstrap curve.

use std::hint::black_box;

use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, Criterion};
use kspan_core::{
    bootstrap_curve, build_vocabulary, fit_ols, knowledge_spanning, train_embeddings, Corpus,
    CurveParams, EmbeddingConfig, EmbeddingMatrix, QuestionRecord, TrainMode,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two topic pools of 12 categories each, 250 records per pool.
fn two_cluster_corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cutoff = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
    let created = NaiveDate::from_ymd_opt(2017, 6, 1).unwrap();
    let mut records = Vec::new();
    for (tag, offset) in [("a", 0), ("b", 12)] {
        for i in 0..250 {
            let want = rng.gen_range(4..=6usize);
            let mut cats: Vec<String> = Vec::with_capacity(want);
            while cats.len() < want {
                let pick = format!("cat{:02}", offset + rng.gen_range(0..12));
                if !cats.contains(&pick) {
                    cats.push(pick);
                }
            }
            records.push(QuestionRecord {
                id: format!("{tag}{i:04}"),
                title_length: 20,
                categories: cats,
                followers: 10,
                answers: None,
                created,
            });
        }
    }
    Corpus::new(records, cutoff).unwrap()
}

fn random_embedding(words: usize, dim: usize) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut text = format!("{words} {dim}\n");
    for i in 0..words {
        text.push_str(&format!("w{i:04}"));
        for _ in 0..dim {
            text.push_str(&format!(" {:.17}", rng.gen_range(-1.0f64..1.0)));
        }
        text.push('\n');
    }
    EmbeddingMatrix::import(text.as_bytes()).unwrap()
}

fn bench_train_epoch(c: &mut Criterion) {
    let corpus = two_cluster_corpus();
    let config = EmbeddingConfig {
        dimension: 24,
        epochs: 1,
        negatives: 5,
        learning_rate: 0.025,
        window: 8,
        min_count: 1,
        seed: 7,
        mode: TrainMode::Sequential,
    };
    let vocab = build_vocabulary(&corpus, config.min_count).unwrap();
    c.bench_function("train_epoch_500_records", |b| {
        b.iter(|| train_embeddings(black_box(&corpus), &vocab, &config).unwrap())
    });
}

fn bench_knowledge_spanning(c: &mut Criterion) {
    let matrix = random_embedding(500, 50);
    let question: Vec<String> = (0..8).map(|i| format!("w{:04}", i * 37)).collect();
    c.bench_function("knowledge_spanning_8_categories", |b| {
        b.iter(|| knowledge_spanning(black_box(&matrix), black_box(&question)).unwrap())
    });
}

fn bench_fit_ols(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, p) = (2000, 13);
    let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.gen_range(-2.0..2.0) });
    let y = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
    let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    c.bench_function("fit_ols_2000x13", |b| {
        b.iter(|| fit_ols(black_box(&x), black_box(&y), &names).unwrap())
    });
}

fn bench_bootstrap_curve(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 10_000;
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v + rng.gen_range(-1.0..1.0)).collect();
    let params = CurveParams {
        n_bins: 30,
        n_resamples: 200,
        min_bin_count: 30,
        seed: 5,
    };
    c.bench_function("bootstrap_curve_10k_200_resamples", |b| {
        b.iter(|| bootstrap_curve(black_box(&x), black_box(&y), &params).unwrap())
    });
}

criterion_group!(
    benches,
    bench_train_epoch,
    bench_knowledge_spanning,
    bench_fit_ols,
    bench_bootstrap_curve
);
criterion_main!(benches);
