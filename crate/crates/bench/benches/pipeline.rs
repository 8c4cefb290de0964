use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use pricepref::datagen::{generate, GenConfig};
use pricepref::eval::{grid_sweep, GridAxis};
use pricepref::mf::fit;
use pricepref::rerank::{adjust_score, AdjustmentInputs};
use pricepref::{EvalContext, EvalOptions, HyperParams, Recommender, TrainConfig};
use pricepref_bench::prepare;

fn multiplier(c: &mut Criterion) {
    let inputs = AdjustmentInputs {
        retail_price: 100.0,
        price: 50.0,
        avg_retail_price: 200.0,
        hyper: HyperParams::new(0.7, -0.3).unwrap(),
    };
    c.bench_function("adjust_score", |b| b.iter(|| adjust_score(black_box(&inputs))));
}

fn recommend(c: &mut Criterion) {
    let p = prepare(2_000, 1_000, 5);
    let rec = Recommender::new(&p.model, &p.profiles, &p.train.catalog, &p.train).unwrap();
    let customer = p.model.customers.ids()[0].clone();
    let h = HyperParams::new(0.5, 0.5).unwrap();
    c.bench_function("recommend_top10_1k_items", |b| {
        b.iter(|| rec.recommend(black_box(&customer), h, 10))
    });
}

fn training(c: &mut Criterion) {
    let data = generate(&GenConfig::ds1_like(2_000, 500, 42)).unwrap();
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("warp");
    group.sample_size(10);
    group.bench_function("one_epoch_2k_customers", |b| {
        b.iter_batched(|| data.clone(), |d| fit(&d, &cfg), BatchSize::LargeInput)
    });
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let p = prepare(2_000, 500, 5);
    let rec = Recommender::new(&p.model, &p.profiles, &p.train.catalog, &p.train).unwrap();
    let ctx = EvalContext::new(&rec, &p.test, EvalOptions::default()).unwrap();
    let h = HyperParams::new(1.0, -0.5).unwrap();
    let mut group = c.benchmark_group("eval");
    group.sample_size(20);
    group.bench_function("one_cell", |b| b.iter(|| ctx.evaluate(h)));
    let axis = GridAxis {
        min: -1.0,
        max: 1.0,
        step: 0.5,
    };
    group.bench_function("grid_5x5", |b| b.iter(|| grid_sweep(&ctx, &axis, &axis, Some(1))));
    group.finish();
}

criterion_group!(benches, multiplier, recommend, training, evaluation);
criterion_main!(benches);
