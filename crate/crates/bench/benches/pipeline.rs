//! Benchmarks for the three hot stages: statistical descriptor construction,
//! unitary transform learning, and per-query joint coding (raw vs PCA).

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;

use j3s_bench::{gaussian_config, random_dictionary_items, random_feature_set, random_patches};
use j3s_core::unitary::learn_unitary;
use j3s_core::{assemble_dictionaries, build_descriptor, predict, J3sParams, PatchConfig, Query};

fn descriptor(c: &mut Criterion) {
    let config = gaussian_config();
    let mut group = c.benchmark_group("descriptor");
    for (d, m) in [(16, 50), (64, 100), (128, 200)] {
        let x = random_feature_set(d, m, 1);
        group.bench_function(format!("{d}x{m}"), |b| {
            b.iter(|| build_descriptor(black_box(&x), &config).unwrap())
        });
    }
    group.finish();
}

fn transform_learning(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform_learning");
    group.sample_size(10);
    for (p, n) in [(16, 200), (64, 500)] {
        let patches = random_patches(p, n, 2);
        let side = (p as f64).sqrt() as usize;
        let config = PatchConfig {
            patch_h: side,
            patch_w: side,
            iterations: 15,
            ..PatchConfig::default()
        };
        group.bench_function(format!("{p}x{n}"), |b| {
            b.iter(|| learn_unitary(black_box(&patches), &config).unwrap())
        });
    }
    group.finish();
}

fn joint_coding(c: &mut Criterion) {
    let params = J3sParams::default();
    let items = random_dictionary_items(8, 8, 256, 256, 3);
    let raw = assemble_dictionaries(&items, false).unwrap();
    let reduced = assemble_dictionaries(&items, true).unwrap();
    let query = Query {
        sample_id: "q".into(),
        true_label: None,
        stat: DVector::from_fn(256, |i, _| (i as f64 * 0.37).sin()),
        spat: DVector::from_fn(256, |i, _| (i as f64 * 0.53).cos()),
    };

    let mut group = c.benchmark_group("joint_coding");
    group.sample_size(20);
    group.bench_function("raw_256d_64atoms", |b| {
        b.iter(|| predict(black_box(&raw), &query, &params).unwrap())
    });
    group.bench_function("pca_256d_64atoms", |b| {
        b.iter(|| predict(black_box(&reduced), &query, &params).unwrap())
    });
    group.finish();
}

criterion_group!(benches, descriptor, transform_learning, joint_coding);
criterion_main!(benches);
