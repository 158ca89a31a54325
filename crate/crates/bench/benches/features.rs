use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gaffect::features::{landmark_features, LandmarkNormalization, FC7_DIM, LANDMARK_COUNT};
use gaffect::{Aggregation, FeatureMatrix, LandmarkSet, Modality};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bench_landmarks(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<[f64; 2]> = (0..LANDMARK_COUNT).map(|_| [rng.random(), rng.random()]).collect();
    let set = LandmarkSet::new(pts).unwrap();
    c.bench_function("landmark_features", |b| {
        b.iter(|| landmark_features(black_box(&set), LandmarkNormalization::Max).unwrap())
    });
}

fn bench_pooling(c: &mut Criterion) {
    let mut group = c.benchmark_group("pool_fc7");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for faces in [1, 5, 20] {
        let rows = (0..faces).map(|_| (0..FC7_DIM).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
        let m = FeatureMatrix::from_rows("img", Modality::Fc7Rgb, FC7_DIM, rows).unwrap();
        for agg in [Aggregation::Median, Aggregation::Mean] {
            group.bench_with_input(BenchmarkId::new(agg.to_string(), faces), &m, |b, m| {
                b.iter(|| agg.apply(black_box(m)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_landmarks, bench_pooling);
criterion_main!(benches);
