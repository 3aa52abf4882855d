use criterion::{black_box, criterion_group, criterion_main, Criterion};

use wearnet_bench::{random_tensor, random_window};
use wearnet_core::cnn::{conv2d_backward, conv2d_forward, maxpool_forward, Tensor4};
use wearnet_core::features::{compute_tsf, shannon_entropy, TsfKind};
use wearnet_core::imaging::signal_to_image;
use wearnet_core::labeling::kmeans_1d;

fn bench_features(c: &mut Criterion) {
    // One full snapshot at archive scale.
    let window = random_window(20_480, 1);
    c.bench_function("tsf_rms_20480", |b| {
        b.iter(|| compute_tsf(black_box(&window), TsfKind::Rms).unwrap())
    });
    c.bench_function("tsf_kurtosis_20480", |b| {
        b.iter(|| compute_tsf(black_box(&window), TsfKind::Kurtosis).unwrap())
    });
    let series: Vec<f64> = random_window(1_000, 2).iter().map(|v| v.abs() + 0.01).collect();
    c.bench_function("entropy_window16_1000", |b| {
        b.iter(|| shannon_entropy(black_box(&series), 16).unwrap())
    });
}

fn bench_labeling(c: &mut Criterion) {
    let points: Vec<f64> = random_window(1_000, 3).iter().map(|v| v * v).collect();
    c.bench_function("kmeans_1d_k7_1000", |b| {
        b.iter(|| kmeans_1d(black_box(&points), 7, 9, 300, 1e-9).unwrap())
    });
}

fn bench_imaging(c: &mut Criterion) {
    let window = random_window(64 * 64, 4);
    c.bench_function("signal_to_image_64", |b| {
        b.iter(|| signal_to_image(black_box(&window), 64).unwrap())
    });
}

fn bench_cnn(c: &mut Criterion) {
    // The widest layer of the full-size preset on 64x64 inputs.
    let input = random_tensor(1, 96, 30, 30, 5);
    let weights = random_tensor(256, 96, 3, 3, 6);
    let bias = vec![0.1; 256];
    c.bench_function("conv2_forward_96to256_30x30", |b| {
        b.iter(|| conv2d_forward(black_box(&input), &weights, &bias, 1, 0).unwrap())
    });
    let out = conv2d_forward(&input, &weights, &bias, 1, 0).unwrap();
    let grad = Tensor4::from_vec(1, 256, 28, 28, random_window(256 * 28 * 28, 7)).unwrap();
    let _ = out;
    c.bench_function("conv2_backward_96to256_30x30", |b| {
        b.iter(|| conv2d_backward(black_box(&grad), &input, &weights, 1, 0, true).unwrap())
    });
    let pool_in = random_tensor(8, 96, 60, 60, 8);
    c.bench_function("maxpool2x2_96x60x60_batch8", |b| {
        b.iter(|| maxpool_forward(black_box(&pool_in), 2, 2).unwrap())
    });
}

criterion_group!(
    benches,
    bench_features,
    bench_labeling,
    bench_imaging,
    bench_cnn
);
criterion_main!(benches);
