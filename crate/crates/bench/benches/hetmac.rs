use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hetmac::channel::{BitAllocation, ChannelConfig, SchemeType};
use hetmac::infodensity::estimate_stats;
use hetmac::pipeline::{enumerate_for_gains, DEFAULT_ENUMERATION_CAP};
use hetmac::signaling::{build_scheme, min_distance, superimpose, DEFAULT_POINT_CAP};
use hetmac::F2Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_users() -> (ChannelConfig, BitAllocation) {
    let cfg = ChannelConfig::from_snr_db(&[(24.0, 128, 1e-6), (12.0, 200, 1e-5)]).unwrap();
    let alloc = BitAllocation::new(vec![vec![4], vec![4, 4]]).unwrap();
    (cfg, alloc)
}

fn rank(c: &mut Criterion) {
    let mut group = c.benchmark_group("f2_rank");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [16usize, 64, 256] {
        let m = F2Matrix::random(n, n, &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| black_box(m).rank())
        });
    }
    group.finish();
}

fn constellations(c: &mut Criterion) {
    let (cfg, alloc) = two_users();
    let sig = build_scheme(&cfg, &alloc, SchemeType::TypeI).unwrap();
    c.bench_function("build_scheme", |b| {
        b.iter(|| build_scheme(black_box(&cfg), black_box(&alloc), SchemeType::TypeI).unwrap())
    });
    c.bench_function("superimpose_256", |b| {
        b.iter(|| superimpose(black_box(&sig), &cfg, 0, DEFAULT_POINT_CAP).unwrap())
    });
    let sup = superimpose(&sig, &cfg, 0, DEFAULT_POINT_CAP).unwrap();
    c.bench_function("min_distance_256", |b| {
        b.iter(|| min_distance(black_box(&sup)).unwrap())
    });
}

fn estimation(c: &mut Criterion) {
    let (cfg, alloc) = two_users();
    let sig = build_scheme(&cfg, &alloc, SchemeType::TypeI).unwrap();
    let mut group = c.benchmark_group("estimate_stats");
    group.sample_size(10);
    for (k, l) in [(0, 0), (1, 0), (1, 1)] {
        group.bench_function(format!("user{}_block{}_20k", k + 1, l + 1), |b| {
            b.iter(|| estimate_stats(&cfg, &sig, k, l, 20_000, 7).unwrap())
        });
    }
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    c.bench_function("enumerate_10_8_6", |b| {
        b.iter(|| {
            enumerate_for_gains(black_box(&[10, 8, 6]), true, DEFAULT_ENUMERATION_CAP).unwrap()
        })
    });
}

criterion_group!(benches, rank, constellations, estimation, enumeration);
criterion_main!(benches);
