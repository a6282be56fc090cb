use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use robustbench_bench::scene;
use robustbench_core::annotations::{Annotation, BoundingBox, Detection, SignType};
use robustbench_core::challenge::{apply_challenge, ChallengeSpec, ChallengeType};
use robustbench_core::metrics::{match_detections, MatchOptions};
use robustbench_core::rng::SplitMix64;
use robustbench_core::spectral::{dft2, sequence_spectrum, EPSILON};
use robustbench_core::stats::spearman;
use robustbench_core::PairedSeries;

fn bench_dft(c: &mut Criterion) {
    let mut g = c.benchmark_group("dft2");
    for n in [64usize, 128, 256] {
        let mut rng = SplitMix64::new(n as u64);
        let values: Vec<f64> = (0..n * n).map(|_| rng.next_f64()).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &values, |b, v| b.iter(|| dft2(black_box(v), n, n).unwrap()));
    }
    g.finish();
}

fn bench_challenges(c: &mut Criterion) {
    let seq = scene(64, 64, 10);
    let mut g = c.benchmark_group("challenge_64x64x10");
    for kind in [ChallengeType::GaussianBlur, ChallengeType::LensBlur, ChallengeType::Noise, ChallengeType::Rain, ChallengeType::CodecError, ChallengeType::Haze] {
        let spec = ChallengeSpec::new(kind, 3, 7).unwrap();
        g.bench_function(kind.name(), |b| b.iter(|| apply_challenge(black_box(&seq), &spec).unwrap()));
    }
    g.finish();
}

fn bench_spectrum(c: &mut Criterion) {
    let seq = scene(64, 64, 10);
    let noisy = apply_challenge(&seq, &ChallengeSpec::new(ChallengeType::Noise, 3, 7).unwrap()).unwrap();
    c.bench_function("sequence_spectrum_64x64x10", |b| b.iter(|| sequence_spectrum(black_box(&seq), &noisy, EPSILON).unwrap()));
}

fn bench_matching(c: &mut Criterion) {
    let mut rng = SplitMix64::new(3);
    let gt: Vec<Annotation> = (0..2000)
        .map(|i| Annotation {
            frame_index: i / 4,
            sign: SignType::from_code(1 + rng.below(14) as u8).unwrap(),
            bbox: BoundingBox::new(rng.range(0.0, 600.0), rng.range(0.0, 400.0), 24.0, 24.0).unwrap(),
        })
        .collect();
    let pred: Vec<Detection> = gt
        .iter()
        .map(|a| {
            let mut d = Detection::from(*a);
            d.bbox.x += rng.range(-6.0, 6.0);
            d.confidence = rng.next_f64();
            d
        })
        .collect();
    let opts = MatchOptions::default();
    c.bench_function("match_detections_2000", |b| b.iter(|| match_detections(black_box(&gt), &pred, &opts).unwrap()));
}

fn bench_spearman(c: &mut Criterion) {
    let mut rng = SplitMix64::new(5);
    let xs: Vec<f64> = (0..10_000).map(|_| rng.below(100) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x + rng.range(-20.0, 20.0)).collect();
    let series = PairedSeries::new(xs, ys).unwrap();
    c.bench_function("spearman_10000", |b| b.iter(|| spearman(black_box(&series)).unwrap()));
}

criterion_group!(benches, bench_dft, bench_challenges, bench_spectrum, bench_matching, bench_spearman);
criterion_main!(benches);
