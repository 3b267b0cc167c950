use criterion::{criterion_group, criterion_main, Criterion};
use sdmnav::sdm::gradcheck::random_samples;
use sdmnav::sdm::{encoder_forward, loss_and_gradient, EncoderInput, EncoderParams};
use sdmnav::seed::rng_from_seed;
use std::hint::black_box;

fn encoder(c: &mut Criterion) {
    let params = EncoderParams::init(1);
    let samples = random_samples(8, &mut rng_from_seed(2));
    let one: Vec<EncoderInput<'_>> = samples[..1].iter().map(|s| s.input()).collect();
    c.bench_function("encoder_forward_batch1", |b| b.iter(|| encoder_forward(&params, black_box(&one))));
    let mut group = c.benchmark_group("encoder_backward");
    group.sample_size(10);
    group.bench_function("loss_and_gradient_batch8", |b| b.iter(|| loss_and_gradient(&params, black_box(&samples))));
    group.finish();
}

criterion_group!(benches, encoder);
criterion_main!(benches);
