use criterion::{criterion_group, criterion_main, Criterion};
use sdmnav::audio::{compute_spectrogram, render_binaural, BinauralChunk, CategoryLibrary, SoundSet, SourceState, CHUNK_SAMPLES};
use sdmnav::scene::{builders, Cell, Heading, Pose};
use std::hint::black_box;

fn spectrogram(c: &mut Criterion) {
    let tone: Vec<f64> = (0..CHUNK_SAMPLES).map(|n| (n as f64 * 0.1227).sin()).collect();
    let chunk = BinauralChunk::new(tone.clone(), tone).expect("chunk length");
    c.bench_function("stft_2x257x69", |b| b.iter(|| compute_spectrogram(black_box(&chunk))));

    let grid = builders::open_room("room", 40, 30);
    let lib = CategoryLibrary::parametric(SoundSet::Default);
    let ids = lib.ids();
    let sources: Vec<SourceState> = (0..3)
        .map(|k| SourceState {
            position: Cell::new(5 + 10 * k, 20).center(),
            category: ids[k % ids.len()],
            offset_s: 0.1 * k as f64,
            active: true,
        })
        .collect();
    let pose = Pose::new(Cell::new(20, 5).center(), Heading::new(40).expect("heading"));
    c.bench_function("render_binaural_3_sources", |b| {
        b.iter(|| render_binaural(&grid, &lib, black_box(pose), &sources, 1.25))
    });
}

criterion_group!(benches, spectrogram);
criterion_main!(benches);
