//! Parametric sound categories, binaural rendering and the spectrogram pipeline.

mod binaural;
mod category;
mod stft;
mod wav;

pub use binaural::{
    attenuation, pan_gains, render_binaural, render_with_distances, BinauralChunk, RenderedChunk,
    SourceState,
};
pub use category::{CategoryLibrary, SoundCategory, SoundKind, SoundSet, LOOP_SAMPLES};
pub use stft::{
    compute_spectrogram, hann_window, Spectrogram, HOP, N_BINS, N_CHANNELS, N_FRAMES,
    SPECTROGRAM_LEN, WINDOW,
};
pub use wav::{export_wav, import_wav};

pub const SAMPLE_RATE: f64 = 44_100.0;

/// Samples per observation chunk (0.25 s).
pub const CHUNK_SAMPLES: usize = 11_025;

/// Seconds of audio per observation.
pub const CHUNK_SECONDS: f64 = 0.25;
