//! Log-magnitude STFT of a binaural chunk.

use super::binaural::BinauralChunk;
use super::CHUNK_SAMPLES;
use crate::error::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

pub const WINDOW: usize = 512;
pub const HOP: usize = 160;
pub const N_BINS: usize = WINDOW / 2 + 1;
pub const N_FRAMES: usize = (CHUNK_SAMPLES + 2 * (WINDOW / 2) - WINDOW) / HOP + 1;
pub const N_CHANNELS: usize = 2;
pub const SPECTROGRAM_LEN: usize = N_CHANNELS * N_BINS * N_FRAMES;

/// Two stacked `257 x 69` spectrograms, `ln(1 + |STFT|)`, layout `[channel][bin][frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    values: Vec<f64>,
}

impl Spectrogram {
    pub fn zeros() -> Self {
        Self {
            values: vec![0.0; SPECTROGRAM_LEN],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() != SPECTROGRAM_LEN {
            return Err(Error::Shape(format!(
                "spectrogram needs {SPECTROGRAM_LEN} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite("spectrogram values".into()));
        }
        Ok(Self { values })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (N_CHANNELS, N_BINS, N_FRAMES)
    }

    pub fn get(&self, channel: usize, bin: usize, frame: usize) -> f64 {
        self.values[(channel * N_BINS + bin) * N_FRAMES + frame]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        &self.values[channel * N_BINS * N_FRAMES..(channel + 1) * N_BINS * N_FRAMES]
    }

    pub fn total_energy(&self) -> f64 {
        self.values.iter().sum()
    }
}

struct StftPlan {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
}

fn plan() -> &'static StftPlan {
    static PLAN: OnceLock<StftPlan> = OnceLock::new();
    PLAN.get_or_init(|| StftPlan {
        fft: FftPlanner::new().plan_fft_forward(WINDOW),
        window: hann_window(WINDOW),
    })
}

/// Periodic Hann window.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Writes the `N_BINS x N_FRAMES` log-magnitude STFT of `signal` into `out`.
fn channel_spectrogram(signal: &[f64], out: &mut [f64]) {
    let plan = plan();
    let pad = WINDOW / 2;
    let mut buf = vec![Complex::new(0.0, 0.0); WINDOW];
    let mut scratch = vec![Complex::new(0.0, 0.0); plan.fft.get_inplace_scratch_len()];
    for frame in 0..N_FRAMES {
        let start = frame * HOP;
        for (k, b) in buf.iter_mut().enumerate() {
            let idx = (start + k).checked_sub(pad);
            let x = idx.and_then(|i| signal.get(i)).copied().unwrap_or(0.0);
            *b = Complex::new(x * plan.window[k], 0.0);
        }
        plan.fft.process_with_scratch(&mut buf, &mut scratch);
        for bin in 0..N_BINS {
            out[bin * N_FRAMES + frame] = buf[bin].norm().ln_1p();
        }
    }
}

/// Center-padded STFT (Hann 512, hop 160) of each channel, `ln(1 + magnitude)`.
pub fn compute_spectrogram(chunk: &BinauralChunk) -> Result<Spectrogram> {
    for ch in [&chunk.left, &chunk.right] {
        if ch.len() != CHUNK_SAMPLES {
            return Err(Error::ChunkLength {
                expected: CHUNK_SAMPLES,
                actual: ch.len(),
            });
        }
    }
    let mut values = vec![0.0; SPECTROGRAM_LEN];
    let (l, r) = values.split_at_mut(N_BINS * N_FRAMES);
    channel_spectrogram(&chunk.left, l);
    channel_spectrogram(&chunk.right, r);
    Ok(Spectrogram { values })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(N^2) DFT, independent of the FFT path.
    fn naive_log_magnitude(signal: &[f64], frame: usize, bin: usize) -> f64 {
        let w = hann_window(WINDOW);
        let (mut re, mut im) = (0.0, 0.0);
        for k in 0..WINDOW {
            let idx = (frame * HOP + k) as isize - (WINDOW / 2) as isize;
            let x = if idx >= 0 && (idx as usize) < signal.len() {
                signal[idx as usize]
            } else {
                0.0
            };
            let ang = -2.0 * PI * (bin * k) as f64 / WINDOW as f64;
            re += x * w[k] * ang.cos();
            im += x * w[k] * ang.sin();
        }
        re.hypot(im).ln_1p()
    }

    #[test]
    fn frame_count_identity() {
        assert_eq!((11_025 + 2 * 256 - 512) / 160 + 1, 69);
        assert_eq!(N_FRAMES, 69);
        assert_eq!(N_BINS, 257);
    }

    #[test]
    fn zero_chunk_gives_zero_spectrogram() {
        let s = compute_spectrogram(&BinauralChunk::silent()).unwrap();
        assert_eq!(s.shape(), (2, 257, 69));
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_direct_dft() {
        let sig: Vec<f64> = (0..CHUNK_SAMPLES)
            .map(|n| ((n * 7919) % 101) as f64 / 50.0 - 1.0)
            .collect();
        let chunk = BinauralChunk::new(sig.clone(), vec![0.0; CHUNK_SAMPLES]).unwrap();
        let s = compute_spectrogram(&chunk).unwrap();
        for &(frame, bin) in &[(0, 0), (0, 13), (34, 100), (68, 256), (10, 200)] {
            let expected = naive_log_magnitude(&sig, frame, bin);
            assert!((s.get(0, bin, frame) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn tone_peaks_at_expected_bin() {
        let f = 861.33;
        let sig: Vec<f64> = (0..CHUNK_SAMPLES)
            .map(|n| (2.0 * PI * f * n as f64 / 44_100.0).sin())
            .collect();
        let chunk = BinauralChunk::new(sig.clone(), sig).unwrap();
        let s = compute_spectrogram(&chunk).unwrap();
        for frame in 2..N_FRAMES - 2 {
            let argmax = (0..N_BINS)
                .max_by(|&a, &b| s.get(0, a, frame).total_cmp(&s.get(0, b, frame)))
                .unwrap();
            assert!(argmax.abs_diff(10) <= 1, "frame {frame}: bin {argmax}");
        }
    }

    #[test]
    fn wrong_length_is_rejected() {
        let chunk = BinauralChunk {
            left: vec![0.0; 100],
            right: vec![0.0; 100],
        };
        assert!(compute_spectrogram(&chunk).is_err());
    }
}
