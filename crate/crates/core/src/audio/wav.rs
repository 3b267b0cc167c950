use super::binaural::BinauralChunk;
use super::SAMPLE_RATE;
use crate::error::Result;
use std::io::Cursor;

fn spec() -> hound::WavSpec {
    hound::WavSpec {
        channels: 2,
        sample_rate: SAMPLE_RATE as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    }
}

fn to_i16(x: f64) -> i16 {
    (x.clamp(-1.0, 1.0) * i16::MAX as f64).round() as i16
}

/// 16-bit PCM stereo WAV; samples are clipped to [-1, 1] before scaling.
pub fn export_wav(chunk: &BinauralChunk) -> Result<Vec<u8>> {
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut w = hound::WavWriter::new(&mut cursor, spec())?;
        for (&l, &r) in chunk.left.iter().zip(&chunk.right) {
            w.write_sample(to_i16(l))?;
            w.write_sample(to_i16(r))?;
        }
        w.finalize()?;
    }
    Ok(cursor.into_inner())
}

/// Reads a stereo 16-bit WAV back into linear samples.
pub fn import_wav(bytes: &[u8]) -> Result<BinauralChunk> {
    let mut reader = hound::WavReader::new(Cursor::new(bytes))?;
    let samples = reader.samples::<i16>().collect::<Result<Vec<_>, _>>()?;
    let scale = i16::MAX as f64;
    let left = samples.iter().step_by(2).map(|&s| s as f64 / scale).collect();
    let right = samples.iter().skip(1).step_by(2).map(|&s| s as f64 / scale).collect();
    BinauralChunk::new(left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::CHUNK_SAMPLES;

    #[test]
    fn silent_chunk_layout() {
        let bytes = export_wav(&BinauralChunk::silent()).unwrap();
        assert_eq!(bytes.len(), 44 + CHUNK_SAMPLES * 2 * 2);
        assert_eq!(&bytes[0..4], b"RIFF");
        assert_eq!(u32::from_le_bytes(bytes[40..44].try_into().unwrap()), 44_100);
        assert!(bytes[44..].iter().all(|&b| b == 0));
    }

    #[test]
    fn full_scale_and_round_trip() {
        let left: Vec<f64> = (0..CHUNK_SAMPLES).map(|n| (n as f64 * 0.01).sin()).collect();
        let mut right = left.clone();
        right[0] = 1.7; // clipped
        let chunk = BinauralChunk::new(left.clone(), right).unwrap();
        let bytes = export_wav(&chunk).unwrap();
        assert_eq!(i16::from_le_bytes([bytes[46], bytes[47]]), 32_767);
        let back = import_wav(&bytes).unwrap();
        assert_eq!(back.right[0], 1.0);
        for (a, b) in left.iter().zip(&back.left) {
            assert!((a - b).abs() <= 1.0 / 32_768.0);
        }
    }
}
