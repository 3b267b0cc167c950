//! Binary file formats for encoder parameters and SDM datasets.
//!
//! Both start with one line of JSON (the manifest) terminated by `\n`,
//! followed by little-endian `f64` arrays in the order the manifest declares.

use super::encoder::{ActionOneHot, EncoderParams, SdmSample, ACTION_DIM};
use super::oracle::{SdmVector, NUM_NODES};
use crate::audio::{Spectrogram, N_BINS, N_CHANNELS, N_FRAMES, SPECTROGRAM_LEN};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const PARAMS_FORMAT: &str = "sdmnav-encoder-params";
const DATASET_FORMAT: &str = "sdmnav-sdm-dataset";
const RECORD_LEN: usize = SPECTROGRAM_LEN + ACTION_DIM + 2 * NUM_NODES;

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamsManifest {
    format: String,
    version: u32,
    #[serde(default)]
    header: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

fn split_manifest(bytes: &[u8]) -> Result<(&[u8], &[u8])> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::ParamsFormat("missing manifest line".into()))?;
    Ok((&bytes[..nl], &bytes[nl + 1..]))
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn read_f64s(bytes: &[u8], out: &mut [f64]) {
    for (v, b) in out.iter_mut().zip(bytes.chunks_exact(8)) {
        *v = f64::from_le_bytes(b.try_into().expect("8 bytes"));
    }
}

pub fn write_params(params: &EncoderParams, header: serde_json::Value) -> Vec<u8> {
    let tensors = params.tensors();
    let manifest = ParamsManifest {
        format: PARAMS_FORMAT.into(),
        version: 1,
        header,
        tensors: tensors
            .iter()
            .map(|t| TensorEntry {
                name: t.name.clone(),
                shape: t.shape.clone(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec(&manifest).expect("manifest serializes");
    out.push(b'\n');
    for t in &tensors {
        push_f64s(&mut out, t.data);
    }
    out
}

/// Parses a params file; names and shapes must match the encoder architecture exactly.
pub fn read_params(bytes: &[u8]) -> Result<(EncoderParams, serde_json::Value)> {
    let (head, body) = split_manifest(bytes)?;
    let manifest: ParamsManifest = serde_json::from_slice(head)?;
    if manifest.format != PARAMS_FORMAT || manifest.version != 1 {
        return Err(Error::ParamsFormat(format!(
            "unsupported format {} v{}",
            manifest.format, manifest.version
        )));
    }
    let mut params = EncoderParams::init(0).zeros_like();
    let expected: Vec<(String, Vec<usize>)> = params
        .tensors()
        .into_iter()
        .map(|t| (t.name, t.shape))
        .collect();
    if manifest.tensors.len() != expected.len() {
        return Err(Error::ParamsFormat("tensor count mismatch".into()));
    }
    for (entry, (name, shape)) in manifest.tensors.iter().zip(&expected) {
        if &entry.name != name || &entry.shape != shape {
            return Err(Error::ParamsFormat(format!(
                "expected {name} {shape:?}, found {} {:?}",
                entry.name, entry.shape
            )));
        }
    }
    let total: usize = expected.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
    if body.len() != total * 8 {
        return Err(Error::ParamsFormat(format!(
            "expected {} payload bytes, found {}",
            total * 8,
            body.len()
        )));
    }
    let mut offset = 0;
    for t in params.tensors_mut() {
        let n = t.len();
        read_f64s(&body[offset..offset + n * 8], t);
        offset += n * 8;
    }
    if !params.is_finite() {
        return Err(Error::NonFinite("params file".into()));
    }
    Ok((params, manifest.header))
}

/// Teacher-forced samples of one or more consecutive episode rollouts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SdmDataset {
    pub samples: Vec<SdmSample>,
    /// Samples per episode, in order; sums to `samples.len()`.
    pub episode_lengths: Vec<usize>,
}

impl SdmDataset {
    /// Per-episode slices of `samples`.
    pub fn episodes(&self) -> impl Iterator<Item = &[SdmSample]> {
        let mut start = 0;
        self.episode_lengths.iter().map(move |&n| {
            let s = &self.samples[start..start + n];
            start += n;
            s
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetManifest {
    format: String,
    version: u32,
    count: usize,
    episode_lengths: Vec<usize>,
    record: serde_json::Value,
    #[serde(default)]
    header: serde_json::Value,
}

pub fn write_sdm_dataset(dataset: &SdmDataset, header: serde_json::Value) -> Vec<u8> {
    let manifest = DatasetManifest {
        format: DATASET_FORMAT.into(),
        version: 1,
        count: dataset.samples.len(),
        episode_lengths: dataset.episode_lengths.clone(),
        record: serde_json::json!({
            "spectrogram": [N_CHANNELS, N_BINS, N_FRAMES],
            "prev_action": [ACTION_DIM],
            "prev_sdm": [NUM_NODES],
            "target": [NUM_NODES],
        }),
        header,
    };
    let mut out = serde_json::to_vec(&manifest).expect("manifest serializes");
    out.push(b'\n');
    for s in &dataset.samples {
        push_f64s(&mut out, s.spectrogram.values());
        push_f64s(&mut out, &s.prev_action.0);
        push_f64s(&mut out, &s.prev_sdm.0);
        push_f64s(&mut out, &s.target.0);
    }
    out
}

pub fn read_sdm_dataset(bytes: &[u8]) -> Result<(SdmDataset, serde_json::Value)> {
    let (head, body) = split_manifest(bytes)?;
    let manifest: DatasetManifest = serde_json::from_slice(head)?;
    let bad = |m: String| Error::ParamsFormat(m);
    if manifest.format != DATASET_FORMAT || manifest.version != 1 {
        return Err(bad(format!("unsupported format {}", manifest.format)));
    }
    if body.len() != manifest.count * RECORD_LEN * 8 {
        return Err(bad("payload length does not match count".into()));
    }
    if manifest.episode_lengths.iter().sum::<usize>() != manifest.count {
        return Err(bad("episode lengths do not sum to count".into()));
    }
    let mut samples = Vec::with_capacity(manifest.count);
    let mut buf = vec![0.0; RECORD_LEN];
    for rec in body.chunks_exact(RECORD_LEN * 8) {
        read_f64s(rec, &mut buf);
        let (spec, rest) = buf.split_at(SPECTROGRAM_LEN);
        let prev_action = ActionOneHot(rest[..ACTION_DIM].try_into().expect("4"));
        let prev_sdm = SdmVector(rest[ACTION_DIM..ACTION_DIM + NUM_NODES].try_into().expect("8"));
        let target = SdmVector(rest[ACTION_DIM + NUM_NODES..].try_into().expect("8"));
        if !prev_action.is_valid() || !prev_sdm.is_valid() || !target.is_valid() {
            return Err(bad("record violates one-hot or SDM range invariants".into()));
        }
        samples.push(SdmSample {
            spectrogram: Spectrogram::from_values(spec.to_vec())?,
            prev_action,
            prev_sdm,
            target,
        });
    }
    Ok((
        SdmDataset {
            samples,
            episode_lengths: manifest.episode_lengths,
        },
        manifest.header,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdm::gradcheck::random_samples;
    use crate::seed::rng_from_seed;

    #[test]
    fn params_round_trip() {
        let p = EncoderParams::init(9);
        let bytes = write_params(&p, serde_json::json!({"seed": 9}));
        let (back, header) = read_params(&bytes).unwrap();
        assert_eq!(back, p);
        assert_eq!(header["seed"], 9);
    }

    #[test]
    fn truncated_params_are_rejected() {
        let bytes = write_params(&EncoderParams::init(1), serde_json::Value::Null);
        assert!(read_params(&bytes[..bytes.len() - 8]).is_err());
        assert!(read_params(b"no manifest").is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let samples = random_samples(3, &mut rng_from_seed(4));
        let ds = SdmDataset {
            samples,
            episode_lengths: vec![2, 1],
        };
        let bytes = write_sdm_dataset(&ds, serde_json::Value::Null);
        let (back, _) = read_sdm_dataset(&bytes).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.episodes().map(<[_]>::len).collect::<Vec<_>>(), vec![2, 1]);
    }
}
