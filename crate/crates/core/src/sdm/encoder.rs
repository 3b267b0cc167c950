//! The SDM encoder: predicts the current SDM from the spectrogram, the previous
//! action and the previous SDM.
//!
//! ```text
//! spectrogram 2x257x69 -> conv(8,s4) 32 -> conv(4,s2) 64 -> conv(3,s2) 32 -> linear 512
//! prev SDM 1x8         -> 4 x circular conv(3) 32                          -> 256
//! [512 | 4 | 256] = 772 -> 1048 -> 1048 -> 524 -> 8 (sigmoid)
//! ```
//!
//! ReLU follows every layer except the last, which is a sigmoid.

use super::layers::{relu_backward, relu_in_place, Conv2d, Linear, RingConv};
use super::oracle::{SdmVector, NUM_NODES};
use crate::audio::{Spectrogram, N_BINS, N_CHANNELS, N_FRAMES};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

pub const AUDIO_EMBED: usize = 512;
pub const ACTION_DIM: usize = 4;
pub const RING_CHANNELS: usize = 32;
pub const RING_LAYERS: usize = 4;
pub const RING_FEATURES: usize = RING_CHANNELS * NUM_NODES;
pub const MLP_INPUT: usize = AUDIO_EMBED + ACTION_DIM + RING_FEATURES;
pub const MLP_SIZES: [usize; 4] = [1048, 1048, 524, NUM_NODES];
/// Weight of the supervised MSE term.
pub const MSE_COEFFICIENT: f64 = 100.0;

const AUDIO_CONVS: [(usize, usize, usize, usize); 3] =
    [(N_CHANNELS, 32, 8, 4), (32, 64, 4, 2), (64, 32, 3, 2)];

/// One-hot previous action in the order MoveForward, TurnLeft, TurnRight, Found.
/// All zeros before the first action.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActionOneHot(pub [f64; ACTION_DIM]);

impl ActionOneHot {
    pub fn none() -> Self {
        Self([0.0; ACTION_DIM])
    }

    pub fn index(k: usize) -> Self {
        let mut v = [0.0; ACTION_DIM];
        v[k] = 1.0;
        Self(v)
    }

    pub fn is_valid(&self) -> bool {
        let ones = self.0.iter().filter(|&&v| v == 1.0).count();
        let zeros = self.0.iter().filter(|&&v| v == 0.0).count();
        zeros + ones == ACTION_DIM && ones <= 1
    }
}

/// Encoder inputs for one time step.
#[derive(Debug, Clone, Copy)]
pub struct EncoderInput<'a> {
    pub spectrogram: &'a Spectrogram,
    pub prev_action: ActionOneHot,
    pub prev_sdm: SdmVector,
}

/// Teacher-forced training tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct SdmSample {
    pub spectrogram: Spectrogram,
    pub prev_action: ActionOneHot,
    pub prev_sdm: SdmVector,
    pub target: SdmVector,
}

impl SdmSample {
    pub fn input(&self) -> EncoderInput<'_> {
        EncoderInput {
            spectrogram: &self.spectrogram,
            prev_action: self.prev_action,
            prev_sdm: self.prev_sdm,
        }
    }
}

/// Read-only view of one named parameter tensor.
#[derive(Debug)]
pub struct TensorView<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

const HEAD_INIT_SCALE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub audio_convs: Vec<Conv2d>,
    pub audio_linear: Linear,
    pub ring: Vec<RingConv>,
    pub mlp: Vec<Linear>,
}

impl EncoderParams {
    /// Fresh parameters: He-uniform weights, zero biases, scaled-down head.
    pub fn init(seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let audio_convs: Vec<Conv2d> = AUDIO_CONVS
            .iter()
            .map(|&(ci, co, k, s)| Conv2d::new(ci, co, k, s, &mut rng))
            .collect();
        let (h, w) = audio_hw(&audio_convs);
        let audio_linear = Linear::new(audio_convs[2].c_out * h * w, AUDIO_EMBED, &mut rng);
        let ring = (0..RING_LAYERS)
            .map(|l| RingConv::new(if l == 0 { 1 } else { RING_CHANNELS }, RING_CHANNELS, &mut rng))
            .collect();
        let mut dims = vec![MLP_INPUT];
        dims.extend(MLP_SIZES);
        let mut mlp: Vec<Linear> = dims.windows(2).map(|d| Linear::new(d[0], d[1], &mut rng)).collect();
        // A near-zero head starts the sigmoid in its linear region instead of
        // saturating it with the full-scale hidden activations.
        let head = mlp.last_mut().expect("mlp has layers");
        head.weight.iter_mut().for_each(|w| *w *= HEAD_INIT_SCALE);
        Self {
            audio_convs,
            audio_linear,
            ring,
            mlp,
        }
    }

    /// Sets every output bias to the logit of `mean`, so the untrained
    /// network already predicts the average target value.
    pub fn set_output_prior(&mut self, mean: f64) {
        let m = mean.clamp(1e-3, 1.0 - 1e-3);
        let logit = (m / (1.0 - m)).ln();
        let head = self.mlp.last_mut().expect("mlp has layers");
        head.bias.iter_mut().for_each(|b| *b = logit);
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            audio_convs: self.audio_convs.iter().map(Conv2d::zeros_like).collect(),
            audio_linear: self.audio_linear.zeros_like(),
            ring: self.ring.iter().map(RingConv::zeros_like).collect(),
            mlp: self.mlp.iter().map(Linear::zeros_like).collect(),
        }
    }

    /// Named tensors in the canonical order used by the params file.
    pub fn tensors(&self) -> Vec<TensorView<'_>> {
        let mut out = Vec::new();
        for (k, c) in self.audio_convs.iter().enumerate() {
            out.push(TensorView {
                name: format!("audio.conv{}.weight", k + 1),
                shape: vec![c.c_out, c.c_in, c.kernel, c.kernel],
                data: &c.weight,
            });
            out.push(TensorView {
                name: format!("audio.conv{}.bias", k + 1),
                shape: vec![c.c_out],
                data: &c.bias,
            });
        }
        let l = &self.audio_linear;
        out.push(TensorView {
            name: "audio.linear.weight".into(),
            shape: vec![l.out_dim, l.in_dim],
            data: &l.weight,
        });
        out.push(TensorView {
            name: "audio.linear.bias".into(),
            shape: vec![l.out_dim],
            data: &l.bias,
        });
        for (k, c) in self.ring.iter().enumerate() {
            out.push(TensorView {
                name: format!("ring.conv{}.weight", k + 1),
                shape: vec![c.c_out, c.c_in, 3],
                data: &c.weight,
            });
            out.push(TensorView {
                name: format!("ring.conv{}.bias", k + 1),
                shape: vec![c.c_out],
                data: &c.bias,
            });
        }
        for (k, l) in self.mlp.iter().enumerate() {
            out.push(TensorView {
                name: format!("mlp.fc{}.weight", k + 1),
                shape: vec![l.out_dim, l.in_dim],
                data: &l.weight,
            });
            out.push(TensorView {
                name: format!("mlp.fc{}.bias", k + 1),
                shape: vec![l.out_dim],
                data: &l.bias,
            });
        }
        out
    }

    /// Mutable tensors in the same order as [`EncoderParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for c in &mut self.audio_convs {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        out.push(&mut self.audio_linear.weight);
        out.push(&mut self.audio_linear.bias);
        for c in &mut self.ring {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        for l in &mut self.mlp {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Checks that layer shapes chain together.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Shape(m));
        if self.audio_convs.len() != 3 || self.ring.len() != RING_LAYERS || self.mlp.len() != 4 {
            return bad("wrong number of layers".into());
        }
        if self.audio_convs[0].c_in != N_CHANNELS {
            return bad("audio input channels".into());
        }
        for w in self.audio_convs.windows(2) {
            if w[0].c_out != w[1].c_in {
                return bad("audio conv channels do not chain".into());
            }
        }
        let (h, w) = audio_hw(&self.audio_convs);
        if self.audio_linear.in_dim != self.audio_convs[2].c_out * h * w
            || self.audio_linear.out_dim != AUDIO_EMBED
        {
            return bad("audio linear shape".into());
        }
        if self.ring[0].c_in != 1 || self.ring.iter().any(|r| r.c_out != RING_CHANNELS) {
            return bad("ring conv channels".into());
        }
        if self.ring.iter().skip(1).any(|r| r.c_in != RING_CHANNELS) {
            return bad("ring conv channels".into());
        }
        let mut expect = MLP_INPUT;
        for (l, &out) in self.mlp.iter().zip(&MLP_SIZES) {
            if l.in_dim != expect || l.out_dim != out {
                return bad(format!("mlp layer {}x{}", l.out_dim, l.in_dim));
            }
            expect = out;
        }
        for c in &self.audio_convs {
            if c.weight.len() != c.c_out * c.c_in * c.kernel * c.kernel || c.bias.len() != c.c_out {
                return bad("audio conv buffer length".into());
            }
        }
        for r in &self.ring {
            if r.weight.len() != r.c_out * r.c_in * 3 || r.bias.len() != r.c_out {
                return bad("ring conv buffer length".into());
            }
        }
        for l in self.mlp.iter().chain(std::iter::once(&self.audio_linear)) {
            if l.weight.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return bad("linear buffer length".into());
            }
        }
        Ok(())
    }

    /// `self += alpha * other`, tensor by tensor.
    pub fn add_scaled(&mut self, alpha: f64, other: &EncoderParams) {
        let others = other.tensors();
        for (dst, src) in self.tensors_mut().into_iter().zip(others) {
            for (d, s) in dst.iter_mut().zip(src.data) {
                *d += alpha * s;
            }
        }
    }

    /// Euclidean norm over all parameters.
    pub fn l2_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.data.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, alpha: f64) {
        for t in self.tensors_mut() {
            for v in t.iter_mut() {
                *v *= alpha;
            }
        }
    }
}

fn audio_hw(convs: &[Conv2d]) -> (usize, usize) {
    convs
        .iter()
        .fold((N_BINS, N_FRAMES), |(h, w), c| c.output_hw(h, w))
}

struct AudioTrace {
    /// `(input h, input w, patches, post-ReLU output)` per conv layer.
    layers: Vec<(usize, usize, Vec<f64>, Vec<f64>)>,
}

struct RingTrace {
    layers: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Everything the backward pass needs.
struct Trace {
    batch: usize,
    audio: Vec<AudioTrace>,
    ring: Vec<RingTrace>,
    /// `[batch, audio_flat]`
    audio_flat: Vec<f64>,
    /// MLP layer inputs, `mlp_inputs[0]` is the 772-wide concatenation.
    mlp_inputs: Vec<Vec<f64>>,
    /// Sigmoid outputs `[batch, 8]`.
    output: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn ring_forward(params: &EncoderParams, prev_sdm: &SdmVector) -> RingTrace {
    let mut x = prev_sdm.0.to_vec();
    let mut layers = Vec::with_capacity(RING_LAYERS);
    for conv in &params.ring {
        let (cols, mut y) = conv.forward(&x, NUM_NODES);
        relu_in_place(&mut y);
        x = y.clone();
        layers.push((cols, y));
    }
    RingTrace { layers }
}

/// Output of the ring path: `[32 channels, 8 positions]`, flattened channel-major.
pub fn ring_features(params: &EncoderParams, prev_sdm: &SdmVector) -> Vec<f64> {
    ring_forward(params, prev_sdm)
        .layers
        .pop()
        .map(|(_, y)| y)
        .unwrap_or_default()
}

fn audio_forward(params: &EncoderParams, spec: &Spectrogram) -> AudioTrace {
    let (mut h, mut w) = (N_BINS, N_FRAMES);
    let mut x = spec.values().to_vec();
    let mut layers = Vec::with_capacity(params.audio_convs.len());
    for conv in &params.audio_convs {
        let (cols, mut y) = conv.forward(&x, h, w);
        relu_in_place(&mut y);
        let (ho, wo) = conv.output_hw(h, w);
        layers.push((h, w, cols, y.clone()));
        x = y;
        h = ho;
        w = wo;
    }
    AudioTrace { layers }
}

fn forward_trace(params: &EncoderParams, inputs: &[EncoderInput<'_>]) -> Result<Trace> {
    let batch = inputs.len();
    if batch == 0 {
        return Err(Error::EmptyBatch);
    }
    let flat_dim = params.audio_linear.in_dim;
    let mut audio = Vec::with_capacity(batch);
    let mut ring = Vec::with_capacity(batch);
    let mut audio_flat = Vec::with_capacity(batch * flat_dim);
    for inp in inputs {
        let t = audio_forward(params, inp.spectrogram);
        let last = &t.layers.last().expect("three conv layers").3;
        if last.len() != flat_dim {
            return Err(Error::Shape(format!(
                "audio features {} vs linear input {flat_dim}",
                last.len()
            )));
        }
        audio_flat.extend_from_slice(last);
        audio.push(t);
        ring.push(ring_forward(params, &inp.prev_sdm));
    }
    let mut embed = params.audio_linear.forward(&audio_flat, batch);
    relu_in_place(&mut embed);

    let mut h0 = Vec::with_capacity(batch * MLP_INPUT);
    for (b, inp) in inputs.iter().enumerate() {
        h0.extend_from_slice(&embed[b * AUDIO_EMBED..(b + 1) * AUDIO_EMBED]);
        h0.extend_from_slice(&inp.prev_action.0);
        h0.extend_from_slice(&ring[b].layers.last().expect("ring layers").1);
    }
    let mut mlp_inputs = vec![h0];
    let n_mlp = params.mlp.len();
    let mut output = Vec::new();
    for (k, layer) in params.mlp.iter().enumerate() {
        let mut y = layer.forward(mlp_inputs.last().expect("input"), batch);
        if k + 1 < n_mlp {
            relu_in_place(&mut y);
            mlp_inputs.push(y);
        } else {
            y.iter_mut().for_each(|v| *v = sigmoid(*v));
            output = y;
        }
    }
    if output.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("encoder output".into()));
    }
    Ok(Trace {
        batch,
        audio,
        ring,
        audio_flat,
        mlp_inputs,
        output,
    })
}

fn to_sdm_vectors(output: &[f64]) -> Vec<SdmVector> {
    output
        .chunks_exact(NUM_NODES)
        .map(|c| SdmVector(c.try_into().expect("8 nodes")))
        .collect()
}

/// Predicted SDMs, each node in (0, 1).
pub fn encoder_forward(params: &EncoderParams, inputs: &[EncoderInput<'_>]) -> Result<Vec<SdmVector>> {
    Ok(to_sdm_vectors(&forward_trace(params, inputs)?.output))
}

/// Supervised loss `100 * mean((prediction - target)^2)` over batch and nodes.
pub fn mse_loss(predictions: &[SdmVector], targets: &[SdmVector]) -> f64 {
    let n = (predictions.len() * NUM_NODES) as f64;
    let sse: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| p.squared_error(t))
        .sum();
    MSE_COEFFICIENT * sse / n
}

fn backward(params: &EncoderParams, trace: &Trace, targets: &[SdmVector]) -> EncoderParams {
    let batch = trace.batch;
    let mut grad = params.zeros_like();
    let scale = MSE_COEFFICIENT * 2.0 / (batch * NUM_NODES) as f64;
    // dL/dz at the sigmoid input.
    let mut dy: Vec<f64> = trace
        .output
        .iter()
        .zip(targets.iter().flat_map(|t| t.0.iter()))
        .map(|(&p, &t)| scale * (p - t) * p * (1.0 - p))
        .collect();
    for k in (0..params.mlp.len()).rev() {
        let x = &trace.mlp_inputs[k];
        let dx = params.mlp[k]
            .backward(x, &dy, batch, &mut grad.mlp[k], true)
            .expect("dx requested");
        dy = dx;
        if k > 0 {
            relu_backward(&trace.mlp_inputs[k], &mut dy);
        }
    }
    // dy is now dL/dh0, [batch, 772].
    let mut d_embed = Vec::with_capacity(batch * AUDIO_EMBED);
    let mut embed = Vec::with_capacity(batch * AUDIO_EMBED);
    for b in 0..batch {
        let row = &dy[b * MLP_INPUT..(b + 1) * MLP_INPUT];
        d_embed.extend_from_slice(&row[..AUDIO_EMBED]);
        embed.extend_from_slice(&trace.mlp_inputs[0][b * MLP_INPUT..b * MLP_INPUT + AUDIO_EMBED]);
    }
    relu_backward(&embed, &mut d_embed);
    let d_flat = params
        .audio_linear
        .backward(&trace.audio_flat, &d_embed, batch, &mut grad.audio_linear, true)
        .expect("dx requested");
    let flat_dim = params.audio_linear.in_dim;

    for b in 0..batch {
        // Audio convolutions, last to first; the spectrogram needs no gradient.
        let at = &trace.audio[b];
        let mut d = d_flat[b * flat_dim..(b + 1) * flat_dim].to_vec();
        for k in (0..params.audio_convs.len()).rev() {
            let (h, w, ref cols, ref out) = at.layers[k];
            relu_backward(out, &mut d);
            match params.audio_convs[k].backward(cols, &d, h, w, &mut grad.audio_convs[k], k > 0) {
                Some(dx) => d = dx,
                None => break,
            }
        }

        let rt = &trace.ring[b];
        let row = &dy[b * MLP_INPUT..(b + 1) * MLP_INPUT];
        let mut d = row[AUDIO_EMBED + ACTION_DIM..].to_vec();
        for k in (0..params.ring.len()).rev() {
            let (ref cols, ref out) = rt.layers[k];
            relu_backward(out, &mut d);
            match params.ring[k].backward(cols, &d, NUM_NODES, &mut grad.ring[k], k > 0) {
                Some(dx) => d = dx,
                None => break,
            }
        }
    }
    grad
}

/// Loss and its exact gradient on explicit inputs and targets.
pub fn loss_and_gradient_inputs(
    params: &EncoderParams,
    inputs: &[EncoderInput<'_>],
    targets: &[SdmVector],
) -> Result<(f64, EncoderParams)> {
    if inputs.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} inputs for {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    let trace = forward_trace(params, inputs)?;
    let loss = mse_loss(&to_sdm_vectors(&trace.output), targets);
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    Ok((loss, backward(params, &trace, targets)))
}

/// Loss and gradient over a batch of teacher-forced samples.
pub fn loss_and_gradient(params: &EncoderParams, batch: &[SdmSample]) -> Result<(f64, EncoderParams)> {
    let inputs: Vec<EncoderInput<'_>> = batch.iter().map(SdmSample::input).collect();
    let targets: Vec<SdmVector> = batch.iter().map(|s| s.target).collect();
    loss_and_gradient_inputs(params, &inputs, &targets)
}

/// Loss only, for finite-difference checks and evaluation.
pub fn loss_only(params: &EncoderParams, batch: &[SdmSample]) -> Result<f64> {
    let inputs: Vec<EncoderInput<'_>> = batch.iter().map(SdmSample::input).collect();
    let targets: Vec<SdmVector> = batch.iter().map(|s| s.target).collect();
    Ok(mse_loss(&encoder_forward(params, &inputs)?, &targets))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn architecture_shapes() {
        let p = EncoderParams::init(0);
        p.validate().unwrap();
        assert_eq!(p.audio_linear.in_dim, 32 * 14 * 3);
        assert_eq!(MLP_INPUT, 772);
        assert_eq!(p.tensors().len(), 2 * (3 + 1 + 4 + 4));
    }

    #[test]
    fn outputs_are_strictly_inside_unit_interval() {
        let p = EncoderParams::init(1);
        let spec = Spectrogram::zeros();
        let inp = EncoderInput {
            spectrogram: &spec,
            prev_action: ActionOneHot::index(2),
            prev_sdm: SdmVector([0.3; 8]),
        };
        let a = encoder_forward(&p, &[inp]).unwrap();
        let b = encoder_forward(&p, &[inp]).unwrap();
        assert_eq!(a, b);
        assert!(a[0].0.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn perfect_prediction_has_zero_loss_and_gradient() {
        let p = EncoderParams::init(2);
        let spec = Spectrogram::zeros();
        let inp = EncoderInput {
            spectrogram: &spec,
            prev_action: ActionOneHot::none(),
            prev_sdm: SdmVector::zeros(),
        };
        let pred = encoder_forward(&p, &[inp]).unwrap();
        let (loss, grad) = loss_and_gradient_inputs(&p, &[inp], &pred).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.tensors().iter().all(|t| t.data.iter().all(|&g| g == 0.0)));
    }

    #[test]
    fn one_node_off_by_a_tenth() {
        let mut pred = SdmVector([0.5; 8]);
        let target = pred;
        pred.0[3] += 0.1;
        let loss = mse_loss(&[pred], &[target]);
        assert!((loss - 0.125).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let p = EncoderParams::init(0);
        assert!(matches!(loss_and_gradient(&p, &[]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn one_hot_validity() {
        assert!(ActionOneHot::none().is_valid());
        assert!(ActionOneHot::index(3).is_valid());
        assert!(!ActionOneHot([1.0, 1.0, 0.0, 0.0]).is_valid());
    }
}
