//! Teacher-forced training of the SDM encoder and closed-loop inference.

use super::encoder::{
    encoder_forward, loss_and_gradient_inputs, EncoderInput, EncoderParams, SdmSample,
};
use super::oracle::{SdmVector, NUM_NODES};
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use rand::seq::SliceRandom;
use rand::Rng;

pub const DEFAULT_DROPOUT: f64 = 0.2;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-2;
pub const DEFAULT_MOMENTUM: f64 = 0.9;
pub const DEFAULT_BATCH_SIZE: usize = 32;
/// Minibatch gradients are rescaled to at most this L2 norm.
pub const DEFAULT_GRAD_CLIP: Option<f64> = Some(1.0);

/// Zeroes each node independently with probability `p`; survivors are not rescaled.
pub fn apply_dropout<R: Rng>(prev_sdm: &SdmVector, rng: &mut R, p: f64) -> SdmVector {
    let mut out = *prev_sdm;
    for v in &mut out.0 {
        if rng.random::<f64>() < p {
            *v = 0.0;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub dropout: f64,
    /// Rescale each minibatch gradient to at most this global L2 norm.
    pub grad_clip: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: DEFAULT_LEARNING_RATE,
            momentum: DEFAULT_MOMENTUM,
            batch_size: DEFAULT_BATCH_SIZE,
            dropout: DEFAULT_DROPOUT,
            grad_clip: DEFAULT_GRAD_CLIP,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub params: EncoderParams,
    /// Teacher-forced loss (coefficient-weighted, no dropout) over the whole
    /// dataset after each epoch.
    pub loss_history: Vec<f64>,
}

/// Minibatch SGD with momentum; dropout is applied to the previous-SDM input only.
pub fn train_encoder(
    params: EncoderParams,
    dataset: &[SdmSample],
    config: &TrainConfig,
) -> Result<TrainReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if config.batch_size == 0 || !(0.0..=1.0).contains(&config.dropout) {
        return Err(Error::InvalidArgument("batch size must be > 0 and dropout in [0, 1]".into()));
    }
    let mut params = params;
    let mut velocity = params.zeros_like();
    let mut rng = rng_from_seed(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let inputs: Vec<EncoderInput<'_>> = batch
                .iter()
                .map(|&k| {
                    let s = &dataset[k];
                    EncoderInput {
                        spectrogram: &s.spectrogram,
                        prev_action: s.prev_action,
                        prev_sdm: apply_dropout(&s.prev_sdm, &mut rng, config.dropout),
                    }
                })
                .collect();
            let targets: Vec<SdmVector> = batch.iter().map(|&k| dataset[k].target).collect();
            let (loss, grad) = match loss_and_gradient_inputs(&params, &inputs, &targets) {
                Ok(r) => r,
                Err(Error::NonFinite(_)) => {
                    return Err(Error::Diverged {
                        epoch,
                        loss: f64::NAN,
                    })
                }
                Err(e) => return Err(e),
            };
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            let norm = grad.l2_norm();
            let g_scale = match config.grad_clip {
                Some(c) if norm > c => c / norm,
                _ => 1.0,
            };
            velocity.scale(config.momentum);
            velocity.add_scaled(g_scale, &grad);
            params.add_scaled(-config.learning_rate, &velocity);
        }
        let loss = super::encoder::MSE_COEFFICIENT * dataset_mse(&params, dataset)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        loss_history.push(loss);
    }
    Ok(TrainReport {
        params,
        loss_history,
    })
}

const EVAL_BATCH: usize = 32;

/// Teacher-forced predictions without dropout.
pub fn predict_teacher_forced(params: &EncoderParams, dataset: &[SdmSample]) -> Result<Vec<SdmVector>> {
    let mut out = Vec::with_capacity(dataset.len());
    for chunk in dataset.chunks(EVAL_BATCH) {
        let inputs: Vec<EncoderInput<'_>> = chunk.iter().map(SdmSample::input).collect();
        out.extend(encoder_forward(params, &inputs)?);
    }
    Ok(out)
}

/// Plain mean squared error over samples and nodes.
pub fn mse(predictions: &[SdmVector], targets: &[SdmVector]) -> f64 {
    let sse: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| p.squared_error(t))
        .sum();
    sse / (predictions.len() * NUM_NODES) as f64
}

/// Teacher-forced MSE of the encoder on `dataset`.
pub fn dataset_mse(params: &EncoderParams, dataset: &[SdmSample]) -> Result<f64> {
    let preds = predict_teacher_forced(params, dataset)?;
    let targets: Vec<SdmVector> = dataset.iter().map(|s| s.target).collect();
    Ok(mse(&preds, &targets))
}

/// Fresh parameters whose output bias matches the dataset's mean target.
pub fn init_for_dataset(seed: u64, dataset: &[SdmSample]) -> EncoderParams {
    let mut params = EncoderParams::init(seed);
    if !dataset.is_empty() {
        let total: f64 = dataset.iter().flat_map(|s| s.target.0).sum();
        params.set_output_prior(total / (dataset.len() * NUM_NODES) as f64);
    }
    params
}

/// MSE of the constant predictor that outputs the per-node mean target.
pub fn mean_predictor_mse(dataset: &[SdmSample]) -> f64 {
    let n = dataset.len() as f64;
    let mut mean = [0.0; NUM_NODES];
    for s in dataset {
        for (m, t) in mean.iter_mut().zip(&s.target.0) {
            *m += t / n;
        }
    }
    let constant = SdmVector(mean);
    let preds = vec![constant; dataset.len()];
    let targets: Vec<SdmVector> = dataset.iter().map(|s| s.target).collect();
    mse(&preds, &targets)
}

/// Runs the encoder over one episode's steps, feeding back its own previous
/// prediction (zeros at the first step). `rollout[t].prev_sdm` is ignored.
pub fn closed_loop_predict(params: &EncoderParams, rollout: &[SdmSample]) -> Result<Vec<SdmVector>> {
    let mut prev = SdmVector::zeros();
    let mut out = Vec::with_capacity(rollout.len());
    for s in rollout {
        let input = EncoderInput {
            spectrogram: &s.spectrogram,
            prev_action: s.prev_action,
            prev_sdm: prev,
        };
        prev = encoder_forward(params, &[input])?[0];
        out.push(prev);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::Spectrogram;
    use crate::sdm::encoder::ActionOneHot;

    #[test]
    fn dropout_extremes() {
        let mut rng = rng_from_seed(0);
        let v = SdmVector([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]);
        assert_eq!(apply_dropout(&v, &mut rng, 0.0), v);
        assert_eq!(apply_dropout(&v, &mut rng, 1.0), SdmVector::zeros());
    }

    #[test]
    fn dropout_rate_concentrates() {
        let mut rng = rng_from_seed(42);
        let v = SdmVector([1.0; 8]);
        let draws = 12_500; // 100,000 nodes
        let zeroed: usize = (0..draws)
            .map(|_| apply_dropout(&v, &mut rng, 0.2).0.iter().filter(|&&x| x == 0.0).count())
            .sum();
        let frac = zeroed as f64 / (draws * 8) as f64;
        assert!((frac - 0.2).abs() < 0.01, "{frac}");
    }

    fn tiny_dataset() -> Vec<SdmSample> {
        (0..6)
            .map(|k| SdmSample {
                spectrogram: Spectrogram::zeros(),
                prev_action: ActionOneHot::index(k % 4),
                prev_sdm: SdmVector([k as f64 / 6.0; 8]),
                target: SdmVector([(k + 1) as f64 / 7.0; 8]),
            })
            .collect()
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let p0 = EncoderParams::init(5);
        let cfg = TrainConfig {
            epochs: 3,
            learning_rate: 0.0,
            batch_size: 4,
            ..TrainConfig::default()
        };
        let r = train_encoder(p0.clone(), &tiny_dataset(), &cfg).unwrap();
        assert_eq!(r.params, p0);
        assert_eq!(r.loss_history.len(), 3);
        assert!(r.loss_history.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 4,
            seed: 11,
            ..TrainConfig::default()
        };
        let a = train_encoder(EncoderParams::init(5), &tiny_dataset(), &cfg).unwrap();
        let b = train_encoder(EncoderParams::init(5), &tiny_dataset(), &cfg).unwrap();
        assert_eq!(a.loss_history, b.loss_history);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn closed_loop_starts_from_zero_history() {
        let p = EncoderParams::init(3);
        let data = tiny_dataset();
        let preds = closed_loop_predict(&p, &data).unwrap();
        assert_eq!(preds.len(), data.len());
        let first = encoder_forward(
            &p,
            &[EncoderInput {
                spectrogram: &data[0].spectrogram,
                prev_action: data[0].prev_action,
                prev_sdm: SdmVector::zeros(),
            }],
        )
        .unwrap();
        assert_eq!(preds[0], first[0]);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(train_encoder(EncoderParams::init(0), &[], &TrainConfig::default()).is_err());
    }
}
