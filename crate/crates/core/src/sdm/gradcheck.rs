//! Central finite-difference check of the analytic encoder gradient.

use super::encoder::{loss_and_gradient, loss_only, ActionOneHot, EncoderParams, SdmSample};
use super::oracle::{SdmVector, NUM_NODES};
use crate::audio::{Spectrogram, SPECTROGRAM_LEN};
use crate::error::Result;
use crate::seed::{derive_seed, rng_from_seed, Stream};
use rand::Rng;

pub const FD_EPSILON: f64 = 1e-6;
/// Gradients smaller than this are compared in absolute terms: with a loss of
/// order 10 and the step above, the central difference carries roundoff of a
/// few 1e-9, which would dominate the relative error of tiny gradients.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct CoordinateCheck {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradientCheckReport {
    pub seed: u64,
    pub checks: Vec<CoordinateCheck>,
    /// Coordinates redrawn because the step straddled a ReLU kink.
    pub kinks_skipped: usize,
}

impl GradientCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.checks.iter().map(|c| c.relative_error).fold(0.0, f64::max)
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Random but valid teacher-forced samples.
pub fn random_samples<R: Rng>(n: usize, rng: &mut R) -> Vec<SdmSample> {
    (0..n)
        .map(|_| {
            let values = (0..SPECTROGRAM_LEN).map(|_| rng.random_range(0.0..3.0)).collect();
            let node = |rng: &mut R| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random_range(0.0..=1.0)
                }
            };
            SdmSample {
                spectrogram: Spectrogram::from_values(values).expect("valid spectrogram"),
                prev_action: ActionOneHot::index(rng.random_range(0..4)),
                prev_sdm: SdmVector(std::array::from_fn::<f64, NUM_NODES, _>(|_| node(rng))),
                target: SdmVector(std::array::from_fn::<f64, NUM_NODES, _>(|_| node(rng))),
            }
        })
        .collect()
}

/// One-sided derivatives that disagree by more than this (relative) mean a
/// ReLU kink lies within the step; the central difference is then not an
/// estimate of the derivative and the coordinate is redrawn.
pub const KINK_TOLERANCE: f64 = 1e-3;
const MAX_DRAWS_PER_COORDINATE: usize = 20;

/// Uniform offset added to every parameter before checking. Fresh parameters
/// have zero biases, which parks ReLUs fed by zero inputs exactly on their
/// kink, and a down-scaled head, which shrinks every upstream gradient.
const PARAM_JITTER: f64 = 0.05;

/// Checks `coords_per_tensor` random coordinates of every parameter tensor for
/// jittered fresh parameters and a random batch, all drawn from `seed`.
pub fn check_gradients(seed: u64, coords_per_tensor: usize, batch: usize) -> Result<GradientCheckReport> {
    let mut params = EncoderParams::init(derive_seed(seed, Stream::Init, 0));
    let mut rng = rng_from_seed(derive_seed(seed, Stream::GradientCheck, 0));
    for tensor in params.tensors_mut() {
        tensor.iter_mut().for_each(|v| *v += rng.random_range(-PARAM_JITTER..PARAM_JITTER));
    }
    let samples = random_samples(batch, &mut rng);
    let (base, grad) = loss_and_gradient(&params, &samples)?;
    let grads: Vec<(String, Vec<f64>)> = grad
        .tensors()
        .into_iter()
        .map(|t| (t.name, t.data.to_vec()))
        .collect();
    let mut checks = Vec::new();
    let mut kinks_skipped = 0;
    for (t, (name, g)) in grads.iter().enumerate() {
        for _ in 0..coords_per_tensor.min(g.len()) {
            for _ in 0..MAX_DRAWS_PER_COORDINATE {
                let index = rng.random_range(0..g.len());
                let original = params.tensors_mut()[t][index];
                params.tensors_mut()[t][index] = original + FD_EPSILON;
                let plus = loss_only(&params, &samples)?;
                params.tensors_mut()[t][index] = original - FD_EPSILON;
                let minus = loss_only(&params, &samples)?;
                params.tensors_mut()[t][index] = original;
                let forward = (plus - base) / FD_EPSILON;
                let backward = (base - minus) / FD_EPSILON;
                if relative_error(forward, backward) > KINK_TOLERANCE {
                    kinks_skipped += 1;
                    continue;
                }
                let numeric = (plus - minus) / (2.0 * FD_EPSILON);
                checks.push(CoordinateCheck {
                    tensor: name.clone(),
                    index,
                    analytic: g[index],
                    numeric,
                    relative_error: relative_error(g[index], numeric),
                });
                break;
            }
        }
    }
    Ok(GradientCheckReport {
        seed,
        checks,
        kinks_skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        for seed in 0..10 {
            let report = check_gradients(seed, 4, 2).unwrap();
            let worst = report
                .checks
                .iter()
                .max_by(|a, b| a.relative_error.total_cmp(&b.relative_error))
                .unwrap();
            eprintln!(
                "seed {seed}: max rel err {:e} ({} kinks skipped) at {worst:?}",
                report.max_relative_error(),
                report.kinks_skipped
            );
            assert_eq!(report.checks.len(), 4 * 24);
            assert!(report.max_relative_error() < 1e-4, "{worst:?}");
        }
    }

    #[test]
    fn relative_error_uses_floor_for_tiny_gradients() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!(relative_error(1e-9, 2e-9) < 1e-3);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
    }
}
