use super::SAMPLE_RATE;
use crate::episode::SoundCategoryId;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

/// Samples in one loop of a sound category (1 s).
pub const LOOP_SAMPLES: usize = SAMPLE_RATE as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SoundKind {
    Sine,
    Noise,
    Chirp,
}

/// Parametric stand-in for a recorded sound: a 1 s loop that is active for
/// `active_duration` seconds and silent for the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundCategory {
    pub id: SoundCategoryId,
    pub kind: SoundKind,
    /// Hz; start frequency for chirps, unused for noise.
    #[serde(default)]
    pub frequency: f64,
    /// Hz; only used by chirps.
    #[serde(default)]
    pub frequency_end: f64,
    pub active_duration: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SoundCategory {
    pub fn validate(&self) -> Result<()> {
        let bad = |message: &str| {
            Err(Error::InvalidCategory {
                id: self.id,
                message: message.to_owned(),
            })
        };
        let nyquist = SAMPLE_RATE / 2.0;
        if !(self.active_duration > 0.0 && self.active_duration <= 1.0) {
            return bad("active_duration must be in (0, 1]");
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return bad("amplitude must be in (0, 1]");
        }
        match self.kind {
            SoundKind::Sine if !(self.frequency > 0.0 && self.frequency < nyquist) => {
                bad("frequency must be in (0, Nyquist)")
            }
            SoundKind::Chirp
                if !(self.frequency > 0.0
                    && self.frequency < nyquist
                    && self.frequency_end > 0.0
                    && self.frequency_end < nyquist) =>
            {
                bad("chirp frequencies must be in (0, Nyquist)")
            }
            _ => Ok(()),
        }
    }

    /// Number of leading non-silent samples in the loop.
    pub fn active_samples(&self) -> usize {
        ((self.active_duration * SAMPLE_RATE).round() as usize).clamp(1, LOOP_SAMPLES)
    }

    /// Synthesizes the 44,100-sample loop, scaled so that its peak magnitude
    /// equals `amplitude`.
    pub fn synth_waveform(&self) -> Vec<f64> {
        let n_active = self.active_samples();
        let mut out = vec![0.0; LOOP_SAMPLES];
        match self.kind {
            SoundKind::Sine => {
                for (n, x) in out[..n_active].iter_mut().enumerate() {
                    *x = (2.0 * PI * self.frequency * n as f64 / SAMPLE_RATE).sin();
                }
            }
            SoundKind::Noise => {
                let mut rng = rng_from_seed(self.seed ^ ((self.id as u64) << 32));
                for x in &mut out[..n_active] {
                    *x = rng.random_range(-1.0..=1.0);
                }
            }
            SoundKind::Chirp => {
                let dur = n_active as f64 / SAMPLE_RATE;
                let sweep = (self.frequency_end - self.frequency) / (2.0 * dur);
                for (n, x) in out[..n_active].iter_mut().enumerate() {
                    let t = n as f64 / SAMPLE_RATE;
                    *x = (2.0 * PI * (self.frequency * t + sweep * t * t)).sin();
                }
            }
        }
        let peak = out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if peak > 0.0 {
            for x in &mut out {
                *x = *x / peak * self.amplitude;
            }
        }
        out
    }
}

/// Parametric category sets for the loudness and duration experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoundSet {
    Default,
    Loud,
    Quiet,
    Long,
    Short,
}

impl std::str::FromStr for SoundSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "default" => SoundSet::Default,
            "loud" => SoundSet::Loud,
            "quiet" => SoundSet::Quiet,
            "long" => SoundSet::Long,
            "short" => SoundSet::Short,
            other => return Err(Error::InvalidArgument(format!("unknown sound set `{other}`"))),
        })
    }
}

/// Category records with their synthesized loops.
#[derive(Debug, Clone, Default)]
pub struct CategoryLibrary {
    entries: BTreeMap<SoundCategoryId, (SoundCategory, Arc<[f64]>)>,
}

impl CategoryLibrary {
    pub fn new(categories: Vec<SoundCategory>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for c in categories {
            c.validate()?;
            let wave: Arc<[f64]> = c.synth_waveform().into();
            if entries.insert(c.id, (c.clone(), wave)).is_some() {
                return Err(Error::InvalidCategory {
                    id: c.id,
                    message: "duplicate id".into(),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Eighteen categories: six each of tones, noise bursts and chirps.
    pub fn parametric(set: SoundSet) -> Self {
        let mut cats = Vec::with_capacity(18);
        for k in 0..18u32 {
            let kind = match k % 3 {
                0 => SoundKind::Sine,
                1 => SoundKind::Noise,
                _ => SoundKind::Chirp,
            };
            let step = (k / 3) as f64;
            let (amplitude, active_duration) = match set {
                SoundSet::Default => (0.4 + 0.1 * step, 1.0 - 0.1 * step),
                SoundSet::Loud => (1.0, 1.0 - 0.1 * step),
                SoundSet::Quiet => (0.1, 1.0 - 0.1 * step),
                SoundSet::Long => (0.4 + 0.1 * step, 1.0),
                SoundSet::Short => (0.4 + 0.1 * step, 0.2),
            };
            cats.push(SoundCategory {
                id: k,
                kind,
                frequency: 300.0 * (1.0 + step),
                frequency_end: 300.0 * (1.0 + step) * 3.0,
                active_duration,
                amplitude,
                seed: 1000 + k as u64,
            });
        }
        Self::new(cats).expect("parametric categories are valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let cats: Vec<&SoundCategory> = self.entries.values().map(|(c, _)| c).collect();
        serde_json::to_string_pretty(&cats).expect("categories serialize")
    }

    pub fn ids(&self) -> Vec<SoundCategoryId> {
        self.entries.keys().copied().collect()
    }

    pub fn category(&self, id: SoundCategoryId) -> Result<&SoundCategory> {
        self.entries
            .get(&id)
            .map(|(c, _)| c)
            .ok_or(Error::UnknownCategory(id))
    }

    pub fn waveform(&self, id: SoundCategoryId) -> Result<&[f64]> {
        self.entries
            .get(&id)
            .map(|(_, w)| &w[..])
            .ok_or(Error::UnknownCategory(id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(duration: f64) -> SoundCategory {
        SoundCategory {
            id: 0,
            kind: SoundKind::Sine,
            frequency: 861.33,
            frequency_end: 0.0,
            active_duration: duration,
            amplitude: 1.0,
            seed: 0,
        }
    }

    #[test]
    fn sine_peak_and_length() {
        let w = sine(1.0).synth_waveform();
        assert_eq!(w.len(), 44_100);
        assert_eq!(w.iter().fold(0.0f64, |m, x| m.max(x.abs())), 1.0);
    }

    #[test]
    fn short_envelope_is_silent_after_duration() {
        let w = sine(0.3).synth_waveform();
        assert!(w[13_230..].iter().all(|&x| x == 0.0));
        assert!(w[..13_230].iter().any(|&x| x != 0.0));
    }

    #[test]
    fn noise_is_deterministic() {
        let c = SoundCategory {
            kind: SoundKind::Noise,
            seed: 5,
            amplitude: 0.5,
            ..sine(1.0)
        };
        let a = c.synth_waveform();
        assert_eq!(a, c.synth_waveform());
        assert_eq!(a.iter().fold(0.0f64, |m, x| m.max(x.abs())), 0.5);
    }

    #[test]
    fn invalid_categories() {
        assert!(sine(0.0).validate().is_err());
        assert!(SoundCategory { amplitude: 1.5, ..sine(1.0) }.validate().is_err());
        assert!(SoundCategory { frequency: 30_000.0, ..sine(1.0) }.validate().is_err());
    }

    #[test]
    fn library_json_round_trip() {
        let lib = CategoryLibrary::parametric(SoundSet::Short);
        let back = CategoryLibrary::from_json(&lib.to_json()).unwrap();
        assert_eq!(back.ids(), lib.ids());
        assert_eq!(back.waveform(4).unwrap(), lib.waveform(4).unwrap());
        assert!(lib.waveform(99).is_err());
    }
}
