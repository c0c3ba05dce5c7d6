//! Synthetic EEG-like recordings with controllable emotional intensity.
//!
//! Each class gets a signature: band-limited oscillatory power (three
//! tones of known total power) on a class-specific channel subset inside
//! a class-specific frequency band. A trial's signal is
//! `intensity · signature + N(0, noise_std²)`, and the intensity rides
//! along in the metadata so difficulty–intensity relationships stay
//! testable downstream.

use crate::error::{Error, Result};
use crate::signal::{default_bands, BandSpec, RawRecording};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Total oscillatory power of a class signature at intensity 1.
pub const SIGNATURE_POWER: f64 = 1.0;

const TONES_PER_SIGNATURE: usize = 3;

/// Generator settings.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub channels: usize,
    pub sample_rate: f64,
    pub trials_per_class: usize,
    pub trial_seconds: f64,
    /// Cycled over the trials of each class.
    pub intensities: Vec<f32>,
    pub noise_std: f32,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: 3,
            channels: 8,
            sample_rate: 200.0,
            trials_per_class: 10,
            trial_seconds: 6.0,
            intensities: vec![0.9],
            noise_std: 1.0,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Config("at least 2 classes required".into()));
        }
        if self.channels < self.classes {
            return Err(Error::Config(format!(
                "{} channels cannot host {} class signatures",
                self.channels, self.classes
            )));
        }
        if self.sample_rate <= 0.0 || self.trial_seconds <= 0.0 {
            return Err(Error::Config("sample rate and trial length must be positive".into()));
        }
        if self.trials_per_class == 0 {
            return Err(Error::Config("at least one trial per class required".into()));
        }
        if self.intensities.is_empty()
            || self.intensities.iter().any(|&i| !(0.0 < i && i <= 1.0))
        {
            return Err(Error::Config("intensities must lie in (0, 1]".into()));
        }
        if self.noise_std < 0.0 {
            return Err(Error::Config("noise std must be non-negative".into()));
        }
        Ok(())
    }

    /// Band carrying the signature of `class`.
    pub fn class_band(&self, class: usize) -> BandSpec {
        let bands = default_bands();
        bands[class % bands.len()].clone()
    }

    /// Channels carrying the signature of `class`.
    pub fn class_channels(&self, class: usize) -> Vec<usize> {
        (0..self.channels).filter(|ch| ch % self.classes == class).collect()
    }

    /// Tone frequencies of a class signature, strictly inside its band.
    pub fn class_tones(&self, class: usize) -> Vec<f64> {
        let band = self.class_band(class);
        (0..TONES_PER_SIGNATURE)
            .map(|j| band.low + (j + 1) as f64 * (band.high - band.low) / (TONES_PER_SIGNATURE + 1) as f64)
            .collect()
    }
}

fn splitmix64(mut state: u64) -> u64 {
    state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generate all trials: `classes × trials_per_class` recordings with
/// globally unique trial ids, deterministic in the seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<RawRecording>> {
    spec.validate()?;
    let samples = (spec.trial_seconds * spec.sample_rate).round() as usize;
    let amplitude = (2.0 * SIGNATURE_POWER / TONES_PER_SIGNATURE as f64).sqrt();
    let mut recordings = Vec::with_capacity(spec.classes * spec.trials_per_class);
    let mut trial_id = 0u32;
    for class in 0..spec.classes {
        let tones = spec.class_tones(class);
        let marked = spec.class_channels(class);
        for trial in 0..spec.trials_per_class {
            let intensity = spec.intensities[trial % spec.intensities.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(
                spec.seed ^ splitmix64(trial_id as u64 + 1),
            ));
            let phases: Vec<f64> =
                tones.iter().map(|_| rng.gen_range(0.0..2.0 * std::f64::consts::PI)).collect();
            let mut signature = vec![0.0f64; samples];
            for (tone, phase) in tones.iter().zip(&phases) {
                for (t, slot) in signature.iter_mut().enumerate() {
                    let arg = 2.0 * std::f64::consts::PI * tone * t as f64 / spec.sample_rate
                        + phase;
                    *slot += amplitude * arg.sin();
                }
            }
            let mut data = vec![0.0f32; spec.channels * samples];
            for ch in 0..spec.channels {
                let carries = marked.contains(&ch);
                for t in 0..samples {
                    let noise: f64 =
                        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                    let mut v = spec.noise_std as f64 * noise;
                    if carries {
                        v += intensity as f64 * signature[t];
                    }
                    data[ch * samples + t] = v as f32;
                }
            }
            let mut rec =
                RawRecording::new(spec.sample_rate, spec.channels, samples, data, trial_id, class)?;
            rec.intensity = intensity;
            recordings.push(rec);
            trial_id += 1;
        }
    }
    Ok(recordings)
}
