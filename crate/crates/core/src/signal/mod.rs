//! Raw multichannel recordings → differential-entropy feature tensors.
//!
//! Pipeline order: common average reference, Butterworth bandpass
//! (zero-phase), segmentation into windows, Welch PSD per window, then
//! per-band differential entropy `DE = ½·ln(2πe·σ²)` in nats.

pub mod filter;
pub mod welch;

use crate::error::{Error, Result};
use filter::SosFilter;
use welch::{pick_nfft, welch_psd};

/// Variance floor applied before the log so silent bands yield a finite
/// (flagged) DE instead of −∞.
pub const VARIANCE_FLOOR: f64 = 1e-10;

/// A multichannel time series with its trial metadata.
#[derive(Debug, Clone)]
pub struct RawRecording {
    pub sample_rate: f64,
    pub channels: usize,
    pub samples: usize,
    /// Channel-major data: `data[c * samples + t]`.
    pub data: Vec<f32>,
    pub trial_id: u32,
    pub label: usize,
    /// Generator-side emotional intensity; 1.0 for real data.
    pub intensity: f32,
}

impl RawRecording {
    pub fn new(
        sample_rate: f64,
        channels: usize,
        samples: usize,
        data: Vec<f32>,
        trial_id: u32,
        label: usize,
    ) -> Result<Self> {
        if sample_rate <= 0.0 {
            return Err(Error::Config(format!("sample rate must be positive, got {sample_rate}")));
        }
        if channels * samples != data.len() {
            return Err(Error::Shape(format!(
                "{channels} channels × {samples} samples ≠ {} data points",
                data.len()
            )));
        }
        Ok(RawRecording { sample_rate, channels, samples, data, trial_id, label, intensity: 1.0 })
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        &self.data[c * self.samples..(c + 1) * self.samples]
    }
}

/// A named frequency band `[low, high)` in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    pub name: String,
    pub low: f64,
    pub high: f64,
}

impl BandSpec {
    pub fn new(name: &str, low: f64, high: f64) -> Self {
        BandSpec { name: name.into(), low, high }
    }

    pub fn validate(&self, nyquist: f64) -> Result<()> {
        if !(0.0 < self.low && self.low < self.high && self.high <= nyquist) {
            return Err(Error::Config(format!(
                "band {} ({}..{} Hz) must satisfy 0 < low < high ≤ {nyquist}",
                self.name, self.low, self.high
            )));
        }
        Ok(())
    }
}

/// The five standard EEG bands: δ, θ, α, β, γ.
pub fn default_bands() -> Vec<BandSpec> {
    vec![
        BandSpec::new("delta", 0.5, 4.0),
        BandSpec::new("theta", 4.0, 8.0),
        BandSpec::new("alpha", 8.0, 13.0),
        BandSpec::new("beta", 13.0, 30.0),
        BandSpec::new("gamma", 30.0, 48.0),
    ]
}

/// Preprocessing and feature-extraction settings.
#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub bandpass_low: f64,
    pub bandpass_high: f64,
    pub filter_order: usize,
    pub window_seconds: f64,
    pub segment_seconds: f64,
    /// Welch sub-window in samples; `None` picks half the analysis window.
    pub welch_subwindow: Option<usize>,
    pub welch_overlap: f64,
    pub bands: Vec<BandSpec>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            bandpass_low: 0.5,
            bandpass_high: 48.0,
            filter_order: 4,
            window_seconds: 0.5,
            segment_seconds: 3.0,
            welch_subwindow: None,
            welch_overlap: 0.5,
            bands: default_bands(),
        }
    }
}

impl PreprocessConfig {
    /// Samples per analysis window at the given rate.
    pub fn window_samples(&self, rate: f64) -> Result<usize> {
        let exact = self.window_seconds * rate;
        let rounded = exact.round();
        if (exact - rounded).abs() > 1e-6 || rounded < 1.0 {
            return Err(Error::Config(format!(
                "window of {}s at {rate} Hz is not a whole number of samples",
                self.window_seconds
            )));
        }
        Ok(rounded as usize)
    }

    /// Windows per segment; errors unless the segment is an integer
    /// multiple of the window.
    pub fn windows_per_segment(&self) -> Result<usize> {
        let ratio = self.segment_seconds / self.window_seconds;
        let rounded = ratio.round();
        if (ratio - rounded).abs() > 1e-9 || rounded < 1.0 {
            return Err(Error::Config(format!(
                "segment ({}s) must be an integer multiple of the window ({}s)",
                self.segment_seconds, self.window_seconds
            )));
        }
        Ok(rounded as usize)
    }

    pub fn effective_subwindow(&self, rate: f64) -> Result<usize> {
        match self.welch_subwindow {
            Some(n) => Ok(n),
            None => Ok((self.window_samples(rate)? / 2).max(2)),
        }
    }

    pub fn validate(&self, rate: f64) -> Result<()> {
        if self.bandpass_high >= rate / 2.0 {
            return Err(Error::Config(format!(
                "bandpass high edge {} Hz must stay below Nyquist ({} Hz)",
                self.bandpass_high,
                rate / 2.0
            )));
        }
        if !(0.0..1.0).contains(&self.welch_overlap) {
            return Err(Error::Config(format!(
                "welch overlap must be in [0,1), got {}",
                self.welch_overlap
            )));
        }
        if self.bands.is_empty() {
            return Err(Error::Config("at least one frequency band is required".into()));
        }
        for b in &self.bands {
            b.validate(rate / 2.0)?;
        }
        self.window_samples(rate)?;
        self.windows_per_segment()?;
        // every band must own at least one PSD bin
        let nfft = pick_nfft(self.effective_subwindow(rate)?, rate);
        let delta_f = rate / nfft as f64;
        for b in &self.bands {
            let bins = (0..=nfft / 2)
                .filter(|&k| {
                    let f = k as f64 * delta_f;
                    f >= b.low && f < b.high
                })
                .count();
            if bins == 0 {
                return Err(Error::Config(format!(
                    "band {} ({}..{} Hz) contains no PSD bin at Δf = {delta_f} Hz",
                    b.name, b.low, b.high
                )));
            }
        }
        Ok(())
    }
}

/// DE features of one segment: 𝒯 windows × C channels × B bands.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSegment {
    pub windows: usize,
    pub channels: usize,
    pub bands: usize,
    /// Window-major, then channel, then band: `features[(t*C + c)*B + b]`.
    pub features: Vec<f32>,
    pub label: usize,
    pub trial_id: u32,
    pub intensity: f32,
}

impl FeatureSegment {
    pub fn get(&self, t: usize, c: usize, b: usize) -> f32 {
        self.features[(t * self.channels + c) * self.bands + b]
    }
}

/// Subtract the cross-channel mean at every time step.
pub fn common_average_reference(rec: &RawRecording) -> Result<RawRecording> {
    if rec.channels < 2 {
        return Err(Error::Config(
            "common average reference needs at least 2 channels".into(),
        ));
    }
    let mut out = rec.clone();
    for t in 0..rec.samples {
        let mut mean = 0.0f64;
        for c in 0..rec.channels {
            mean += rec.data[c * rec.samples + t] as f64;
        }
        mean /= rec.channels as f64;
        for c in 0..rec.channels {
            out.data[c * rec.samples + t] = (rec.data[c * rec.samples + t] as f64 - mean) as f32;
        }
    }
    Ok(out)
}

/// Zero-phase Butterworth bandpass applied per channel.
pub fn butterworth_bandpass(rec: &RawRecording, cfg: &PreprocessConfig) -> Result<RawRecording> {
    let sos =
        SosFilter::bandpass(cfg.filter_order, cfg.bandpass_low, cfg.bandpass_high, rec.sample_rate)?;
    let mut out = rec.clone();
    for c in 0..rec.channels {
        let filtered = sos.filtfilt(rec.channel(c))?;
        out.data[c * rec.samples..(c + 1) * rec.samples].copy_from_slice(&filtered);
    }
    Ok(out)
}

/// Sample spans of one segment: 𝒯 contiguous non-overlapping windows.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSpan {
    pub start: usize,
    pub window_len: usize,
    pub window_starts: Vec<usize>,
}

/// Cut the recording into non-overlapping segments of 𝒯 windows each,
/// dropping any trailing remainder. A recording shorter than one segment
/// yields an empty list.
pub fn segment_windows(rec: &RawRecording, cfg: &PreprocessConfig) -> Result<Vec<SegmentSpan>> {
    let window_len = cfg.window_samples(rec.sample_rate)?;
    let per_segment = cfg.windows_per_segment()?;
    let seg_len = window_len * per_segment;
    let count = rec.samples / seg_len;
    Ok((0..count)
        .map(|i| {
            let start = i * seg_len;
            SegmentSpan {
                start,
                window_len,
                window_starts: (0..per_segment).map(|w| start + w * window_len).collect(),
            }
        })
        .collect())
}

/// Per-band differential entropy from a one-sided PSD. Returns the DE row
/// and whether any band hit the variance floor.
pub fn differential_entropy(psd: &welch::Psd, bands: &[BandSpec]) -> Result<(Vec<f32>, bool)> {
    let mut out = Vec::with_capacity(bands.len());
    let mut floored = false;
    for band in bands {
        if psd.bins_in_band(band.low, band.high) == 0 {
            return Err(Error::Config(format!(
                "band {} ({}..{} Hz) contains no PSD bin",
                band.name, band.low, band.high
            )));
        }
        let mut variance = psd.band_power(band.low, band.high);
        if variance < VARIANCE_FLOOR {
            variance = VARIANCE_FLOOR;
            floored = true;
        }
        let de = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * variance).ln();
        out.push(de as f32);
    }
    Ok((out, floored))
}

/// Output of [`extract_features`].
pub struct FeatureExtraction {
    pub segments: Vec<FeatureSegment>,
    /// Count of (window, channel) PSD rows with at least one floored band.
    pub floored_bands: usize,
}

/// Full pipeline: reference, filter, segment, Welch, DE.
pub fn extract_features(rec: &RawRecording, cfg: &PreprocessConfig) -> Result<FeatureExtraction> {
    cfg.validate(rec.sample_rate)?;
    let referenced = common_average_reference(rec)?;
    let filtered = butterworth_bandpass(&referenced, cfg)?;
    let spans = segment_windows(&filtered, cfg)?;

    let subwindow = cfg.effective_subwindow(rec.sample_rate)?;
    let nfft = pick_nfft(subwindow, rec.sample_rate);
    let n_bands = cfg.bands.len();
    let mut floored_bands = 0usize;
    let mut segments = Vec::with_capacity(spans.len());
    for span in &spans {
        let per_segment = span.window_starts.len();
        let mut features = vec![0.0f32; per_segment * filtered.channels * n_bands];
        for (t, &wstart) in span.window_starts.iter().enumerate() {
            for c in 0..filtered.channels {
                let window = &filtered.channel(c)[wstart..wstart + span.window_len];
                let psd = welch_psd(window, rec.sample_rate, subwindow, cfg.welch_overlap, nfft)?;
                let (de, floored) = differential_entropy(&psd, &cfg.bands)?;
                if floored {
                    floored_bands += 1;
                }
                let base = (t * filtered.channels + c) * n_bands;
                features[base..base + n_bands].copy_from_slice(&de);
            }
        }
        if !features.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite DE feature".into()));
        }
        segments.push(FeatureSegment {
            windows: per_segment,
            channels: filtered.channels,
            bands: n_bands,
            features,
            label: rec.label,
            trial_id: rec.trial_id,
            intensity: rec.intensity,
        });
    }
    Ok(FeatureExtraction { segments, floored_bands })
}
