//! Welch power spectral density estimation.
//!
//! Averaged modified periodograms: Hann-tapered, mean-detrended,
//! overlapping sub-windows, zero-padded FFT, one-sided density scaling
//! (`sum(psd)·Δf` approximates the signal variance).

use crate::error::{Error, Result};
use rustfft::{num_complex::Complex, FftPlanner};

/// One-sided PSD of a single channel.
pub struct Psd {
    /// Power density per bin, length `nfft/2 + 1`.
    pub power: Vec<f64>,
    /// Bin spacing in Hz.
    pub delta_f: f64,
}

impl Psd {
    pub fn bin_freq(&self, k: usize) -> f64 {
        k as f64 * self.delta_f
    }

    /// Integral of the density over `[low, high)`.
    pub fn band_power(&self, low: f64, high: f64) -> f64 {
        self.power
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let f = self.bin_freq(*k);
                f >= low && f < high
            })
            .map(|(_, p)| p * self.delta_f)
            .sum()
    }

    /// Number of bins falling in `[low, high)`.
    pub fn bins_in_band(&self, low: f64, high: f64) -> usize {
        (0..self.power.len())
            .filter(|&k| {
                let f = self.bin_freq(k);
                f >= low && f < high
            })
            .count()
    }
}

/// FFT length for a sub-window: the next power of two covering both the
/// sub-window and one second of samples, so the band grid stays fine
/// enough for the narrow low-frequency bands.
pub fn pick_nfft(subwindow: usize, rate: f64) -> usize {
    let target = subwindow.max(rate.ceil() as usize);
    target.next_power_of_two()
}

/// Welch estimate over `x`. `overlap` is the sub-window overlap fraction
/// in `[0, 1)`.
pub fn welch_psd(x: &[f32], rate: f64, subwindow: usize, overlap: f64, nfft: usize) -> Result<Psd> {
    if subwindow < 2 {
        return Err(Error::Config(format!("welch sub-window of {subwindow} samples is too small")));
    }
    if x.len() < subwindow {
        return Err(Error::Config(format!(
            "welch sub-window ({subwindow}) longer than the data ({})",
            x.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Config(format!("welch overlap must be in [0,1), got {overlap}")));
    }
    if nfft < subwindow {
        return Err(Error::Config(format!("nfft {nfft} smaller than sub-window {subwindow}")));
    }

    // Periodic Hann taper.
    let window: Vec<f64> = (0..subwindow)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / subwindow as f64).cos()))
        .collect();
    let win_power: f64 = window.iter().map(|w| w * w).sum();

    let step = ((subwindow as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);

    let half = nfft / 2;
    let mut acc = vec![0.0f64; half + 1];
    let mut segments = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); nfft];
    let mut start = 0usize;
    while start + subwindow <= x.len() {
        let seg = &x[start..start + subwindow];
        let mean = seg.iter().map(|&v| v as f64).sum::<f64>() / subwindow as f64;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = if i < subwindow {
                Complex::new((seg[i] as f64 - mean) * window[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        for k in 0..=half {
            acc[k] += buf[k].norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let scale = 1.0 / (segments as f64 * rate * win_power);
    let mut power: Vec<f64> = acc.iter().map(|p| p * scale).collect();
    for k in 1..half {
        power[k] *= 2.0;
    }
    if nfft % 2 != 0 && half >= 1 {
        power[half] *= 2.0;
    }
    Ok(Psd { power, delta_f: rate / nfft as f64 })
}
