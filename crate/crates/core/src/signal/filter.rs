//! Butterworth bandpass design (bilinear transform, second-order sections)
//! and zero-phase forward-backward filtering.
//!
//! The design path mirrors the classic zpk flow: analog lowpass prototype,
//! lowpass→bandpass transform, bilinear transform, then pairing of
//! conjugate poles into biquads. All design math runs in double precision.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct C64 {
    re: f64,
    im: f64,
}

impl C64 {
    fn new(re: f64, im: f64) -> Self {
        C64 { re, im }
    }

    fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    fn add(self, o: C64) -> Self {
        C64::new(self.re + o.re, self.im + o.im)
    }

    fn sub(self, o: C64) -> Self {
        C64::new(self.re - o.re, self.im - o.im)
    }

    fn mul(self, o: C64) -> Self {
        C64::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    fn div(self, o: C64) -> Self {
        let d = o.re * o.re + o.im * o.im;
        C64::new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
    }

    fn scale(self, s: f64) -> Self {
        C64::new(self.re * s, self.im * s)
    }

    fn sqrt(self) -> Self {
        let r = self.abs();
        let re = ((r + self.re) / 2.0).max(0.0).sqrt();
        let im = ((r - self.re) / 2.0).max(0.0).sqrt();
        C64::new(re, if self.im >= 0.0 { im } else { -im })
    }
}

/// One normalized biquad: `y = b0·x + b1·x⁻¹ + b2·x⁻² − a1·y⁻¹ − a2·y⁻²`.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

/// Cascade of second-order sections.
#[derive(Debug, Clone)]
pub struct SosFilter {
    sections: Vec<Biquad>,
}

impl SosFilter {
    /// Butterworth bandpass of prototype order `order` (so 2·order poles)
    /// with passband `[low_hz, high_hz]` at `rate` Hz.
    pub fn bandpass(order: usize, low_hz: f64, high_hz: f64, rate: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("filter order must be at least 1".into()));
        }
        if !(0.0 < low_hz && low_hz < high_hz) {
            return Err(Error::Config(format!(
                "bandpass edges must satisfy 0 < low < high, got {low_hz}..{high_hz}"
            )));
        }
        if high_hz >= rate / 2.0 {
            return Err(Error::Config(format!(
                "bandpass high edge {high_hz} Hz must stay below Nyquist ({} Hz)",
                rate / 2.0
            )));
        }

        // Analog Butterworth prototype: poles on the unit circle, left half plane.
        let n = order as i64;
        let mut poles: Vec<C64> = Vec::with_capacity(order);
        let mut m = -n + 1;
        while m < n {
            let theta = std::f64::consts::PI * m as f64 / (2.0 * n as f64);
            poles.push(C64::new(-theta.cos(), -theta.sin()));
            m += 2;
        }
        let mut gain = 1.0f64;

        // Pre-warp the band edges (internal rate 2).
        let fs = 2.0f64;
        let warp = |f: f64| 2.0 * fs * (std::f64::consts::PI * (f / (rate / 2.0)) / fs).tan();
        let (w1, w2) = (warp(low_hz), warp(high_hz));
        let bw = w2 - w1;
        let wo = (w1 * w2).sqrt();

        // Lowpass → bandpass: each pole splits into two, zeros appear at s=0.
        let mut bp_poles: Vec<C64> = Vec::with_capacity(2 * order);
        for p in poles.drain(..) {
            let ps = p.scale(bw / 2.0);
            let disc = ps.mul(ps).sub(C64::new(wo * wo, 0.0)).sqrt();
            bp_poles.push(ps.add(disc));
            bp_poles.push(ps.sub(disc));
        }
        gain *= bw.powi(order as i32);
        let mut bp_zeros: Vec<C64> = vec![C64::new(0.0, 0.0); order];

        // Bilinear transform to the z plane.
        let two_fs = C64::new(2.0 * fs, 0.0);
        let mut num = C64::new(1.0, 0.0);
        let mut den = C64::new(1.0, 0.0);
        for z in &mut bp_zeros {
            num = num.mul(two_fs.sub(*z));
            *z = two_fs.add(*z).div(two_fs.sub(*z));
        }
        for p in &mut bp_poles {
            den = den.mul(two_fs.sub(*p));
            *p = two_fs.add(*p).div(two_fs.sub(*p));
        }
        gain *= num.div(den).re;
        // Balance the degree with zeros at z = -1.
        bp_zeros.resize(2 * order, C64::new(-1.0, 0.0));

        for p in &bp_poles {
            if p.abs() >= 1.0 {
                return Err(Error::Numeric(format!(
                    "filter design produced an unstable section (|pole| = {})",
                    p.abs()
                )));
            }
        }

        // Pair poles into real-coefficient sections. Complex poles pair with
        // their conjugates; real poles pair among themselves.
        let tol = 1e-12;
        let mut upper: Vec<C64> = bp_poles.iter().copied().filter(|p| p.im > tol).collect();
        let mut reals: Vec<f64> =
            bp_poles.iter().filter(|p| p.im.abs() <= tol).map(|p| p.re).collect();
        upper.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
        reals.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut denoms: Vec<[f64; 2]> = Vec::with_capacity(order);
        for p in upper {
            denoms.push([-2.0 * p.re, p.re * p.re + p.im * p.im]);
        }
        for pair in reals.chunks(2) {
            match pair {
                [r1, r2] => denoms.push([-(r1 + r2), r1 * r2]),
                [r] => denoms.push([-r, 0.0]),
                _ => unreachable!(),
            }
        }

        // Every section carries one zero at +1 and one at -1, so the
        // numerator is (1 - z⁻²); gain spreads evenly across sections.
        let per_section = gain.abs().powf(1.0 / denoms.len() as f64);
        let mut sections: Vec<Biquad> = denoms
            .iter()
            .map(|a| Biquad { b: [per_section, 0.0, -per_section], a: *a })
            .collect();
        if gain < 0.0 {
            for b in &mut sections[0].b {
                *b = -*b;
            }
        }
        Ok(SosFilter { sections })
    }

    pub fn num_sections(&self) -> usize {
        self.sections.len()
    }

    /// Single forward pass (direct form II transposed), with optional
    /// steady-state initial conditions scaled to `x0`.
    fn sosfilt(&self, x: &mut [f64], x0: f64) {
        // Steady-state state vector per section for a unit step, cascaded
        // through the DC gains of the preceding sections.
        let mut level = x0;
        let mut states: Vec<[f64; 2]> = Vec::with_capacity(self.sections.len());
        for s in &self.sections {
            let denom = 1.0 + s.a[0] + s.a[1];
            let h_dc = if denom.abs() > 1e-300 { (s.b[0] + s.b[1] + s.b[2]) / denom } else { 0.0 };
            let z2 = s.b[2] - s.a[1] * h_dc;
            let z1 = s.b[1] - s.a[0] * h_dc + z2;
            states.push([z1 * level, z2 * level]);
            level *= h_dc;
        }
        for (s, z) in self.sections.iter().zip(states.iter_mut()) {
            for v in x.iter_mut() {
                let xin = *v;
                let y = s.b[0] * xin + z[0];
                z[0] = s.b[1] * xin - s.a[0] * y + z[1];
                z[1] = s.b[2] * xin - s.a[1] * y;
                *v = y;
            }
        }
    }

    /// Zero-phase forward-backward filtering with odd-reflection padding.
    pub fn filtfilt(&self, x: &[f32]) -> Result<Vec<f32>> {
        let padlen = 3 * (2 * self.sections.len() + 1);
        if x.len() <= padlen {
            return Err(Error::Config(format!(
                "signal of {} samples is too short to filter (needs > {padlen})",
                x.len()
            )));
        }
        let n = x.len();
        let mut ext: Vec<f64> = Vec::with_capacity(n + 2 * padlen);
        let first = x[0] as f64;
        let last = x[n - 1] as f64;
        for i in (1..=padlen).rev() {
            ext.push(2.0 * first - x[i] as f64);
        }
        ext.extend(x.iter().map(|&v| v as f64));
        for i in 1..=padlen {
            ext.push(2.0 * last - x[n - 1 - i] as f64);
        }

        let x0 = ext[0];
        self.sosfilt(&mut ext, x0);
        ext.reverse();
        let x0 = ext[0];
        self.sosfilt(&mut ext, x0);
        ext.reverse();

        let out: Vec<f32> = ext[padlen..padlen + n].iter().map(|&v| v as f32).collect();
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("filtfilt produced a non-finite value".into()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Amplitude of the DFT projection at an exact bin frequency.
    fn tone_amplitude(x: &[f64], freq: f64, rate: f64) -> f64 {
        let n = x.len() as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, &v) in x.iter().enumerate() {
            let phase = 2.0 * std::f64::consts::PI * freq * i as f64 / rate;
            re += v * phase.cos();
            im += v * phase.sin();
        }
        2.0 * (re * re + im * im).sqrt() / n
    }

    fn sine(freq: f64, rate: f64, n: usize) -> Vec<f32> {
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate).sin() as f32)
            .collect()
    }

    #[test]
    fn passband_tone_is_preserved() {
        let rate = 200.0;
        let f = SosFilter::bandpass(4, 0.5, 48.0, rate).unwrap();
        let x = sine(10.0, rate, 4096);
        let y = f.filtfilt(&x).unwrap();
        let y64: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let amp = tone_amplitude(&y64, 10.0, rate);
        assert!((amp - 1.0).abs() < 0.02, "10 Hz amplitude after filtering: {amp}");
    }

    #[test]
    fn slow_drift_is_attenuated() {
        let rate = 200.0;
        let n = 8192;
        let f = SosFilter::bandpass(4, 0.5, 48.0, rate).unwrap();
        // exact-bin drift frequency near 0.05 Hz
        let drift_freq = 2.0 * rate / n as f64; // ≈ 0.0488 Hz
        let x = sine(drift_freq, rate, n);
        let y = f.filtfilt(&x).unwrap();
        let y64: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let amp = tone_amplitude(&y64, drift_freq, rate);
        assert!(amp < 0.1, "drift must lose ≥ 20 dB, kept amplitude {amp}");
    }

    #[test]
    fn dc_is_rejected() {
        let rate = 200.0;
        let f = SosFilter::bandpass(4, 0.5, 48.0, rate).unwrap();
        let x = vec![1.0f32; 2048];
        let y = f.filtfilt(&x).unwrap();
        let max = y.iter().fold(0.0f32, |m, v| m.max(v.abs()));
        assert!(max < 1e-3, "DC leaked through: {max}");
    }

    #[test]
    fn band_above_nyquist_is_rejected() {
        assert!(matches!(
            SosFilter::bandpass(4, 0.5, 120.0, 200.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn filtering_is_linear() {
        let rate = 200.0;
        let f = SosFilter::bandpass(4, 0.5, 48.0, rate).unwrap();
        let x: Vec<f32> = (0..1024)
            .map(|i| {
                let t = i as f64 / rate;
                ((2.0 * std::f64::consts::PI * 7.0 * t).sin()
                    + 0.3 * (2.0 * std::f64::consts::PI * 23.0 * t).cos()) as f32
            })
            .collect();
        let scaled: Vec<f32> = x.iter().map(|v| v * 2.5).collect();
        let y1 = f.filtfilt(&x).unwrap();
        let y2 = f.filtfilt(&scaled).unwrap();
        for (a, b) in y1.iter().zip(&y2) {
            assert!((a * 2.5 - b).abs() < 1e-5);
        }
    }

    #[test]
    fn odd_prototype_order_designs_cleanly() {
        // order 3 exercises the real-pole pairing path for this wide band
        let f = SosFilter::bandpass(3, 0.5, 48.0, 200.0).unwrap();
        assert_eq!(f.num_sections(), 3);
        let x = sine(10.0, 200.0, 4096);
        let y = f.filtfilt(&x).unwrap();
        let y64: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let amp = tone_amplitude(&y64, 10.0, 200.0);
        assert!((amp - 1.0).abs() < 0.02, "order-3 design passband amplitude {amp}");
    }
}
