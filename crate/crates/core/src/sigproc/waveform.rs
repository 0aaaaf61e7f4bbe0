//! Pulsed sinusoid and the per-pulse matched filter.
//!
//! The pulse is represented at an intermediate frequency `f0 < fs/2`; the
//! carrier itself only enters through the wavelength used for phases.

use std::f64::consts::PI;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    f0: f64,
    fs: f64,
    samples: Vec<C64>,
    energy: f64,
}

impl Waveform {
    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `‖s‖²`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn pulse_duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }
}

/// `s[k] = √2·cos(2π f0 k / fs)`.
pub fn make_waveform(f0: f64, fs: f64, k_fast: usize) -> Result<Waveform> {
    if !(fs > 0.0) || k_fast == 0 {
        return Err(crate::invalid("waveform needs fs > 0 and at least one sample"));
    }
    if !(f0 > 0.0 && f0 < fs / 2.0) {
        return Err(Error::Nyquist { freq: f0, rate: fs });
    }
    let samples: Vec<C64> = (0..k_fast)
        .map(|k| C64::new(2f64.sqrt() * (2.0 * PI * f0 * k as f64 / fs).cos(), 0.0))
        .collect();
    let energy = samples.iter().map(|z| z.norm_sqr()).sum();
    Ok(Waveform {
        f0,
        fs,
        samples,
        energy,
    })
}

/// `Σ y[k]·conj(s[k]) / ‖s‖²`: returns `c` for `y = c·s`.
pub fn matched_filter(y: &[C64], s: &Waveform) -> Result<C64> {
    if y.len() != s.samples.len() {
        return Err(Error::ShapeMismatch(format!(
            "fast-time row has {} samples, waveform {}",
            y.len(),
            s.samples.len()
        )));
    }
    let acc: C64 = y.iter().zip(&s.samples).map(|(a, b)| a * b.conj()).sum();
    Ok(acc / s.energy)
}
