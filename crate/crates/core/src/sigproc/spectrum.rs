//! Hann-windowed periodogram and respiration peak quality.

use std::f64::consts::PI;
use std::io::Write;

use rustfft::FftPlanner;
use serde::Serialize;

use crate::physio::DisplacementTrace;
use crate::{Error, PathKind, Result, C64};

/// Prominence reported when the in-band median is exactly zero.
pub const PROMINENCE_CAP_DB: f64 = 300.0;
/// Bins on each side of the peak left out of the median.
pub const PEAK_GUARD_BINS: usize = 2;

/// One-sided power spectrum on `0..=rate/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    /// Spacing of the frequency grid.
    pub fn bin_width(&self) -> f64 {
        if self.freqs.len() < 2 {
            return 0.0;
        }
        self.freqs[1] - self.freqs[0]
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "freq_Hz,power")?;
        for (f, p) in self.freqs.iter().zip(&self.power) {
            writeln!(out, "{f},{p}")?;
        }
        Ok(())
    }

    fn band_indices(&self, band: (f64, f64)) -> Result<std::ops::Range<usize>> {
        let nyq = *self.freqs.last().unwrap_or(&0.0);
        if !(band.0 >= 0.0 && band.1 > band.0 && band.1 <= nyq + 1e-12) {
            return Err(crate::invalid(format!(
                "band [{}, {}] Hz must be increasing and within [0, {nyq}] Hz",
                band.0, band.1
            )));
        }
        let lo = self.freqs.partition_point(|f| *f < band.0 - 1e-12);
        let hi = self.freqs.partition_point(|f| *f <= band.1 + 1e-12);
        if lo >= hi {
            return Err(crate::invalid(format!("band [{}, {}] Hz contains no bins", band.0, band.1)));
        }
        Ok(lo..hi)
    }
}

pub fn write_displacement_csv<W: Write>(trace: &DisplacementTrace, mut out: W) -> std::io::Result<()> {
    writeln!(out, "time_s,displacement_m")?;
    for (l, d) in trace.samples().iter().enumerate() {
        writeln!(out, "{},{d}", l as f64 / trace.slow_rate())?;
    }
    Ok(())
}

/// Symmetric Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Mean-removed Hann periodogram zero-padded to `pad·L` points.
pub fn power_spectrum(d: &DisplacementTrace, pad: usize) -> Result<Spectrum> {
    if pad == 0 {
        return Err(crate::invalid("zero-padding factor must be >= 1"));
    }
    power_spectrum_nfft(d, pad * d.len())
}

/// Same as [`power_spectrum`] with an explicit FFT length `n_fft ≥ L`.
///
/// Normalized so that the bins sum to `Σ|x·w|²/L`: non-DC bins below
/// Nyquist carry both spectral halves.
pub fn power_spectrum_nfft(d: &DisplacementTrace, n_fft: usize) -> Result<Spectrum> {
    let l = d.len();
    if l < 8 {
        return Err(crate::invalid(format!("spectrum needs at least 8 samples, got {l}")));
    }
    if n_fft < l {
        return Err(crate::invalid(format!("FFT length {n_fft} shorter than trace length {l}")));
    }
    let mean = d.samples().iter().sum::<f64>() / l as f64;
    // residue of subtracting the mean from a constant is rounding noise
    let floor = 8.0 * f64::EPSILON * mean.abs();
    let w = hann(l);
    let mut buf = vec![C64::new(0.0, 0.0); n_fft];
    for (i, (x, wi)) in d.samples().iter().zip(&w).enumerate() {
        let c = x - mean;
        buf[i] = C64::new(if c.abs() <= floor { 0.0 } else { c * wi }, 0.0);
    }
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    let half = n_fft / 2;
    let norm = 1.0 / (n_fft as f64 * l as f64);
    let rate = d.slow_rate();
    let mut freqs = Vec::with_capacity(half + 1);
    let mut power = Vec::with_capacity(half + 1);
    for (k, z) in buf.iter().enumerate().take(half + 1) {
        let double = k != 0 && !(n_fft % 2 == 0 && k == half);
        freqs.push(k as f64 * rate / n_fft as f64);
        power.push(z.norm_sqr() * norm * if double { 2.0 } else { 1.0 });
    }
    Ok(Spectrum { freqs, power })
}

fn argmax_in(s: &Spectrum, range: std::ops::Range<usize>) -> usize {
    let mut best = range.start;
    for k in range {
        if s.power[k] > s.power[best] {
            best = k;
        }
    }
    best
}

/// Tallest in-band bin and its prominence over the in-band median
/// (bins within ±2 of the peak excluded).
pub fn peak_quality(s: &Spectrum, band: (f64, f64)) -> Result<(f64, f64)> {
    let range = s.band_indices(band)?;
    let k = argmax_in(s, range.clone());
    let mut rest: Vec<f64> = range
        .filter(|i| i.abs_diff(k) > PEAK_GUARD_BINS)
        .map(|i| s.power[i])
        .collect();
    if rest.is_empty() {
        return Err(crate::invalid("band too narrow to estimate a noise median"));
    }
    rest.sort_by(f64::total_cmp);
    let n = rest.len();
    let median = if n % 2 == 1 {
        rest[n / 2]
    } else {
        0.5 * (rest[n / 2 - 1] + rest[n / 2])
    };
    let peak = s.power[k];
    let prominence = if peak <= 0.0 {
        0.0
    } else if median <= 0.0 {
        PROMINENCE_CAP_DB
    } else {
        (10.0 * (peak / median).log10()).clamp(0.0, PROMINENCE_CAP_DB)
    };
    Ok((s.freqs[k], prominence))
}

/// Half-power width of the in-band peak, linearly interpolated between bins.
pub fn main_lobe_width(s: &Spectrum, band: (f64, f64)) -> Result<f64> {
    let range = s.band_indices(band)?;
    let k = argmax_in(s, range);
    let half = s.power[k] / 2.0;
    if half <= 0.0 {
        return Err(Error::InvalidParameter("spectrum has no peak".into()));
    }
    let cross = |i_in: usize, i_out: usize| {
        let (p_in, p_out) = (s.power[i_in], s.power[i_out]);
        let t = (p_in - half) / (p_in - p_out);
        s.freqs[i_in] + t * (s.freqs[i_out] - s.freqs[i_in])
    };
    let mut lo = k;
    while lo > 0 && s.power[lo - 1] > half {
        lo -= 1;
    }
    let left = if lo == 0 { s.freqs[0] } else { cross(lo, lo - 1) };
    let mut hi = k;
    while hi + 1 < s.power.len() && s.power[hi + 1] > half {
        hi += 1;
    }
    let right = if hi + 1 == s.power.len() {
        s.freqs[hi]
    } else {
        cross(hi, hi + 1)
    };
    Ok(right - left)
}

/// Per-path respiration estimate of one acquisition window.
#[derive(Debug, Clone, PartialEq)]
pub struct VitalSignEstimate {
    pub path: PathKind,
    pub displacement: DisplacementTrace,
    pub spectrum: Spectrum,
    pub peak_freq: f64,
    pub peak_prominence_db: f64,
}

impl VitalSignEstimate {
    pub fn from_trace(path: PathKind, displacement: DisplacementTrace, n_fft: usize, band: (f64, f64)) -> Result<Self> {
        let spectrum = power_spectrum_nfft(&displacement, n_fft)?;
        let (peak_freq, peak_prominence_db) = peak_quality(&spectrum, band)?;
        Ok(Self {
            path,
            displacement,
            spectrum,
            peak_freq,
            peak_prominence_db,
        })
    }
}
