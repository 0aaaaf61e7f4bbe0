//! Chest displacement traces and the angle-dependent chest reflectivity.
//!
//! The echo of each path is `q·exp(j(4π/λ)·d_eff[l])`: a constant
//! reflectivity magnitude with the (two-way) displacement phase. The aspect
//! angle scales the displacement seen by the path (`d_eff = g(θ)·d`), and an
//! optional band-limited jitter models the distortion of side-on traces.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::rng::{indexed_stream, stream, Stream};
use crate::{Error, PathKind, Result, C64};

pub const FRONT_COLUMN: &str = "front_radar_VS";
pub const SIDE_COLUMN: &str = "side_radar_VS";

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementTrace {
    samples: Vec<f64>,
    slow_rate: f64,
    label: String,
}

impl DisplacementTrace {
    pub fn new(samples: Vec<f64>, slow_rate: f64, label: impl Into<String>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(crate::invalid(format!("trace needs at least 2 samples, got {}", samples.len())));
        }
        if !(slow_rate > 0.0 && slow_rate.is_finite()) {
            return Err(crate::invalid(format!("slow-time rate {slow_rate} must be > 0")));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(crate::invalid(format!("trace sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            slow_rate,
            label: label.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn slow_rate(&self) -> f64 {
        self.slow_rate
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.slow_rate
    }

    /// `[start, start+len)`, e.g. one loop window of a long trace.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.samples.len() {
            return Err(crate::invalid(format!(
                "window [{start}, {}) exceeds trace length {}",
                start + len,
                self.samples.len()
            )));
        }
        Self::new(self.samples[start..start + len].to_vec(), self.slow_rate, self.label.clone())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn peak_to_peak(&self) -> f64 {
        let max = self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.samples.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Parameters of the synthetic breathing stand-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BreathingParams {
    /// Breathing rate in Hz.
    #[serde(with = "crate::units::frequency")]
    pub rate: f64,
    /// Peak-to-peak chest excursion in meters.
    #[serde(with = "crate::units::length")]
    pub peak_to_peak: f64,
    /// Number of extra harmonics (2f, 3f, ...).
    pub harmonics: usize,
    /// Upper bound of each harmonic amplitude relative to the fundamental (≤ 0.1).
    pub harmonic_level: f64,
    /// Linear baseline drift in m/s.
    #[serde(with = "crate::units::velocity")]
    pub drift: f64,
}

impl Default for BreathingParams {
    fn default() -> Self {
        Self {
            rate: 0.133,
            peak_to_peak: 0.02,
            harmonics: 0,
            harmonic_level: 0.1,
            drift: 0.0,
        }
    }
}

/// Sinusoidal breathing with optional random-phase harmonics and drift.
pub fn synth_respiration(p: &BreathingParams, duration: f64, slow_rate: f64, seed: u64) -> Result<DisplacementTrace> {
    if !(slow_rate > 0.0) {
        return Err(crate::invalid(format!("slow-time rate {slow_rate} must be > 0")));
    }
    if !(p.rate > 0.0 && p.rate < slow_rate / 2.0) {
        return Err(Error::Nyquist {
            freq: p.rate,
            rate: slow_rate,
        });
    }
    if !(0.0..=0.1).contains(&p.harmonic_level) {
        return Err(crate::invalid(format!("harmonic level {} outside [0, 0.1]", p.harmonic_level)));
    }
    if !(p.peak_to_peak >= 0.0 && duration > 0.0) {
        return Err(crate::invalid("peak-to-peak and duration must be positive"));
    }
    let n = (duration * slow_rate).round() as usize;
    let amp = p.peak_to_peak / 2.0;
    let mut rng = stream(seed, Stream::Physio);
    let harmonics: Vec<(f64, f64, f64)> = (0..p.harmonics)
        .map(|k| {
            let order = (k + 2) as f64;
            let rel: f64 = rng.random_range(0.5..=1.0);
            let phase: f64 = rng.random_range(0.0..2.0 * PI);
            (order * p.rate, rel * p.harmonic_level * amp, phase)
        })
        .collect();
    // harmonics above Nyquist are dropped rather than aliased
    let samples = (0..n)
        .map(|l| {
            let t = l as f64 / slow_rate;
            let mut d = amp * (2.0 * PI * p.rate * t).sin() + p.drift * t;
            for &(f, a, ph) in &harmonics {
                if f < slow_rate / 2.0 {
                    d += a * (2.0 * PI * f * t + ph).sin();
                }
            }
            d
        })
        .collect();
    DisplacementTrace::new(samples, slow_rate, "synthetic")
}

/// Read a trace CSV (`index,front_radar_VS[,side_radar_VS]`, centimeters).
pub fn load_trace_csv(path: &Path, slow_rate: f64) -> Result<Vec<DisplacementTrace>> {
    let ingest = |reason: String| Error::Ingest {
        path: path.display().to_string(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| ingest(e.to_string()))?;
    let headers = reader.headers().map_err(|e| ingest(e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let two = match names.as_slice() {
        ["index", FRONT_COLUMN] => false,
        ["index", FRONT_COLUMN, SIDE_COLUMN] => true,
        _ => {
            return Err(ingest(format!(
                "expected header `index,{FRONT_COLUMN}[,{SIDE_COLUMN}]`, found `{}`",
                names.join(",")
            )))
        }
    };
    let mut front = Vec::new();
    let mut side = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ingest(format!("row {}: {e}", row + 1)))?;
        if record.len() != names.len() {
            return Err(ingest(format!(
                "row {}: expected {} fields, found {}",
                row + 1,
                names.len(),
                record.len()
            )));
        }
        let field = |i: usize| -> Result<f64> {
            let s = record[i].trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ingest(format!("row {}: `{s}` in column {} is not a number", row + 1, names[i])))
        };
        field(0)?;
        front.push(field(1)? / 100.0);
        if two {
            side.push(field(2)? / 100.0);
        }
    }
    if front.is_empty() {
        return Err(ingest("no samples".into()));
    }
    let wrap = |e: Error| ingest(e.to_string());
    let mut out = vec![DisplacementTrace::new(front, slow_rate, FRONT_COLUMN).map_err(wrap)?];
    if two {
        out.push(DisplacementTrace::new(side, slow_rate, SIDE_COLUMN).map_err(wrap)?);
    }
    Ok(out)
}

pub fn write_trace_csv(path: &Path, front: &DisplacementTrace, side: Option<&DisplacementTrace>) -> Result<()> {
    if let Some(s) = side {
        if s.len() != front.len() {
            return Err(Error::ShapeMismatch(format!(
                "front trace has {} samples, side trace {}",
                front.len(),
                s.len()
            )));
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_io)?;
    let mut header = vec!["index", FRONT_COLUMN];
    if side.is_some() {
        header.push(SIDE_COLUMN);
    }
    w.write_record(&header).map_err(csv_io)?;
    for l in 0..front.len() {
        let mut row = vec![l.to_string(), (front.samples[l] * 100.0).to_string()];
        if let Some(s) = side {
            row.push((s.samples[l] * 100.0).to_string());
        }
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Fraction of the chest displacement visible at an aspect angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AngleGainModel {
    /// `cos(θ)^exponent`.
    Parametric { exponent: f64 },
    /// Linear interpolation of table points covering `[0, π/2]`.
    Measured { table: Vec<GainPoint> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainPoint {
    #[serde(with = "crate::units::angle")]
    pub angle: f64,
    pub gain: f64,
}

impl GainPoint {
    pub fn new(angle: f64, gain: f64) -> Self {
        Self { angle, gain }
    }
}

impl Default for AngleGainModel {
    fn default() -> Self {
        AngleGainModel::Parametric {
            exponent: default_exponent(),
        }
    }
}

/// Exponent that makes `cos^p(78.75°) = 0.1`.
pub fn default_exponent() -> f64 {
    0.1f64.ln() / 78.75f64.to_radians().cos().ln()
}

impl AngleGainModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            AngleGainModel::Parametric { exponent } => {
                // need gain(90°) ≤ 0.05; cos(90°) evaluates to ~6e-17
                if !(*exponent > 0.0 && exponent.is_finite()) {
                    return Err(crate::invalid(format!("angle-gain exponent {exponent} must be > 0")));
                }
            }
            AngleGainModel::Measured { table } => {
                if table.len() < 2 {
                    return Err(crate::invalid("measured angle-gain table needs at least two rows"));
                }
                let (a0, g0) = (table[0].angle, table[0].gain);
                let (an, gn) = (table[table.len() - 1].angle, table[table.len() - 1].gain);
                if a0 != 0.0 || (g0 - 1.0).abs() > 1e-12 {
                    return Err(crate::invalid("measured angle-gain table must start at (0, 1)"));
                }
                if (an - PI / 2.0).abs() > 1e-9 || gn > 0.05 {
                    return Err(crate::invalid("measured angle-gain table must end at 90° with gain <= 0.05"));
                }
                for pair in table.windows(2) {
                    let (a1, g1, a2, g2) = (pair[0].angle, pair[0].gain, pair[1].angle, pair[1].gain);
                    if a2 <= a1 {
                        return Err(crate::invalid("measured angle-gain angles must increase strictly"));
                    }
                    if g2 > g1 || g2 < 0.0 {
                        return Err(crate::invalid("measured angle gain must be non-increasing and >= 0"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Band-limited additive displacement jitter, scaled by `1 − g(θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Distortion {
    /// Jitter rms in meters at 90° incidence.
    #[serde(with = "crate::units::length")]
    pub rms: f64,
    #[serde(with = "crate::units::frequency_band")]
    pub band: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcsModel {
    pub reflectivity: f64,
    #[serde(default)]
    pub angle_gain: AngleGainModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion: Option<Distortion>,
}

impl RcsModel {
    pub fn new(reflectivity: f64) -> Self {
        Self {
            reflectivity,
            angle_gain: AngleGainModel::default(),
            distortion: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reflectivity >= 0.0 && self.reflectivity.is_finite()) {
            return Err(crate::invalid(format!("reflectivity {} must be >= 0", self.reflectivity)));
        }
        if let Some(d) = &self.distortion {
            if !(d.rms >= 0.0 && d.band.0 >= 0.0 && d.band.1 > d.band.0) {
                return Err(crate::invalid("distortion needs rms >= 0 and an increasing band"));
            }
        }
        self.angle_gain.validate()
    }
}

pub fn angle_gain(model: &AngleGainModel, theta: f64) -> Result<f64> {
    if !(0.0..=PI / 2.0 + 1e-12).contains(&theta) {
        return Err(crate::invalid(format!("incidence angle {theta} rad outside [0, π/2]")));
    }
    let theta = theta.min(PI / 2.0);
    Ok(match model {
        AngleGainModel::Parametric { exponent } => theta.cos().max(0.0).powf(*exponent),
        AngleGainModel::Measured { table } => {
            let i = table.partition_point(|p| p.angle <= theta).clamp(1, table.len() - 1);
            let (a1, g1) = (table[i - 1].angle, table[i - 1].gain);
            let (a2, g2) = (table[i].angle, table[i].gain);
            g1 + (g2 - g1) * (theta - a1) / (a2 - a1)
        }
    })
}

/// `q·exp(j(4π/λ)·d[l])`.
pub fn modulate(q: f64, displacement: &[f64], wavelength: f64) -> Vec<C64> {
    let k = 4.0 * PI / wavelength;
    displacement.iter().map(|d| C64::from_polar(q, k * d)).collect()
}

/// Echo reflectivity series without distortion.
pub fn rcs_series(model: &RcsModel, trace: &DisplacementTrace, theta: f64, wavelength: f64) -> Result<Vec<C64>> {
    let g = angle_gain(&model.angle_gain, theta)?;
    let d: Vec<f64> = trace.samples.iter().map(|x| g * x).collect();
    Ok(modulate(model.reflectivity, &d, wavelength))
}

/// What one path sees of the chest.
#[derive(Debug, Clone, PartialEq)]
pub struct PathObservation {
    pub incidence_angle: f64,
    pub effective_trace: DisplacementTrace,
    pub rcs: Vec<C64>,
}

/// Angle-scaled trace plus jitter (when configured) and its echo series.
pub fn observe(
    model: &RcsModel,
    trace: &DisplacementTrace,
    theta: f64,
    wavelength: f64,
    path: PathKind,
    seed: u64,
) -> Result<PathObservation> {
    model.validate()?;
    let g = angle_gain(&model.angle_gain, theta)?;
    let mut d: Vec<f64> = trace.samples.iter().map(|x| g * x).collect();
    if let Some(dist) = &model.distortion {
        let rms = dist.rms * (1.0 - g);
        if rms > 0.0 {
            let jitter = band_limited_noise(d.len(), trace.slow_rate, dist.band, rms, seed, path as u32);
            for (x, j) in d.iter_mut().zip(jitter) {
                *x += j;
            }
        }
    }
    let rcs = modulate(model.reflectivity, &d, wavelength);
    Ok(PathObservation {
        incidence_angle: theta,
        effective_trace: DisplacementTrace::new(d, trace.slow_rate, format!("{}_{path}", trace.label))?,
        rcs,
    })
}

/// White Gaussian noise brick-wall filtered to `band` and scaled to the
/// given sample rms.
pub fn band_limited_noise(n: usize, rate: f64, band: (f64, f64), rms: f64, seed: u64, index: u32) -> Vec<f64> {
    let mut rng = indexed_stream(seed, Stream::Jitter, index);
    let mut buf: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.sample::<f64, _>(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * rate / n as f64;
        if f < band.0 || f > band.1 {
            *z = C64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let x: Vec<f64> = buf.iter().map(|z| z.re).collect();
    let cur = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if cur == 0.0 {
        return vec![0.0; n];
    }
    x.iter().map(|v| v * rms / cur).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LAMBDA: f64 = 0.041928;

    fn params(rate: f64, pp: f64) -> BreathingParams {
        BreathingParams {
            rate,
            peak_to_peak: pp,
            ..Default::default()
        }
    }

    fn dominant_bin(x: &[f64], rate: f64) -> f64 {
        // plain DFT magnitude, DC excluded
        let n = x.len();
        let (k, _) = (1..n / 2)
            .map(|k| {
                let z: C64 = x
                    .iter()
                    .enumerate()
                    .map(|(l, v)| C64::from_polar(*v, -2.0 * PI * (k * l) as f64 / n as f64))
                    .sum();
                (k, z.norm())
            })
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        k as f64 * rate / n as f64
    }

    #[test]
    fn synth_default_length_and_peak() {
        let t = synth_respiration(&params(0.133, 0.02), 60.0, 4.0, 1).unwrap();
        assert_eq!(t.len(), 240);
        let f = dominant_bin(t.samples(), 4.0);
        assert!((f - 0.133).abs() <= 0.5 / 60.0);
    }

    #[test]
    fn synth_peak_to_peak_when_samples_hit_extrema() {
        let t = synth_respiration(&params(4.0 / 32.0, 0.02), 64.0, 4.0, 1).unwrap();
        assert!((t.peak_to_peak() - 0.02).abs() < 1e-9);
        // off-grid rates undershoot by at most 1 − cos(π f/rate)
        let t = synth_respiration(&params(0.133, 0.02), 60.0, 4.0, 1).unwrap();
        let bound = 0.02 * (1.0 - (PI * 0.133 / 4.0).cos());
        assert!(t.peak_to_peak() <= 0.02 + 1e-12 && t.peak_to_peak() >= 0.02 - bound);
    }

    #[test]
    fn synth_rejects_aliased_rate() {
        assert!(matches!(
            synth_respiration(&params(2.1, 0.02), 60.0, 4.0, 1),
            Err(Error::Nyquist { .. })
        ));
    }

    #[test]
    fn synth_is_seed_deterministic() {
        let p = BreathingParams {
            harmonics: 3,
            ..params(0.2, 0.01)
        };
        let a = synth_respiration(&p, 30.0, 4.0, 9).unwrap();
        assert_eq!(a, synth_respiration(&p, 30.0, 4.0, 9).unwrap());
        assert_ne!(a, synth_respiration(&p, 30.0, 4.0, 10).unwrap());
    }

    #[test]
    fn default_gain_anchor_points() {
        let m = AngleGainModel::default();
        assert_eq!(angle_gain(&m, 0.0).unwrap(), 1.0);
        assert!((angle_gain(&m, 78.75f64.to_radians()).unwrap() - 0.1).abs() < 1e-12);
        assert!(angle_gain(&m, 11.25f64.to_radians()).unwrap() >= 0.95);
        assert!(angle_gain(&m, PI / 2.0).unwrap() <= 0.05);
        assert!(angle_gain(&m, -0.1).is_err());
        assert!(angle_gain(&m, 1.6).is_err());
    }

    #[test]
    fn measured_table_interpolates() {
        let m = AngleGainModel::Measured {
            table: vec![GainPoint::new(0.0, 1.0), GainPoint::new(PI / 4.0, 0.5), GainPoint::new(PI / 2.0, 0.0)],
        };
        m.validate().unwrap();
        assert!((angle_gain(&m, PI / 8.0).unwrap() - 0.75).abs() < 1e-12);
        assert!((angle_gain(&m, PI / 2.0).unwrap()).abs() < 1e-12);
        let bad = AngleGainModel::Measured {
            table: vec![
                GainPoint::new(0.0, 1.0),
                GainPoint::new(PI / 4.0, 0.6),
                GainPoint::new(PI / 3.0, 0.7),
                GainPoint::new(PI / 2.0, 0.0),
            ],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rcs_zero_displacement_is_constant() {
        let model = RcsModel::new(0.1);
        let t = DisplacementTrace::new(vec![0.0; 10], 4.0, "z").unwrap();
        for z in rcs_series(&model, &t, 0.3, LAMBDA).unwrap() {
            assert!((z - C64::new(0.1, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn rcs_two_way_phase() {
        // λ/8 of chest motion is λ/4 of path length: a quarter cycle
        let model = RcsModel::new(1.0);
        let t = DisplacementTrace::new(vec![LAMBDA / 8.0; 2], 4.0, "q").unwrap();
        let z = rcs_series(&model, &t, 0.0, LAMBDA).unwrap();
        assert!((z[0].arg() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn phase_excursion_ratio_tracks_gain() {
        let model = RcsModel::new(0.1);
        let t = synth_respiration(&params(0.133, 0.002), 60.0, 4.0, 3).unwrap();
        let excursion = |deg: f64| {
            let ph: Vec<f64> = rcs_series(&model, &t, f64::to_radians(deg), LAMBDA)
                .unwrap()
                .iter()
                .map(|z| z.arg())
                .collect();
            ph.iter().copied().fold(f64::MIN, f64::max) - ph.iter().copied().fold(f64::MAX, f64::min)
        };
        let ratio = excursion(78.75) / excursion(11.25);
        let g = &model.angle_gain;
        let expect = angle_gain(g, 78.75f64.to_radians()).unwrap() / angle_gain(g, 11.25f64.to_radians()).unwrap();
        assert!((ratio - expect).abs() < 1e-9);
    }

    #[test]
    fn jitter_scales_with_angle_loss() {
        let model = RcsModel {
            distortion: Some(Distortion {
                rms: 0.002,
                band: (0.05, 0.7),
            }),
            ..RcsModel::new(1.0)
        };
        let t = DisplacementTrace::new(vec![0.0; 240], 4.0, "z").unwrap();
        let side = observe(&model, &t, 78.75f64.to_radians(), LAMBDA, PathKind::Direct, 1).unwrap();
        let rms = (side.effective_trace.samples().iter().map(|x| x * x).sum::<f64>() / 240.0).sqrt();
        assert!((rms - 0.002 * 0.9).abs() < 1e-12);
        let front = observe(&model, &t, 0.0, LAMBDA, PathKind::Ris, 1).unwrap();
        assert!(front.effective_trace.samples().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn band_limited_noise_has_no_out_of_band_energy() {
        let x = band_limited_noise(256, 4.0, (0.05, 0.7), 1.0, 5, 0);
        let n = x.len();
        for k in 0..n / 2 {
            let f = k as f64 * 4.0 / n as f64;
            if f > 0.71 || f < 0.04 {
                let z: C64 = x
                    .iter()
                    .enumerate()
                    .map(|(l, v)| C64::from_polar(*v, -2.0 * PI * (k * l) as f64 / n as f64))
                    .sum();
                assert!(z.norm() < 1e-9, "bin {k} has {}", z.norm());
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let a = synth_respiration(&params(0.133, 0.02), 25.0, 4.0, 1).unwrap();
        let b = synth_respiration(&params(0.2, 0.004), 25.0, 4.0, 2).unwrap();
        write_trace_csv(&path, &a, Some(&b)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("index,front_radar_VS,side_radar_VS\n"));
        let back = load_trace_csv(&path, 4.0).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].len(), 100);
        for (x, y) in a.samples().iter().zip(back[0].samples()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in b.samples().iter().zip(back[1].samples()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_errors_are_descriptive() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        std::fs::write(&p, "index,front_radar_VS\n").unwrap();
        let e = load_trace_csv(&p, 4.0).unwrap_err().to_string();
        assert!(e.contains("no samples"), "{e}");
        std::fs::write(&p, "index,foo\n0,1\n").unwrap();
        assert!(load_trace_csv(&p, 4.0).unwrap_err().to_string().contains("expected header"));
        std::fs::write(&p, "index,front_radar_VS\n0,1\n1,abc\n").unwrap();
        let e = load_trace_csv(&p, 4.0).unwrap_err().to_string();
        assert!(e.contains("row 2") && e.contains("abc"), "{e}");
        let missing = dir.path().join("nope.csv");
        assert!(load_trace_csv(&missing, 4.0).unwrap_err().to_string().contains("nope.csv"));
    }

    proptest! {
        #[test]
        fn rcs_magnitude_is_constant(q in 0.0f64..5.0, seed in 0u64..1000, deg in 0.0f64..90.0) {
            let t = synth_respiration(&BreathingParams { harmonics: 2, ..params(0.25, 0.03) }, 20.0, 4.0, seed).unwrap();
            for z in rcs_series(&RcsModel::new(q), &t, deg.to_radians(), LAMBDA).unwrap() {
                prop_assert!((z.norm() - q).abs() <= 1e-12);
            }
        }

        #[test]
        fn parametric_gain_is_monotone(p in 0.2f64..5.0) {
            let m = AngleGainModel::Parametric { exponent: p };
            let mut prev = 1.0;
            for i in 0..=900 {
                let g = angle_gain(&m, (i as f64 * 0.1).to_radians()).unwrap();
                prop_assert!(g <= prev && (0.0..=1.0).contains(&g));
                prev = g;
            }
        }
    }
}
