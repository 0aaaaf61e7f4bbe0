//! Full simulated acquisitions: scenario description, channel environment,
//! slow-time record synthesis and γ sweeps.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    assemble_end_to_end, draw_realization, los_channel, quantize_phases, ris_focus_profile, ChannelRealization,
    LosChannels, RisConfig, LOS_ONLY_K,
};
use crate::geometry::{angles_from_placement, ula_steering, wavelength, ArrayConfig, PathAngles, Placement, Point3};
use crate::physio::{
    load_trace_csv, observe, synth_respiration, AngleGainModel, BreathingParams, DisplacementTrace, Distortion,
    PathObservation, RcsModel,
};
use crate::rng::{complex_gaussian, indexed_stream, Stream};
use crate::sigproc::{clutter_filter, make_waveform, matched_filter, root_music_doa, Waveform};
use crate::strategy::{extract_estimates, plan_transmissions, ReceiveCombiners, Schedule, StrategyKind, StrategyName};
use crate::units::{self, dbm_to_watts};
use crate::{CMatrix, CVector, Error, PathKind, Result, C64};

/// Thermal noise density at 290 K.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarConfig {
    pub element_count: usize,
    #[serde(with = "units::frequency")]
    pub carrier: f64,
    #[serde(with = "units::frequency")]
    pub bandwidth: f64,
    pub fast_samples: usize,
    #[serde(with = "units::time")]
    pub pri: f64,
    #[serde(with = "units::power")]
    pub total_power: f64,
    #[serde(with = "units::decibel")]
    pub noise_figure: f64,
    /// Element spacing in wavelengths.
    pub spacing_wavelengths: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            element_count: 5,
            carrier: 7.15e9,
            bandwidth: 0.5e6,
            fast_samples: 64,
            pri: 0.25,
            total_power: 0.01,
            noise_figure: 10.0,
            spacing_wavelengths: 0.5,
        }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.element_count < 2 {
            return Err(crate::invalid("radar needs at least 2 elements"));
        }
        for (name, v) in [
            ("carrier", self.carrier),
            ("bandwidth", self.bandwidth),
            ("pri", self.pri),
            ("total_power", self.total_power),
            ("spacing_wavelengths", self.spacing_wavelengths),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(crate::invalid(format!("radar {name} must be > 0")));
            }
        }
        if self.fast_samples < 4 {
            return Err(crate::invalid("need at least 4 fast-time samples"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier)
    }

    pub fn slow_rate(&self) -> f64 {
        1.0 / self.pri
    }

    /// Fast-time sampling rate: `K_fast` samples across a `1/B` pulse.
    pub fn fast_rate(&self) -> f64 {
        self.fast_samples as f64 * self.bandwidth
    }

    /// `−174 dBm/Hz + 10·log10(B) + NF`.
    pub fn noise_floor_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_PER_HZ + 10.0 * self.bandwidth.log10() + self.noise_figure
    }

    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.noise_floor_dbm())
    }

    pub fn array(&self) -> Result<ArrayConfig> {
        let lambda = self.wavelength();
        ArrayConfig::new(self.element_count, self.spacing_wavelengths * lambda, lambda)
    }

    /// Pulse at a quarter of the fast-time rate.
    pub fn waveform(&self) -> Result<Waveform> {
        let fs = self.fast_rate();
        make_waveform(fs / 4.0, fs, self.fast_samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RisSpec {
    pub rows: usize,
    pub cols: usize,
    pub spacing_wavelengths: f64,
    /// Phase quantization; 0 means continuous phases.
    pub phase_bits: u32,
}

impl Default for RisSpec {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 10,
            spacing_wavelengths: 0.5,
            phase_bits: 0,
        }
    }
}

/// Which way the chest faces.
#[derive(Debug, Clone, PartialEq)]
pub enum ChestFacing {
    Ris,
    Radar,
    Normal(Point3),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FacingRepr {
    Named(String),
    Vector([f64; 3]),
}

impl Serialize for ChestFacing {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ChestFacing::Ris => FacingRepr::Named("ris".into()),
            ChestFacing::Radar => FacingRepr::Named("radar".into()),
            ChestFacing::Normal(v) => FacingRepr::Vector([v.x, v.y, v.z]),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChestFacing {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match FacingRepr::deserialize(d)? {
            FacingRepr::Named(n) if n == "ris" => Ok(ChestFacing::Ris),
            FacingRepr::Named(n) if n == "radar" => Ok(ChestFacing::Radar),
            FacingRepr::Named(n) => Err(serde::de::Error::custom(format!(
                "chest_facing `{n}`: expected \"ris\", \"radar\" or a unit vector"
            ))),
            FacingRepr::Vector([x, y, z]) => Ok(ChestFacing::Normal(Point3::new(x, y, z))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementConfig {
    #[serde(with = "units::position")]
    pub radar_position: Point3,
    #[serde(with = "units::direction")]
    pub radar_broadside: Point3,
    #[serde(with = "units::position")]
    pub ris_center: Point3,
    #[serde(with = "units::direction")]
    pub ris_normal: Point3,
    #[serde(with = "units::position")]
    pub target_position: Point3,
    pub chest_facing: ChestFacing,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        let p = Placement::default_room();
        Self {
            radar_position: p.radar_position,
            radar_broadside: p.radar_broadside,
            ris_center: p.ris_center,
            ris_normal: p.ris_normal,
            target_position: p.target_position,
            chest_facing: ChestFacing::Ris,
        }
    }
}

impl PlacementConfig {
    pub fn resolve(&self) -> Result<Placement> {
        let toward = |to: Point3| -> Result<Point3> {
            let v = to - self.target_position;
            if v.norm() == 0.0 {
                return Err(Error::InvalidGeometry("chest faces a point at its own position".into()));
            }
            Ok(v.normalize())
        };
        let chest_normal = match &self.chest_facing {
            ChestFacing::Ris => toward(self.ris_center)?,
            ChestFacing::Radar => toward(self.radar_position)?,
            ChestFacing::Normal(v) => *v,
        };
        let p = Placement {
            radar_position: self.radar_position,
            radar_broadside: self.radar_broadside,
            ris_center: self.ris_center,
            ris_normal: self.ris_normal,
            target_position: self.target_position,
            chest_normal,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    #[serde(with = "units::decibel")]
    pub rician_k: f64,
    /// Ignore `rician_k` and use the pure line-of-sight channels.
    pub los_only: bool,
    /// Per-entry power of the static clutter matrix.
    #[serde(with = "units::decibel")]
    pub clutter_power: f64,
    pub clutter: bool,
    pub noise: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            rician_k: 10.0,
            los_only: false,
            clutter_power: -100.0,
            clutter: true,
            noise: true,
        }
    }
}

impl ChannelConfig {
    pub fn k_linear(&self) -> f64 {
        if self.los_only {
            LOS_ONLY_K
        } else {
            crate::channel::db_to_linear(self.rician_k)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysioConfig {
    pub breathing: BreathingParams,
    /// Measured trace CSV; replaces the synthetic breathing when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<PathBuf>,
    /// Chest as seen through the RIS.
    pub ris: RcsModel,
    /// Chest as seen directly by the radar.
    pub direct: RcsModel,
}

impl Default for PhysioConfig {
    fn default() -> Self {
        let distortion = Some(Distortion {
            rms: 0.0025,
            band: (0.05, 0.7),
        });
        Self {
            breathing: BreathingParams {
                harmonics: 2,
                harmonic_level: 0.05,
                ..BreathingParams::default()
            },
            trace_file: None,
            ris: RcsModel {
                reflectivity: 6.0,
                angle_gain: AngleGainModel::default(),
                distortion: distortion.clone(),
            },
            direct: RcsModel {
                reflectivity: 0.3,
                angle_gain: AngleGainModel::default(),
                distortion,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessingConfig {
    pub clutter_filter: bool,
    pub clutter_window: usize,
    pub detrend: bool,
    pub zero_pad: usize,
    #[serde(with = "units::frequency_band")]
    pub band: (f64, f64),
    /// Length of one acquisition window.
    #[serde(with = "units::time")]
    pub window: f64,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        Self {
            clutter_filter: true,
            clutter_window: 21,
            detrend: true,
            zero_pad: 4,
            band: (0.05, 0.7),
            window: 60.0,
        }
    }
}

impl ProcessingConfig {
    pub fn window_samples(&self, slow_rate: f64) -> usize {
        (self.window * slow_rate).round() as usize
    }

    /// FFT length shared by every path spectrum of a window.
    pub fn n_fft(&self, slow_rate: f64) -> usize {
        self.zero_pad * self.window_samples(slow_rate)
    }

    /// One bin of the window spectrum; the peak-lock tolerance.
    pub fn bin_width(&self, slow_rate: f64) -> f64 {
        slow_rate / self.n_fft(slow_rate) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub kind: StrategyName,
    /// RIS share: transmit power share (spatial) or slot share (temporal).
    pub gamma: f64,
    /// Temporal: RIS slots first in the window.
    pub ris_first: bool,
    /// Update γ from the per-path prominences after every window.
    pub adaptive: bool,
    pub step: f64,
    #[serde(with = "units::decibel")]
    pub threshold: f64,
    /// Consecutive below-threshold windows before an opportunistic switch.
    pub hysteresis: usize,
    /// Opportunistic oracle mode pinned to one path.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ideal_path: Option<PathKind>,
    pub windows: usize,
    /// Locate the patient with root-MUSIC instead of using the true position.
    pub estimate_position: bool,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            kind: StrategyName::Spatial,
            gamma: 0.5,
            ris_first: false,
            adaptive: true,
            step: 0.1,
            threshold: 6.0,
            hysteresis: 2,
            ideal_path: None,
            windows: 5,
            estimate_position: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub kinds: Vec<StrategyName>,
    pub gammas: Vec<f64>,
    pub seeds: usize,
    pub first_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kinds: vec![StrategyName::Spatial, StrategyName::Temporal],
            gammas: (0..=10).map(|i| i as f64 / 10.0).collect(),
            seeds: 20,
            first_seed: 1,
        }
    }
}

impl SweepConfig {
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.first_seed + i).collect()
    }
}

/// Everything needed to reproduce a simulated acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub radar: RadarConfig,
    pub ris: RisSpec,
    pub placement: PlacementConfig,
    pub channel: ChannelConfig,
    pub physio: PhysioConfig,
    pub processing: ProcessingConfig,
    pub strategy: StrategyConfig,
    pub sweep: SweepConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 1,
            radar: RadarConfig::default(),
            ris: RisSpec::default(),
            placement: PlacementConfig::default(),
            channel: ChannelConfig::default(),
            physio: PhysioConfig::default(),
            processing: ProcessingConfig::default(),
            strategy: StrategyConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        self.placement.resolve()?;
        self.physio.ris.validate()?;
        self.physio.direct.validate()?;
        let rate = self.radar.slow_rate();
        let b = &self.physio.breathing;
        if self.physio.trace_file.is_none() && !(b.rate > 0.0 && b.rate < rate / 2.0) {
            return Err(Error::Nyquist { freq: b.rate, rate });
        }
        let p = &self.processing;
        if p.zero_pad == 0 || p.window_samples(rate) < 8 {
            return Err(crate::invalid("processing needs zero_pad >= 1 and a window of at least 8 samples"));
        }
        if p.clutter_filter && (p.clutter_window % 2 == 0 || p.clutter_window < 3) {
            return Err(crate::invalid(format!("clutter window {} must be odd and >= 3", p.clutter_window)));
        }
        if !(p.band.0 >= 0.0 && p.band.1 > p.band.0 && p.band.1 <= rate / 2.0) {
            return Err(crate::invalid("respiration band must be increasing and below slow-time Nyquist"));
        }
        let s = &self.strategy;
        if !(0.0..=1.0).contains(&s.gamma) || !(s.step >= 0.0) || s.hysteresis == 0 {
            return Err(crate::invalid("strategy needs gamma in [0, 1], step >= 0 and hysteresis >= 1"));
        }
        if self.sweep.gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(crate::invalid("sweep gammas must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn slow_rate(&self) -> f64 {
        self.radar.slow_rate()
    }

    pub fn window_samples(&self) -> usize {
        self.processing.window_samples(self.slow_rate())
    }

    /// Breathing trace long enough for `windows` acquisition windows.
    pub fn breathing_trace(&self, seed: u64, windows: usize) -> Result<ChestTraces> {
        let rate = self.slow_rate();
        let need = self.window_samples() * windows.max(1);
        match &self.physio.trace_file {
            None => {
                let t = synth_respiration(&self.physio.breathing, need as f64 / rate, rate, seed)?;
                Ok(ChestTraces { front: t, side: None })
            }
            Some(path) => {
                let mut traces = load_trace_csv(path, rate)?;
                if traces[0].len() < need {
                    return Err(Error::Ingest {
                        path: path.display().to_string(),
                        reason: format!("{} samples, run needs {need}", traces[0].len()),
                    });
                }
                let side = if traces.len() > 1 { traces.pop() } else { None };
                Ok(ChestTraces {
                    front: traces.pop().expect("front trace"),
                    side,
                })
            }
        }
    }
}

/// Chest motion driving a run. With a measured side-view trace the direct
/// path uses it as recorded; otherwise both paths derive from `front`
/// through their angle-gain models.
#[derive(Debug, Clone, PartialEq)]
pub struct ChestTraces {
    pub front: DisplacementTrace,
    pub side: Option<DisplacementTrace>,
}

/// Per-slow-time echo reflectivities of both paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSignals {
    pub direct: PathObservation,
    pub ris: PathObservation,
}

impl PathSignals {
    pub fn build(sc: &Scenario, traces: &ChestTraces, angles: &PathAngles, seed: u64) -> Result<Self> {
        let lambda = sc.radar.wavelength();
        let ris = observe(
            &sc.physio.ris,
            &traces.front,
            angles.chest_incidence_ris.min(std::f64::consts::FRAC_PI_2),
            lambda,
            PathKind::Ris,
            seed,
        )?;
        let direct = match &traces.side {
            Some(side) => {
                let flat = RcsModel {
                    angle_gain: AngleGainModel::Parametric { exponent: 1e-300 },
                    distortion: None,
                    ..sc.physio.direct.clone()
                };
                let mut o = observe(&flat, side, 0.0, lambda, PathKind::Direct, seed)?;
                o.incidence_angle = angles.chest_incidence_direct;
                o
            }
            None => observe(
                &sc.physio.direct,
                &traces.front,
                angles.chest_incidence_direct.min(std::f64::consts::FRAC_PI_2),
                lambda,
                PathKind::Direct,
                seed,
            )?,
        };
        Ok(Self { direct, ris })
    }

    pub fn len(&self) -> usize {
        self.ris.rcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ris.rcs.is_empty()
    }
}

/// Geometry and one channel realization of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub placement: Placement,
    pub angles: PathAngles,
    pub array: ArrayConfig,
    pub ris: RisConfig,
    pub los: LosChannels,
    pub channel: ChannelRealization,
    pub waveform: Waveform,
    /// Per fast-time sample, watts.
    pub noise_power: f64,
    pub total_power: f64,
    pub wavelength: f64,
    pub profile_version: u32,
    phase_bits: u32,
}

impl Environment {
    /// Channel draw for `seed` with an unconfigured (all-zero phase) RIS.
    pub fn build(sc: &Scenario, seed: u64) -> Result<Self> {
        sc.validate()?;
        let placement = sc.placement.resolve()?;
        let angles = angles_from_placement(&placement)?;
        let lambda = sc.radar.wavelength();
        let array = sc.radar.array()?;
        let ris = RisConfig::grid(
            sc.ris.rows,
            sc.ris.cols,
            sc.ris.spacing_wavelengths * lambda,
            placement.ris_center,
            placement.ris_normal,
        )?;
        let los = los_channel(&placement, &array, &ris)?;
        let clutter = if sc.channel.clutter {
            crate::channel::db_to_linear(sc.channel.clutter_power)
        } else {
            0.0
        };
        let channel = draw_realization(&los, sc.channel.k_linear(), ris.reflection(), clutter, seed)?;
        Ok(Self {
            placement,
            angles,
            array,
            ris,
            los,
            channel,
            waveform: sc.radar.waveform()?,
            noise_power: if sc.channel.noise { sc.radar.noise_power() } else { 0.0 },
            total_power: sc.radar.total_power,
            wavelength: lambda,
            profile_version: 0,
            phase_bits: sc.ris.phase_bits,
        })
    }

    /// Re-phase the RIS to focus on `focus`; fading stays as drawn.
    pub fn focus_ris(&mut self, focus: &Point3) -> Result<()> {
        let phases = ris_focus_profile(&self.placement, &self.ris, self.wavelength, focus);
        let phases = quantize_phases(&phases, self.phase_bits);
        self.ris = self.ris.clone().with_phases(phases)?;
        self.channel = self.channel.clone().with_reflection(self.ris.reflection())?;
        self.profile_version += 1;
        Ok(())
    }

    pub fn steering(&self, theta: f64) -> crate::geometry::SteeringVector {
        ula_steering(&self.array, theta)
    }
}

/// Matched-filtered slow-time data, one column per pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowTimeRecord {
    pub y: CMatrix,
    pub slow_rate: f64,
}

/// Transmit `weights[l]` for every pulse, add receiver noise to the fast-time
/// samples and matched-filter each antenna. `offset` selects where in the
/// echo series the window starts; `stream` selects the noise stream.
pub fn simulate_acquisition(
    env: &Environment,
    signals: &PathSignals,
    weights: &[CVector],
    offset: usize,
    seed: u64,
    stream: (Stream, u32),
) -> Result<SlowTimeRecord> {
    let l_count = weights.len();
    if offset + l_count > signals.len() {
        return Err(crate::invalid(format!(
            "acquisition [{offset}, {}) exceeds echo series of {}",
            offset + l_count,
            signals.len()
        )));
    }
    let m = env.array.element_count;
    let s = env.waveform.samples();
    let k = s.len();
    let mut rng = indexed_stream(seed, stream.0, stream.1);
    let mut y = CMatrix::zeros(m, l_count);
    let mut row = vec![C64::new(0.0, 0.0); k];
    for (l, w) in weights.iter().enumerate() {
        if w.len() != m {
            return Err(Error::ShapeMismatch(format!("precoder of length {} for {m} elements", w.len())));
        }
        let alpha = signals.ris.rcs[offset + l];
        let beta = signals.direct.rcs[offset + l];
        let x = assemble_end_to_end(&env.channel, alpha, beta)? * w;
        for i in 0..m {
            for (r, sk) in row.iter_mut().zip(s) {
                *r = x[i] * sk;
                if env.noise_power > 0.0 {
                    *r += complex_gaussian(&mut rng, env.noise_power);
                }
            }
            y[(i, l)] = matched_filter(&row, &env.waveform)?;
        }
    }
    Ok(SlowTimeRecord {
        y,
        slow_rate: signals.ris.effective_trace.slow_rate(),
    })
}

/// Probe with a single transmit element and locate the strongest echo with
/// root-MUSIC on the clutter-filtered record.
pub fn estimate_direct_azimuth(
    sc: &Scenario,
    env: &Environment,
    signals: &PathSignals,
    offset: usize,
    seed: u64,
    index: u32,
) -> Result<f64> {
    let l_count = sc.window_samples();
    let mut w = CVector::zeros(env.array.element_count);
    w[0] = C64::new(env.total_power.sqrt(), 0.0);
    let weights = vec![w; l_count];
    let rec = simulate_acquisition(env, signals, &weights, offset, seed, (Stream::Probe, index))?;
    let mut y = rec.y;
    if sc.processing.clutter_filter {
        y = clutter_filter(&y, sc.processing.clutter_window.min(odd_at_most(l_count)))?;
    }
    // echoes arrive on the conjugate manifold
    let snapshots = y.map(|z| z.conj());
    let est = root_music_doa(&snapshots, 1, &env.array)?;
    Ok(est[0])
}

pub(crate) fn odd_at_most(n: usize) -> usize {
    if n % 2 == 1 {
        n
    } else {
        n.saturating_sub(1)
    }
}

/// Outcome of one acquisition window.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub kind: StrategyKind,
    pub record: SlowTimeRecord,
    pub schedule: Schedule,
    pub estimates: [Option<crate::sigproc::VitalSignEstimate>; 2],
    pub theta_direct_estimate: f64,
    pub truth: DisplacementTrace,
}

impl RunResult {
    pub fn estimate(&self, path: PathKind) -> Option<&crate::sigproc::VitalSignEstimate> {
        self.estimates[path as usize].as_ref()
    }
}

/// Strategy of a single acquisition as configured in the scenario.
pub fn configured_kind(sc: &Scenario) -> StrategyKind {
    let s = &sc.strategy;
    match s.kind {
        StrategyName::Spatial => StrategyKind::Spatial { gamma: s.gamma },
        StrategyName::Temporal => StrategyKind::Temporal {
            ris_share: s.gamma,
            ris_first: s.ris_first,
        },
        StrategyName::Opportunistic => StrategyKind::Opportunistic {
            active: s.ideal_path.unwrap_or(if s.gamma >= 0.5 { PathKind::Ris } else { PathKind::Direct }),
        },
    }
}

/// Position estimate, RIS focusing and one window of `kind`.
pub fn acquire(sc: &Scenario, kind: &StrategyKind, seed: u64) -> Result<RunResult> {
    let mut env = Environment::build(sc, seed)?;
    let traces = sc.breathing_trace(seed, 1)?;
    let signals = PathSignals::build(sc, &traces, &env.angles, seed)?;
    let theta = locate_and_focus(sc, &mut env, &signals, 0, seed, 0)?;
    let l_count = sc.window_samples();
    let rx = ReceiveCombiners::new(&env, theta)?;
    let schedule = plan_transmissions(kind, l_count, &rx.a_direct, &rx.a_ris, env.total_power)?;
    let record = simulate_acquisition(&env, &signals, &schedule.weights, 0, seed, (Stream::Noise, 0))?;
    let estimates = extract_estimates(&record, &schedule, &rx, &sc.processing, env.wavelength)?;
    Ok(RunResult {
        seed,
        kind: kind.clone(),
        record,
        schedule,
        estimates,
        theta_direct_estimate: theta,
        truth: traces.front.window(0, l_count)?,
    })
}

/// Direct-path azimuth (estimated or true) and RIS focus on the implied
/// target position.
pub fn locate_and_focus(
    sc: &Scenario,
    env: &mut Environment,
    signals: &PathSignals,
    offset: usize,
    seed: u64,
    probe_index: u32,
) -> Result<f64> {
    let theta = if sc.strategy.estimate_position {
        estimate_direct_azimuth(sc, env, signals, offset, seed, probe_index)?
    } else {
        env.angles.direct
    };
    let focus = env.placement.target_at_azimuth(theta);
    env.focus_ris(&focus)?;
    Ok(theta)
}

/// One row of a γ sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub path: PathKind,
    pub seed: u64,
    pub peak_freq_hz: Option<f64>,
    pub prominence_db: Option<f64>,
}

pub const SWEEP_HEADER: &str = "gamma,path,seed,peak_freq_Hz,prominence_db";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.gamma,
            r.path,
            r.seed,
            opt(r.peak_freq_hz),
            opt(r.prominence_db)
        )?;
    }
    Ok(())
}

pub fn kind_at(name: StrategyName, gamma: f64, sc: &Scenario) -> Result<StrategyKind> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(crate::invalid(format!("gamma {gamma} outside [0, 1]")));
    }
    Ok(match name {
        StrategyName::Spatial => StrategyKind::Spatial { gamma },
        StrategyName::Temporal => StrategyKind::Temporal {
            ris_share: gamma,
            ris_first: sc.strategy.ris_first,
        },
        StrategyName::Opportunistic => {
            return Err(crate::invalid("γ sweeps need a spatial or temporal strategy"));
        }
    })
}

/// Every γ over every seed; rows ordered by γ, then seed, then path.
pub fn gamma_sweep(sc: &Scenario, name: StrategyName, gammas: &[f64], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    if gammas.is_empty() {
        return Err(crate::invalid("empty γ grid"));
    }
    if seeds.is_empty() {
        return Err(crate::invalid("empty seed list"));
    }
    let jobs: Vec<(f64, u64)> = gammas.iter().flat_map(|&g| seeds.iter().map(move |&s| (g, s))).collect();
    let runs: Vec<Result<Vec<SweepRow>>> = jobs
        .par_iter()
        .map(|&(gamma, seed)| {
            let run = acquire(sc, &kind_at(name, gamma, sc)?, seed)?;
            Ok(PathKind::BOTH
                .iter()
                .map(|&path| {
                    let est = run.estimate(path);
                    SweepRow {
                        gamma,
                        path,
                        seed,
                        peak_freq_hz: est.map(|e| e.peak_freq),
                        prominence_db: est.map(|e| e.peak_prominence_db),
                    }
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::with_capacity(jobs.len() * 2);
    for r in runs {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Fraction of seeds at `gamma` whose `path` peak lies within `tol` of `f_true`.
pub fn lock_fraction(rows: &[SweepRow], gamma: f64, path: PathKind, f_true: f64, tol: f64) -> f64 {
    let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.gamma == gamma && r.path == path).collect();
    if sel.is_empty() {
        return 0.0;
    }
    let hits = sel
        .iter()
        .filter(|r| r.peak_freq_hz.is_some_and(|f| (f - f_true).abs() <= tol))
        .count();
    hits as f64 / sel.len() as f64
}
