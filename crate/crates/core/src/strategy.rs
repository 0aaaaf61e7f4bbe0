//! Sensing strategies: how slow time and transmit power are divided between
//! the direct and RIS paths, and the evaluate/reconfigure loop around them.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::beamform::{path_beam, split_precoder, temporal_weights, SlotSets};
use crate::geometry::SteeringVector;
use crate::rng::Stream;
use crate::scenario::{
    locate_and_focus, odd_at_most, simulate_acquisition, Environment, PathSignals, ProcessingConfig, Scenario,
    SlowTimeRecord, StrategyConfig,
};
use crate::sigproc::{clutter_filter, combine, phase_demodulate, VitalSignEstimate};
use crate::{CMatrix, CVector, Error, PathKind, Result};

/// Fewest slow-time samples a path needs to be evaluated at all.
pub const MIN_PATH_SAMPLES: usize = 8;
pub const GAMMA_MIN: f64 = 0.05;
pub const GAMMA_MAX: f64 = 0.95;
/// Power split used when the opportunistic loop looks at both paths.
pub const PROBE_SHARE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyName {
    Temporal,
    Spatial,
    Opportunistic,
}

impl StrategyName {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyName::Temporal => "temporal",
            StrategyName::Spatial => "spatial",
            StrategyName::Opportunistic => "opportunistic",
        }
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "temporal" => Ok(StrategyName::Temporal),
            "spatial" => Ok(StrategyName::Spatial),
            "opportunistic" => Ok(StrategyName::Opportunistic),
            other => Err(Error::Config(format!(
                "unknown strategy `{other}`; expected temporal, spatial or opportunistic"
            ))),
        }
    }
}

/// A concrete resource division for one acquisition window.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum StrategyKind {
    /// Alternating full-power beams; `ris_share` of the slots go to the RIS.
    Temporal { ris_share: f64, ris_first: bool },
    /// One split beam; `gamma` is the RIS share of the transmit power.
    Spatial { gamma: f64 },
    /// All resources on one path.
    Opportunistic { active: PathKind },
}

impl StrategyKind {
    pub fn name(&self) -> StrategyName {
        match self {
            StrategyKind::Temporal { .. } => StrategyName::Temporal,
            StrategyKind::Spatial { .. } => StrategyName::Spatial,
            StrategyKind::Opportunistic { .. } => StrategyName::Opportunistic,
        }
    }

    /// Share of the resources spent on the RIS path.
    pub fn ris_share(&self) -> f64 {
        match self {
            StrategyKind::Temporal { ris_share, .. } => *ris_share,
            StrategyKind::Spatial { gamma } => *gamma,
            StrategyKind::Opportunistic { active } => f64::from(*active == PathKind::Ris),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.ris_share();
        if !(0.0..=1.0).contains(&g) {
            return Err(crate::invalid(format!("RIS share {g} outside [0, 1]")));
        }
        Ok(())
    }
}

/// Per-slot transmit weights and which slots each path may use.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub kind: StrategyKind,
    pub weights: Vec<CVector>,
    direct_slots: Vec<usize>,
    ris_slots: Vec<usize>,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn slots(&self, path: PathKind) -> &[usize] {
        match path {
            PathKind::Direct => &self.direct_slots,
            PathKind::Ris => &self.ris_slots,
        }
    }

    pub fn max_power(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_squared()).fold(0.0, f64::max)
    }
}

pub fn plan_transmissions(
    kind: &StrategyKind,
    l_count: usize,
    a_direct: &SteeringVector,
    a_ris: &SteeringVector,
    p_total: f64,
) -> Result<Schedule> {
    kind.validate()?;
    let all: Vec<usize> = (0..l_count).collect();
    let (weights, direct_slots, ris_slots) = match kind {
        StrategyKind::Spatial { gamma } => {
            let w = split_precoder(a_ris, a_direct, *gamma, p_total)?.weights().clone();
            (vec![w; l_count], all.clone(), all)
        }
        StrategyKind::Temporal { ris_share, ris_first } => {
            let sets = SlotSets::contiguous(l_count, *ris_share, *ris_first)?;
            let direct = path_beam(PathKind::Direct, a_direct, a_ris, p_total)?.weights().clone();
            let ris = path_beam(PathKind::Ris, a_direct, a_ris, p_total)?.weights().clone();
            let weights = (0..l_count)
                .map(|l| {
                    temporal_weights(l, &sets, a_direct, a_ris, p_total)?;
                    Ok(match sets.path_of(l) {
                        Some(PathKind::Direct) => direct.clone(),
                        _ => ris.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (weights, sets.slots(PathKind::Direct), sets.slots(PathKind::Ris))
        }
        StrategyKind::Opportunistic { active } => {
            let w = path_beam(*active, a_direct, a_ris, p_total)?.weights().clone();
            let (d, r) = match active {
                PathKind::Direct => (all, Vec::new()),
                PathKind::Ris => (Vec::new(), all),
            };
            (vec![w; l_count], d, r)
        }
    };
    Ok(Schedule {
        kind: kind.clone(),
        weights,
        direct_slots,
        ris_slots,
    })
}

/// Steering toward both paths and the matching per-path receive combiners,
/// each nulling the other path.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveCombiners {
    pub a_direct: SteeringVector,
    pub a_ris: SteeringVector,
    direct: CVector,
    ris: CVector,
}

impl ReceiveCombiners {
    pub fn new(env: &Environment, theta_direct: f64) -> Result<Self> {
        let a_direct = env.steering(theta_direct);
        let a_ris = env.steering(env.angles.ris);
        let direct = path_beam(PathKind::Direct, &a_direct, &a_ris, 1.0)?.receive_combiner();
        let ris = path_beam(PathKind::Ris, &a_direct, &a_ris, 1.0)?.receive_combiner();
        Ok(Self {
            a_direct,
            a_ris,
            direct,
            ris,
        })
    }

    pub fn combiner(&self, path: PathKind) -> &CVector {
        match path {
            PathKind::Direct => &self.direct,
            PathKind::Ris => &self.ris,
        }
    }
}

/// Displacement and spectrum of every path that had slots in the window.
/// Spectra share one FFT grid sized from the full window, so a path that
/// only saw part of the window shows a proportionally wider main lobe.
pub fn extract_estimates(
    record: &SlowTimeRecord,
    schedule: &Schedule,
    rx: &ReceiveCombiners,
    proc: &ProcessingConfig,
    wavelength: f64,
) -> Result<[Option<VitalSignEstimate>; 2]> {
    let n_fft = proc.zero_pad * record.y.ncols();
    let mut out = [None, None];
    for path in PathKind::BOTH {
        let slots = schedule.slots(path);
        if slots.len() < MIN_PATH_SAMPLES {
            continue;
        }
        let mut y = CMatrix::from_fn(record.y.nrows(), slots.len(), |m, j| record.y[(m, slots[j])]);
        if proc.clutter_filter {
            let w = proc.clutter_window.min(odd_at_most(slots.len()));
            y = clutter_filter(&y, w)?;
        }
        let r = combine(&y, rx.combiner(path))?;
        let d = match phase_demodulate(&r, wavelength, record.slow_rate, proc.detrend) {
            Ok(d) => d.with_label(path.as_str()),
            Err(Error::ZeroSample(_)) => continue,
            Err(e) => return Err(e),
        };
        out[path as usize] = Some(VitalSignEstimate::from_trace(path, d, n_fft, proc.band)?);
    }
    Ok(out)
}

/// Controller state between acquisition windows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopState {
    pub window: usize,
    /// RIS share used by spatial and temporal modes.
    pub gamma: f64,
    /// Opportunistic selection; `None` before the first evaluation.
    pub active: Option<PathKind>,
    /// Opportunistic: the next window looks at both paths.
    pub probing: bool,
    /// Consecutive windows with the active path below threshold.
    pub below: usize,
    /// Last prominence per path (direct, ris), dB.
    pub quality: [f64; 2],
    pub theta_direct: f64,
    pub profile_version: u32,
    /// Both paths were below threshold; re-estimate the position.
    pub reposition: bool,
}

impl LoopState {
    pub fn initial(cfg: &StrategyConfig, theta_direct: f64) -> Self {
        Self {
            window: 0,
            gamma: cfg.gamma,
            active: cfg.ideal_path,
            probing: false,
            below: 0,
            quality: [0.0, 0.0],
            theta_direct,
            profile_version: 0,
            reposition: false,
        }
    }

    /// Strategy for the next window.
    pub fn next_kind(&self, cfg: &StrategyConfig) -> StrategyKind {
        match cfg.kind {
            StrategyName::Spatial => StrategyKind::Spatial { gamma: self.gamma },
            StrategyName::Temporal => StrategyKind::Temporal {
                ris_share: self.gamma,
                ris_first: cfg.ris_first,
            },
            StrategyName::Opportunistic => match (self.active, self.probing) {
                (Some(active), false) => StrategyKind::Opportunistic { active },
                _ => StrategyKind::Spatial { gamma: PROBE_SHARE },
            },
        }
    }
}

fn prominence(est: Option<&VitalSignEstimate>) -> f64 {
    est.map_or(0.0, |e| e.peak_prominence_db)
}

/// Reallocate resources from the latest per-path estimates. A path without
/// an estimate counts as 0 dB.
pub fn evaluate_and_update(
    state: &LoopState,
    cfg: &StrategyConfig,
    est_direct: Option<&VitalSignEstimate>,
    est_ris: Option<&VitalSignEstimate>,
) -> LoopState {
    let mut s = state.clone();
    s.window += 1;
    let q = [prominence(est_direct), prominence(est_ris)];
    let observed = [est_direct.is_some(), est_ris.is_some()];
    for i in 0..2 {
        if observed[i] {
            s.quality[i] = q[i];
        }
    }
    let below = |p: PathKind| q[p as usize] < cfg.threshold;
    s.reposition = false;
    match cfg.kind {
        StrategyName::Spatial | StrategyName::Temporal => {
            let diff = q[PathKind::Ris as usize] - q[PathKind::Direct as usize];
            if cfg.adaptive && diff != 0.0 {
                s.gamma = (s.gamma + cfg.step * diff.signum()).clamp(GAMMA_MIN, GAMMA_MAX);
            }
            s.reposition = below(PathKind::Direct) && below(PathKind::Ris);
        }
        StrategyName::Opportunistic => {
            if cfg.ideal_path.is_some() {
                return s;
            }
            match s.active {
                None => {
                    s.active = Some(if q[PathKind::Ris as usize] >= q[PathKind::Direct as usize] {
                        PathKind::Ris
                    } else {
                        PathKind::Direct
                    });
                    s.reposition = below(PathKind::Direct) && below(PathKind::Ris);
                }
                Some(active) if !below(active) => {
                    s.below = 0;
                    s.probing = false;
                }
                Some(active) => {
                    s.below += 1;
                    if s.probing && s.below >= cfg.hysteresis {
                        if !below(active.other()) {
                            s.active = Some(active.other());
                            s.below = 0;
                            s.probing = false;
                        } else {
                            s.reposition = true;
                        }
                    } else {
                        s.probing = true;
                    }
                }
            }
        }
    }
    s
}

/// One iteration of the closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopStep {
    /// State the window was acquired with.
    pub state: LoopState,
    pub kind: StrategyKind,
    pub estimates: [Option<VitalSignEstimate>; 2],
}

impl LoopStep {
    pub fn estimate(&self, path: PathKind) -> Option<&VitalSignEstimate> {
        self.estimates[path as usize].as_ref()
    }

    pub fn log_line(&self) -> serde_json::Value {
        let path = |p: PathKind| {
            let e = self.estimate(p);
            json!({
                "peak_freq_hz": e.map(|e| e.peak_freq),
                "prominence_db": e.map(|e| e.peak_prominence_db),
            })
        };
        json!({
            "window": self.state.window,
            "strategy": self.kind.name(),
            "gamma": self.kind.ris_share(),
            "active": match self.kind {
                StrategyKind::Opportunistic { active } => Some(active),
                _ => None,
            },
            "theta_direct_deg": self.state.theta_direct.to_degrees(),
            "profile_version": self.state.profile_version,
            "direct": path(PathKind::Direct),
            "ris": path(PathKind::Ris),
        })
    }
}

pub fn write_loop_log<W: Write>(steps: &[LoopStep], mut out: W) -> std::io::Result<()> {
    for s in steps {
        writeln!(out, "{}", s.log_line())?;
    }
    Ok(())
}

/// Position estimate, RIS focus, then `n_windows` rounds of
/// schedule → measure → extract → evaluate. The position is re-estimated
/// whenever both paths fall below threshold.
pub fn run_closed_loop(sc: &Scenario, seed: u64, n_windows: usize) -> Result<Vec<LoopStep>> {
    if n_windows == 0 {
        return Ok(Vec::new());
    }
    let cfg = &sc.strategy;
    let mut env = Environment::build(sc, seed)?;
    let traces = sc.breathing_trace(seed, n_windows)?;
    let signals = PathSignals::build(sc, &traces, &env.angles, seed)?;
    let l_count = sc.window_samples();
    let mut probes = 0u32;
    let theta = locate_and_focus(sc, &mut env, &signals, 0, seed, probes)?;
    let mut state = LoopState::initial(cfg, theta);
    state.profile_version = env.profile_version;
    let mut steps = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let offset = w * l_count;
        if state.reposition {
            probes += 1;
            state.theta_direct = locate_and_focus(sc, &mut env, &signals, offset, seed, probes)?;
            state.profile_version = env.profile_version;
            state.reposition = false;
        }
        let kind = state.next_kind(cfg);
        let rx = ReceiveCombiners::new(&env, state.theta_direct)?;
        let schedule = plan_transmissions(&kind, l_count, &rx.a_direct, &rx.a_ris, env.total_power)?;
        let record = simulate_acquisition(&env, &signals, &schedule.weights, offset, seed, (Stream::Noise, w as u32))?;
        let estimates = extract_estimates(&record, &schedule, &rx, &sc.processing, env.wavelength)?;
        let next = evaluate_and_update(
            &state,
            cfg,
            estimates[PathKind::Direct as usize].as_ref(),
            estimates[PathKind::Ris as usize].as_ref(),
        );
        steps.push(LoopStep {
            state,
            kind,
            estimates,
        });
        state = next;
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ula_steering, ArrayConfig};
    use crate::physio::DisplacementTrace;
    use crate::sigproc::Spectrum;
    use proptest::prelude::*;

    fn steer(deg: f64) -> SteeringVector {
        ula_steering(&ArrayConfig::half_wavelength(5, 0.042).unwrap(), deg.to_radians())
    }

    fn est(path: PathKind, prom: f64) -> VitalSignEstimate {
        VitalSignEstimate {
            path,
            displacement: DisplacementTrace::new(vec![0.0; 8], 4.0, "x").unwrap(),
            spectrum: Spectrum {
                freqs: vec![],
                power: vec![],
            },
            peak_freq: 0.133,
            peak_prominence_db: prom,
        }
    }

    fn opp() -> StrategyConfig {
        StrategyConfig {
            kind: StrategyName::Opportunistic,
            ..StrategyConfig::default()
        }
    }

    #[test]
    fn spatial_is_constant_full_power() {
        let s = plan_transmissions(&StrategyKind::Spatial { gamma: 0.5 }, 240, &steer(0.0), &steer(28.0), 0.01).unwrap();
        assert!(s.weights.iter().all(|w| *w == s.weights[0]));
        assert!((s.weights[0].norm_squared() - 0.01).abs() < 1e-9 * 0.01);
        assert_eq!(s.slots(PathKind::Direct).len(), 240);
        assert_eq!(s.slots(PathKind::Ris).len(), 240);
    }

    #[test]
    fn temporal_halves() {
        let kind = StrategyKind::Temporal {
            ris_share: 0.5,
            ris_first: false,
        };
        let (ad, ar) = (steer(0.0), steer(28.0));
        let s = plan_transmissions(&kind, 240, &ad, &ar, 0.01).unwrap();
        assert_eq!(s.slots(PathKind::Direct), (0..120).collect::<Vec<_>>());
        assert_eq!(s.slots(PathKind::Ris), (120..240).collect::<Vec<_>>());
        for (l, w) in s.weights.iter().enumerate() {
            assert!((w.norm_squared() - 0.01).abs() < 1e-9 * 0.01);
            let (on, off) = if l < 120 { (&ad, &ar) } else { (&ar, &ad) };
            assert!(on.entries().dotc(w).norm() > 0.05);
            assert!(off.entries().dotc(w).norm() < 1e-9);
        }
    }

    #[test]
    fn opportunistic_ris_is_gamma_one_toward_ris() {
        let (ad, ar) = (steer(0.0), steer(28.0));
        let s = plan_transmissions(&StrategyKind::Opportunistic { active: PathKind::Ris }, 50, &ad, &ar, 0.01).unwrap();
        let full = split_precoder(&ar, &ad, 1.0, 0.01).unwrap();
        for w in &s.weights {
            assert!((w - full.weights()).norm() < 1e-12);
        }
        assert!(s.slots(PathKind::Direct).is_empty());
    }

    #[test]
    fn invalid_share_rejected() {
        let (ad, ar) = (steer(0.0), steer(28.0));
        assert!(plan_transmissions(&StrategyKind::Spatial { gamma: 1.2 }, 10, &ad, &ar, 0.01).is_err());
    }

    #[test]
    fn spatial_step_toward_better_path() {
        let cfg = StrategyConfig::default();
        let s0 = LoopState::initial(&cfg, 0.0);
        let s1 = evaluate_and_update(&s0, &cfg, Some(&est(PathKind::Direct, 2.0)), Some(&est(PathKind::Ris, 13.0)));
        assert!((s1.gamma - 0.6).abs() < 1e-12);
        assert!(!s1.reposition);
        let s2 = evaluate_and_update(&s0, &cfg, Some(&est(PathKind::Direct, 7.0)), Some(&est(PathKind::Ris, 7.0)));
        assert_eq!(s2.gamma, s0.gamma);
        let s3 = evaluate_and_update(&s0, &cfg, Some(&est(PathKind::Direct, 1.0)), Some(&est(PathKind::Ris, 1.0)));
        assert!(s3.reposition);
    }

    #[test]
    fn opportunistic_switches_after_two_bad_windows() {
        let cfg = opp();
        let mut s = LoopState::initial(&cfg, 0.0);
        s = evaluate_and_update(&s, &cfg, Some(&est(PathKind::Direct, 3.0)), Some(&est(PathKind::Ris, 12.0)));
        assert_eq!(s.active, Some(PathKind::Ris));
        assert_eq!(s.next_kind(&cfg), StrategyKind::Opportunistic { active: PathKind::Ris });
        // one bad window: probe, no switch yet
        s = evaluate_and_update(&s, &cfg, None, Some(&est(PathKind::Ris, 3.0)));
        assert_eq!((s.active, s.probing, s.below), (Some(PathKind::Ris), true, 1));
        assert_eq!(s.next_kind(&cfg), StrategyKind::Spatial { gamma: PROBE_SHARE });
        s = evaluate_and_update(&s, &cfg, Some(&est(PathKind::Direct, 9.0)), Some(&est(PathKind::Ris, 3.0)));
        assert_eq!((s.active, s.probing, s.below), (Some(PathKind::Direct), false, 0));
    }

    #[test]
    fn opportunistic_recovery_resets() {
        let cfg = opp();
        let mut s = LoopState::initial(&cfg, 0.0);
        s.active = Some(PathKind::Ris);
        s = evaluate_and_update(&s, &cfg, None, Some(&est(PathKind::Ris, 3.0)));
        s = evaluate_and_update(&s, &cfg, Some(&est(PathKind::Direct, 9.0)), Some(&est(PathKind::Ris, 8.0)));
        assert_eq!((s.active, s.probing, s.below), (Some(PathKind::Ris), false, 0));
    }

    #[test]
    fn opportunistic_both_bad_flags_reposition() {
        let cfg = opp();
        let mut s = LoopState::initial(&cfg, 0.0);
        s.active = Some(PathKind::Ris);
        s = evaluate_and_update(&s, &cfg, None, Some(&est(PathKind::Ris, 1.0)));
        s = evaluate_and_update(&s, &cfg, Some(&est(PathKind::Direct, 1.0)), Some(&est(PathKind::Ris, 1.0)));
        assert!(s.reposition);
        assert_eq!(s.active, Some(PathKind::Ris));
    }

    #[test]
    fn ideal_mode_never_moves() {
        let cfg = StrategyConfig {
            ideal_path: Some(PathKind::Direct),
            ..opp()
        };
        let mut s = LoopState::initial(&cfg, 0.0);
        for _ in 0..4 {
            s = evaluate_and_update(&s, &cfg, Some(&est(PathKind::Direct, 0.0)), None);
            assert_eq!(s.active, Some(PathKind::Direct));
            assert!(!s.probing);
        }
    }

    #[test]
    fn zero_windows_is_empty() {
        assert!(run_closed_loop(&Scenario::default(), 1, 0).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn adaptive_gamma_stays_clipped(proms in prop::collection::vec((0.0..30.0f64, 0.0..30.0f64), 1..60), g0 in 0.05..0.95f64) {
            let cfg = StrategyConfig { gamma: g0, ..StrategyConfig::default() };
            let mut s = LoopState::initial(&cfg, 0.0);
            for (pd, pr) in proms {
                s = evaluate_and_update(&s, &cfg, Some(&est(PathKind::Direct, pd)), Some(&est(PathKind::Ris, pr)));
                prop_assert!((GAMMA_MIN..=GAMMA_MAX).contains(&s.gamma));
                prop_assert!(s.quality.iter().all(|q| *q >= 0.0));
            }
        }

        #[test]
        fn no_chattering(proms in prop::collection::vec((0.0..12.0f64, 0.0..12.0f64), 1..80)) {
            let cfg = opp();
            let mut s = LoopState::initial(&cfg, 0.0);
            let mut last_switch: Option<usize> = None;
            let mut below_since_switch = 0;
            for (i, (pd, pr)) in proms.into_iter().enumerate() {
                let before = s.active;
                let kind = s.next_kind(&cfg);
                let (d, r) = match kind {
                    StrategyKind::Opportunistic { active: PathKind::Ris } => (None, Some(est(PathKind::Ris, pr))),
                    StrategyKind::Opportunistic { active: PathKind::Direct } => (Some(est(PathKind::Direct, pd)), None),
                    _ => (Some(est(PathKind::Direct, pd)), Some(est(PathKind::Ris, pr))),
                };
                if let Some(a) = before {
                    if [pd, pr][a as usize] < cfg.threshold {
                        below_since_switch += 1;
                    }
                }
                s = evaluate_and_update(&s, &cfg, d.as_ref(), r.as_ref());
                if before.is_some() && s.active != before {
                    if last_switch.is_some() {
                        prop_assert!(below_since_switch >= cfg.hysteresis);
                    }
                    last_switch = Some(i);
                    below_since_switch = 0;
                }
            }
        }
    }
}
