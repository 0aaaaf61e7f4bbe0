//! Executable acceptance checks. Each criterion runs standalone and reports
//! the measured values next to its verdict.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beamform::{min_norm_precoder, min_power_closed_form, split_precoder, steering_correlation, ConstraintPair};
use crate::geometry::{ula_steering, ArrayConfig, SteeringVector};
use crate::rng::{complex_gaussian, stream, Stream};
use crate::scenario::{acquire, gamma_sweep, lock_fraction, ChestFacing, Scenario, SweepRow};
use crate::sigproc::spectrum::{write_displacement_csv, VitalSignEstimate};
use crate::sigproc::{clutter_filter, detrend, main_lobe_width, moving_average_response, root_music_doa};
use crate::strategy::{StrategyKind, StrategyName};
use crate::{CMatrix, CVector, PathKind, Result, C64};

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "beamformer constraint satisfaction"),
    (2, "minimum-norm optimality"),
    (3, "fixed-budget split power"),
    (4, "noise-floor arithmetic"),
    (5, "demodulation fidelity"),
    (6, "clutter filter"),
    (7, "end-to-end RIS vs direct prominence"),
    (8, "gamma-sweep lock trend"),
    (9, "temporal main-lobe widening"),
    (10, "root-MUSIC accuracy"),
    (11, "determinism"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub measured: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.elapsed.as_secs_f64()
        )
    }
}

pub fn run_all() -> Vec<CriterionReport> {
    CRITERIA.iter().map(|(id, _)| run_criterion(*id)).collect()
}

pub fn run_criterion(id: u8) -> CriterionReport {
    let name = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown criterion", |c| c.1);
    let start = Instant::now();
    let outcome = match id {
        1 => constraint_satisfaction(),
        2 => min_norm_optimality(),
        3 => split_power(),
        4 => noise_floor(),
        5 => demod_fidelity(),
        6 => clutter(),
        7 => end_to_end(),
        8 => sweep_trend(),
        9 => lobe_widening(),
        10 => music_accuracy(),
        11 => determinism(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, measured) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionReport {
        id,
        name,
        passed,
        measured,
        elapsed: start.elapsed(),
    }
}

type Outcome = Result<(bool, String)>;

fn array() -> ArrayConfig {
    ArrayConfig::half_wavelength(5, crate::geometry::wavelength(7.15e9)).expect("valid array")
}

/// Random well-conditioned steering pair, `|a_c| ≤ 0.99`.
fn random_pair(rng: &mut ChaCha8Rng, cfg: &ArrayConfig) -> (SteeringVector, SteeringVector) {
    loop {
        let a1 = ula_steering(cfg, rng.random_range(-80.0f64..80.0).to_radians());
        let a2 = ula_steering(cfg, rng.random_range(-80.0f64..80.0).to_radians());
        if steering_correlation(&a1, &a2).norm() <= 0.99 {
            return (a1, a2);
        }
    }
}

fn constraint_satisfaction() -> Outcome {
    let cfg = array();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let start = Instant::now();
    for _ in 0..1000 {
        let (a1, a2) = random_pair(&mut rng, &cfg);
        let (g1, g2) = (rng.random_range(0.01..2.0), rng.random_range(0.01..2.0));
        let p = min_norm_precoder(&ConstraintPair::new(a1.clone(), a2.clone(), g1, g2)?)?;
        worst = worst
            .max((p.response(&a1).norm() - g1).abs() / g1)
            .max((p.response(&a2).norm() - g2).abs() / g2);
    }
    let t = start.elapsed().as_secs_f64();
    Ok((worst <= 1e-9 && t < 5.0, format!("max relative error {worst:.2e} over 1000 instances in {t:.2} s")))
}

/// Least-norm power through an SVD pseudo-inverse, minimized over a Δφ grid
/// and refined by ternary search.
fn brute_force_power(c: &ConstraintPair) -> f64 {
    let m = c.a1.len();
    let mut a = CMatrix::zeros(m, 2);
    a.set_column(0, c.a1.entries());
    a.set_column(1, c.a2.entries());
    let pinv_h = a.adjoint().pseudo_inverse(1e-14).expect("pseudo-inverse");
    let power = |dphi: f64| {
        let g = CVector::from_vec(vec![C64::from_polar(c.gamma1, dphi), C64::new(c.gamma2, 0.0)]);
        (&pinv_h * g).norm_squared()
    };
    let grid = 3600;
    let step = 2.0 * PI / grid as f64;
    let best = (0..grid)
        .map(|i| (i, power(i as f64 * step)))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
        .0;
    let (mut lo, mut hi) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if power(m1) < power(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    power(0.5 * (lo + hi))
}

fn min_norm_optimality() -> Outcome {
    let cfg = array();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_closed, mut worst_oracle): (f64, f64) = (0.0, 0.0);
    let start = Instant::now();
    for _ in 0..100 {
        let (a1, a2) = random_pair(&mut rng, &cfg);
        let (g1, g2) = (rng.random_range(0.01..2.0), rng.random_range(0.01..2.0));
        let c = ConstraintPair::new(a1, a2, g1, g2)?;
        let p = min_norm_precoder(&c)?.achieved_power();
        let closed = min_power_closed_form(g1, g2, c.correlation())?;
        worst_closed = worst_closed.max((p - closed).abs() / closed);
        worst_oracle = worst_oracle.max((p - brute_force_power(&c)).abs() / p);
    }
    let t = start.elapsed().as_secs_f64();
    Ok((
        worst_closed <= 1e-9 && worst_oracle <= 1e-6 && t < 30.0,
        format!("closed-form rel err {worst_closed:.2e}, brute-force rel err {worst_oracle:.2e}, {t:.2} s"),
    ))
}

fn split_power() -> Outcome {
    let cfg = array();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p_total = 0.01;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (a1, a2) = random_pair(&mut rng, &cfg);
        for i in 0..=10 {
            let w = split_precoder(&a1, &a2, i as f64 / 10.0, p_total)?;
            worst = worst.max((w.achieved_power() - p_total).abs() / p_total);
        }
    }
    Ok((worst <= 1e-9, format!("max |wᴴw − P|/P = {worst:.2e} over 100 geometries × 11 shares")))
}

fn noise_floor() -> Outcome {
    let dbm = Scenario::default().radar.noise_floor_dbm();
    let shown = format!("{dbm:.1}");
    Ok((shown == "-107.0", format!("σ² = {dbm:.4} dBm ({shown} dBm)")))
}

/// Noiseless direct-path-only acquisition with the chest facing the radar.
pub fn single_path_scenario() -> Scenario {
    let mut sc = Scenario::default();
    sc.channel.noise = false;
    sc.channel.clutter = false;
    sc.channel.los_only = true;
    sc.placement.chest_facing = ChestFacing::Radar;
    sc.physio.breathing.harmonics = 0;
    sc.physio.ris.reflectivity = 0.0;
    sc.processing.clutter_filter = false;
    sc.strategy.estimate_position = false;
    sc
}

fn demod_fidelity() -> Outcome {
    let sc = single_path_scenario();
    let start = Instant::now();
    let run = acquire(&sc, &StrategyKind::Opportunistic { active: PathKind::Direct }, 1)?;
    let est = run.estimate(PathKind::Direct).ok_or_else(|| crate::invalid("no direct estimate"))?;
    let mut truth = run.truth.samples().to_vec();
    detrend(&mut truth);
    let rmse = (est
        .displacement
        .samples()
        .iter()
        .zip(&truth)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / truth.len() as f64)
        .sqrt();
    let amplitude = sc.physio.breathing.peak_to_peak / 2.0;
    let bin = sc.processing.bin_width(sc.slow_rate());
    let f_err = (est.peak_freq - sc.physio.breathing.rate).abs();
    let t = start.elapsed().as_secs_f64();
    Ok((
        rmse < 0.01 * amplitude && f_err <= bin && t < 5.0,
        format!(
            "RMSE {:.3e} m ({:.4}% of amplitude), peak {:.4} Hz (|err| {:.4} ≤ bin {:.4}), {t:.2} s",
            rmse,
            100.0 * rmse / amplitude,
            est.peak_freq,
            f_err,
            bin
        ),
    ))
}

fn clutter() -> Outcome {
    let l = 240;
    let rate = 4.0;
    let constant = CMatrix::from_element(3, l, C64::new(0.8, -1.3));
    let mut worst_dc: f64 = 0.0;
    for w in (3..=l).step_by(2) {
        let out = clutter_filter(&constant, w)?;
        worst_dc = worst_dc.max(out.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    // a complex exponential is an eigenfunction of the centered moving average
    let (f, w) = (0.133, 21);
    let x = CMatrix::from_fn(1, l, |_, i| C64::new(0.5, 0.0) + C64::from_polar(1.0, 2.0 * PI * f * i as f64 / rate));
    let y = clutter_filter(&x, w)?;
    let expect = 1.0 - moving_average_response(f, w, rate);
    let dc_gain = moving_average_response(0.0, w, rate);
    let mut worst_gain: f64 = 0.0;
    for i in w / 2..l - w / 2 {
        let tone = C64::from_polar(1.0, 2.0 * PI * f * i as f64 / rate);
        let got = (y[(0, i)] - C64::new(0.5 * (1.0 - dc_gain), 0.0)) / tone;
        worst_gain = worst_gain.max((got - expect).norm());
    }
    Ok((
        worst_dc <= 1e-12 && worst_gain <= 1e-6,
        format!("max |DC residue| {worst_dc:.2e}, attenuation {expect:.6} matched within {worst_gain:.2e}"),
    ))
}

fn seeds(sc: &Scenario) -> Vec<u64> {
    sc.sweep.seed_list()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn prominences(rows: &[SweepRow], path: PathKind) -> Vec<f64> {
    rows.iter()
        .filter(|r| r.path == path)
        .map(|r| r.prominence_db.unwrap_or(0.0))
        .collect()
}

fn end_to_end() -> Outcome {
    let sc = Scenario::default();
    let start = Instant::now();
    let rows = gamma_sweep(&sc, StrategyName::Spatial, &[0.5], &seeds(&sc))?;
    let ris = prominences(&rows, PathKind::Ris);
    let direct = prominences(&rows, PathKind::Direct);
    let wins = ris.iter().zip(&direct).filter(|(r, d)| r > d).count();
    let frac = wins as f64 / ris.len() as f64;
    let med = median(ris);
    let t = start.elapsed().as_secs_f64();
    Ok((
        frac >= 0.9 && med >= 10.0 && t < 120.0,
        format!(
            "RIS > direct in {wins}/{} seeds, median RIS {med:.1} dB, median direct {:.1} dB, {t:.1} s",
            direct.len(),
            median(direct.clone())
        ),
    ))
}

/// Per-share RIS lock fractions for one strategy on the default grid.
pub fn lock_curve(sc: &Scenario, name: StrategyName) -> Result<Vec<(f64, f64)>> {
    let grid = &sc.sweep.gammas;
    let rows = gamma_sweep(sc, name, grid, &seeds(sc))?;
    let tol = sc.processing.bin_width(sc.slow_rate());
    let f = sc.physio.breathing.rate;
    Ok(grid
        .iter()
        .map(|&g| (g, lock_fraction(&rows, g, PathKind::Ris, f, tol)))
        .collect())
}

fn first_share_reaching(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    curve.iter().find(|(_, l)| *l >= level).map(|(g, _)| *g)
}

fn sweep_trend() -> Outcome {
    let sc = Scenario::default();
    let start = Instant::now();
    let spatial = lock_curve(&sc, StrategyName::Spatial)?;
    let temporal = lock_curve(&sc, StrategyName::Temporal)?;
    let monotone = |c: &[(f64, f64)]| c.windows(2).all(|p| p[1].1 >= p[0].1);
    let at_half = spatial
        .iter()
        .find(|(g, _)| (*g - 0.5).abs() < 1e-9)
        .map_or(0.0, |p| p.1);
    let s_spatial = first_share_reaching(&spatial, 0.9);
    let s_temporal = first_share_reaching(&temporal, 0.9);
    let ordered = matches!((s_spatial, s_temporal), (Some(s), Some(t)) if t > s);
    let t = start.elapsed().as_secs_f64();
    let fmt_curve = |c: &[(f64, f64)]| c.iter().map(|(_, l)| format!("{l:.2}")).collect::<Vec<_>>().join(" ");
    Ok((
        monotone(&spatial) && monotone(&temporal) && at_half >= 0.9 && ordered && t < 600.0,
        format!(
            "spatial [{}], temporal [{}]; 90% reached at share {:?} (spatial) vs {:?} (temporal), {t:.0} s",
            fmt_curve(&spatial),
            fmt_curve(&temporal),
            s_spatial,
            s_temporal
        ),
    ))
}

fn lobe_widening() -> Outcome {
    let sc = Scenario::default();
    let band = sc.processing.band;
    let width = |kind: StrategyKind| -> Result<f64> {
        let run = acquire(&sc, &kind, sc.seed)?;
        let est: &VitalSignEstimate = run.estimate(PathKind::Ris).ok_or_else(|| crate::invalid("no RIS estimate"))?;
        main_lobe_width(&est.spectrum, band)
    };
    let spatial = width(StrategyKind::Spatial { gamma: 0.5 })?;
    let temporal = width(StrategyKind::Temporal {
        ris_share: 0.5,
        ris_first: false,
    })?;
    let ratio = temporal / spatial;
    Ok((
        (ratio - 2.0).abs() <= 0.2,
        format!("main lobe {temporal:.4} Hz temporal vs {spatial:.4} Hz spatial, ratio {ratio:.3}"),
    ))
}

fn music_accuracy() -> Outcome {
    let cfg = array();
    let m = cfg.element_count;
    let noise = 10f64.powf(-20.0 / 10.0);
    let mut errs = Vec::with_capacity(100);
    for seed in 0..100u64 {
        let mut rng = stream(seed, Stream::Probe);
        let theta = rng.random_range(-60.0f64..60.0).to_radians();
        let a = ula_steering(&cfg, theta).entries() * C64::new((m as f64).sqrt(), 0.0);
        let mut y = CMatrix::zeros(m, 200);
        for k in 0..200 {
            let s = complex_gaussian(&mut rng, 1.0);
            for i in 0..m {
                y[(i, k)] = a[i] * s + complex_gaussian(&mut rng, noise);
            }
        }
        let est = root_music_doa(&y, 1, &cfg)?;
        errs.push((est[0] - theta).abs().to_degrees());
    }
    let med = median(errs);
    Ok((med < 0.5, format!("median |error| {med:.4}° over 100 seeds")))
}

/// Every exported artifact of one acquisition, concatenated.
fn acquisition_bytes(sc: &Scenario) -> Result<Vec<u8>> {
    let run = acquire(sc, &StrategyKind::Spatial { gamma: 0.5 }, sc.seed)?;
    let mut out = Vec::new();
    for path in PathKind::BOTH {
        if let Some(e) = run.estimate(path) {
            write_displacement_csv(&e.displacement, &mut out)?;
            e.spectrum.write_csv(&mut out)?;
        }
    }
    let rows = gamma_sweep(sc, StrategyName::Temporal, &[0.3, 0.7], &[sc.seed, sc.seed + 1])?;
    crate::scenario::write_sweep_csv(&rows, &mut out)?;
    let steps = crate::strategy::run_closed_loop(sc, sc.seed, 2)?;
    crate::strategy::write_loop_log(&steps, &mut out)?;
    Ok(out)
}

fn determinism() -> Outcome {
    let sc = Scenario::default();
    let a = acquisition_bytes(&sc)?;
    let b = acquisition_bytes(&sc)?;
    Ok((a == b, format!("{} bytes of acquire, sweep and loop output, identical: {}", a.len(), a == b)))
}
