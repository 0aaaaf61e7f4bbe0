use proptest::prelude::*;
use risvs_core::geometry::{ula_steering, ArrayConfig};
use risvs_core::physio::{synth_respiration, write_trace_csv, BreathingParams};
use risvs_core::scenario::{acquire, gamma_sweep, lock_fraction, Scenario};
use risvs_core::strategy::{plan_transmissions, StrategyKind, StrategyName};
use risvs_core::PathKind;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn starved_path_looks_like_noise_only() {
    // spatial γ = 0 leaves the RIS branch with leakage and noise only
    let sc = Scenario::default();
    let seeds: Vec<u64> = (1..=20).collect();
    let starved = gamma_sweep(&sc, StrategyName::Spatial, &[0.0], &seeds).unwrap();
    let mut silent = sc.clone();
    silent.physio.ris.reflectivity = 0.0;
    silent.physio.direct.reflectivity = 0.0;
    let noise_only = gamma_sweep(&silent, StrategyName::Spatial, &[0.0], &seeds).unwrap();
    let tol = sc.processing.bin_width(sc.slow_rate());
    let f = sc.physio.breathing.rate;
    let lock = lock_fraction(&starved, 0.0, PathKind::Ris, f, tol);
    let lock_noise = lock_fraction(&noise_only, 0.0, PathKind::Ris, f, tol);
    assert!(lock <= lock_noise + 0.15, "{lock} vs {lock_noise}");
    let prom = |rows: &[risvs_core::scenario::SweepRow]| {
        median(rows.iter().filter(|r| r.path == PathKind::Ris).map(|r| r.prominence_db.unwrap()).collect())
    };
    let (a, b) = (prom(&starved), prom(&noise_only));
    assert!((a - b).abs() < 3.0, "starved {a:.1} dB vs noise-only {b:.1} dB");
}

#[test]
fn single_gamma_sweep_matches_acquire() {
    let sc = Scenario::default();
    let rows = gamma_sweep(&sc, StrategyName::Temporal, &[0.7], &[4, 5]).unwrap();
    for seed in [4, 5] {
        let run = acquire(&sc, &StrategyKind::Temporal { ris_share: 0.7, ris_first: false }, seed).unwrap();
        for path in PathKind::BOTH {
            let row = rows.iter().find(|r| r.seed == seed && r.path == path).unwrap();
            assert_eq!(row.peak_freq_hz, run.estimate(path).map(|e| e.peak_freq));
            assert_eq!(row.prominence_db, run.estimate(path).map(|e| e.peak_prominence_db));
        }
    }
}

#[test]
fn measured_trace_drives_the_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let p = BreathingParams::default();
    let front = synth_respiration(&p, 60.0, 4.0, 1).unwrap();
    let side = synth_respiration(&BreathingParams { peak_to_peak: 0.004, ..p }, 60.0, 4.0, 2).unwrap();
    write_trace_csv(&path, &front, Some(&side)).unwrap();
    let mut sc = Scenario::default();
    sc.physio.trace_file = Some(path);
    let run = acquire(&sc, &StrategyKind::Spatial { gamma: 0.5 }, 1).unwrap();
    let ris = run.estimate(PathKind::Ris).unwrap();
    assert!((ris.peak_freq - 0.133).abs() <= sc.processing.bin_width(4.0));
    // the file stores centimetres, so samples round-trip to within an ulp
    for (a, b) in run.truth.samples().iter().zip(front.samples()) {
        assert!((a - b).abs() <= 1e-17);
    }

    let mut short = sc.clone();
    let stub = dir.path().join("short.csv");
    write_trace_csv(&stub, &front.window(0, 100).unwrap(), None).unwrap();
    short.physio.trace_file = Some(stub);
    assert!(acquire(&short, &StrategyKind::Spatial { gamma: 0.5 }, 1).is_err());
}

#[test]
fn temporal_split_widens_the_lobe_on_every_seed() {
    let sc = Scenario::default();
    for seed in 1..=5 {
        let w = |kind| {
            let run = acquire(&sc, &kind, seed).unwrap();
            risvs_core::sigproc::main_lobe_width(&run.estimate(PathKind::Ris).unwrap().spectrum, sc.processing.band).unwrap()
        };
        let ratio = w(StrategyKind::Temporal { ris_share: 0.5, ris_first: true }) / w(StrategyKind::Spatial { gamma: 0.5 });
        assert!((ratio - 2.0).abs() < 0.3, "seed {seed}: {ratio}");
    }
}

proptest! {
    #[test]
    fn schedules_respect_power_budget(
        td in -70.0f64..70.0,
        tr in -70.0f64..70.0,
        share in 0.0f64..=1.0,
        which in 0usize..3,
        p in 1e-4f64..1.0,
    ) {
        let cfg = ArrayConfig::half_wavelength(5, 0.042).unwrap();
        let (ad, ar) = (ula_steering(&cfg, td.to_radians()), ula_steering(&cfg, tr.to_radians()));
        prop_assume!(ad.entries().dotc(ar.entries()).norm() < 0.95);
        let kind = match which {
            0 => StrategyKind::Spatial { gamma: share },
            1 => StrategyKind::Temporal { ris_share: share, ris_first: false },
            _ => StrategyKind::Opportunistic { active: if share > 0.5 { PathKind::Ris } else { PathKind::Direct } },
        };
        let s = plan_transmissions(&kind, 40, &ad, &ar, p).unwrap();
        for w in &s.weights {
            let pw = w.norm_squared();
            prop_assert!(pw <= p * (1.0 + 1e-9));
            prop_assert!((pw - p).abs() <= 1e-9 * p);
        }
        let (nd, nr) = (s.slots(PathKind::Direct).len(), s.slots(PathKind::Ris).len());
        match kind {
            StrategyKind::Temporal { .. } => prop_assert_eq!(nd + nr, 40),
            StrategyKind::Spatial { .. } => prop_assert_eq!((nd, nr), (40, 40)),
            StrategyKind::Opportunistic { .. } => prop_assert_eq!(nd + nr, 40),
        }
    }

    #[test]
    fn aliased_rates_never_simulate(rate in 2.0f64..10.0) {
        let mut sc = Scenario::default();
        sc.physio.breathing.rate = rate;
        let kind = StrategyKind::Spatial { gamma: 0.5 };
        prop_assert!(acquire(&sc, &kind, 1).is_err());
    }
}
