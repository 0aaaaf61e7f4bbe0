//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured values. Run with `--nocapture` to see the lines.

use risvs_core::selftest::run_criterion;

fn check(id: u8) {
    let report = run_criterion(id);
    println!("{report}");
    assert!(report.passed, "{report}");
}

#[test]
fn criterion_01_beamformer_constraints() {
    check(1);
}

#[test]
fn criterion_02_minimum_norm_optimality() {
    check(2);
}

#[test]
fn criterion_03_fixed_budget_split() {
    check(3);
}

#[test]
fn criterion_04_noise_floor() {
    check(4);
}

#[test]
fn criterion_05_demodulation_fidelity() {
    check(5);
}

#[test]
fn criterion_06_clutter_filter() {
    check(6);
}

#[test]
fn criterion_07_end_to_end_prominence() {
    check(7);
}

#[test]
fn criterion_08_gamma_sweep_trend() {
    check(8);
}

#[test]
fn criterion_09_temporal_lobe_widening() {
    check(9);
}

#[test]
fn criterion_10_root_music() {
    check(10);
}

#[test]
fn criterion_11_determinism() {
    check(11);
}
