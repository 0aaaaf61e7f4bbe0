//! Receive beamforming into per-path series and phase-to-displacement.

use std::f64::consts::PI;

use crate::physio::DisplacementTrace;
use crate::{CMatrix, CVector, Error, Result, C64};

/// `r = wᴴY` for each of the two receive combiners.
pub fn separate_paths(y: &CMatrix, w_direct: &CVector, w_ris: &CVector) -> Result<(Vec<C64>, Vec<C64>)> {
    Ok((combine(y, w_direct)?, combine(y, w_ris)?))
}

pub fn combine(y: &CMatrix, w: &CVector) -> Result<Vec<C64>> {
    if w.len() != y.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "combiner of length {} for {} receive channels",
            w.len(),
            y.nrows()
        )));
    }
    Ok((0..y.ncols()).map(|l| w.dotc(&y.column(l))).collect())
}

/// Cumulative unwrap: successive differences are wrapped into (−π, π].
pub fn unwrap_phase(phase: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    for (i, &p) in phase.iter().enumerate() {
        if i > 0 {
            let raw = p - phase[i - 1];
            let mut d = raw.rem_euclid(2.0 * PI);
            if d > PI {
                d -= 2.0 * PI;
            }
            offset += d - raw;
        }
        out.push(p + offset);
    }
    out
}

/// Remove the least-squares line.
pub fn detrend(x: &mut [f64]) {
    let n = x.len() as f64;
    if x.len() < 2 {
        return;
    }
    let t_mean = (n - 1.0) / 2.0;
    let x_mean = x.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let t = i as f64 - t_mean;
        sxy += t * (v - x_mean);
        sxx += t * t;
    }
    let slope = sxy / sxx;
    for (i, v) in x.iter_mut().enumerate() {
        *v -= x_mean + slope * (i as f64 - t_mean);
    }
}

/// `d[l] = λ/(4π)·unwrap(∠r[l])`, optionally detrended.
pub fn phase_demodulate(r: &[C64], wavelength: f64, slow_rate: f64, detrend_on: bool) -> Result<DisplacementTrace> {
    if let Some(i) = r.iter().position(|z| z.norm() == 0.0 || !z.norm().is_finite()) {
        return Err(Error::ZeroSample(i));
    }
    let wrapped: Vec<f64> = r.iter().map(|z| z.arg()).collect();
    let mut phi = unwrap_phase(&wrapped);
    if detrend_on {
        detrend(&mut phi);
    }
    let scale = wavelength / (4.0 * PI);
    DisplacementTrace::new(phi.iter().map(|p| p * scale).collect(), slow_rate, "demodulated")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ula_steering, ArrayConfig};
    use crate::physio::modulate;
    use proptest::prelude::*;

    const LAMBDA: f64 = 0.041928;

    fn tone(d0: f64, f: f64, n: usize) -> Vec<f64> {
        (0..n).map(|l| d0 * (2.0 * PI * f * l as f64 / 4.0).sin()).collect()
    }

    #[test]
    fn recovers_small_modulation() {
        let d = tone(LAMBDA / 10.0, 0.133, 240);
        let r = modulate(1.0, &d, LAMBDA);
        let out = phase_demodulate(&r, LAMBDA, 4.0, false).unwrap();
        for (a, b) in out.samples().iter().zip(&d) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn unwrap_follows_long_ramp() {
        // path-length ramp of several wavelengths, 0.9 rad per sample
        let truth: Vec<f64> = (0..200).map(|l| 0.9 * l as f64 - 3.0).collect();
        let r: Vec<C64> = truth.iter().map(|p| C64::from_polar(2.0, *p)).collect();
        let out = phase_demodulate(&r, LAMBDA, 4.0, false).unwrap();
        let offset = truth[0] - r[0].arg();
        for (a, p) in out.samples().iter().zip(&truth) {
            assert!((a * 4.0 * PI / LAMBDA - (p - offset)).abs() < 1e-9);
        }
    }

    #[test]
    fn global_phase_is_removed_by_detrend() {
        let d = tone(0.01, 0.2, 240);
        let r = modulate(1.0, &d, LAMBDA);
        let rot: Vec<C64> = r.iter().map(|z| z * C64::from_polar(1.0, 2.1)).collect();
        let a = phase_demodulate(&r, LAMBDA, 4.0, true).unwrap();
        let b = phase_demodulate(&rot, LAMBDA, 4.0, true).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_sample_named() {
        let mut r = vec![C64::new(1.0, 0.0); 10];
        r[7] = C64::new(0.0, 0.0);
        assert!(matches!(phase_demodulate(&r, LAMBDA, 4.0, true), Err(Error::ZeroSample(7))));
    }

    #[test]
    fn nulled_path_vanishes_and_rank_one_is_exact() {
        let cfg = ArrayConfig::half_wavelength(5, 1.0).unwrap();
        let a_d = ula_steering(&cfg, 0.0);
        let a_r = ula_steering(&cfg, 0.5);
        let w_r = crate::beamform::path_beam(crate::PathKind::Ris, &a_d, &a_r, 1.0).unwrap().weights().clone();
        let x: Vec<C64> = (0..50).map(|l| C64::from_polar(1.0 + 0.01 * l as f64, 0.3 * l as f64)).collect();
        let xr = CVector::from_vec(x.clone()).transpose();
        let y_d = a_d.entries() * &xr;
        let r = combine(&y_d, &w_r).unwrap();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() <= 1e-9 * xnorm);
        let y_r = a_r.entries() * &xr;
        let g = w_r.dotc(a_r.entries());
        for (got, xi) in combine(&y_r, &w_r).unwrap().iter().zip(&x) {
            assert!((got - g * xi).norm() < 1e-12);
        }
    }

    #[test]
    fn superposition_crosstalk_is_bounded() {
        let cfg = ArrayConfig::half_wavelength(5, 1.0).unwrap();
        let a_d = ula_steering(&cfg, 0.05);
        let a_r = ula_steering(&cfg, 0.49);
        // plain matched combiners, no nulls: cross-talk is |w_Dᴴ a_RIS|
        let w_d = a_d.entries().clone();
        let w_r = a_r.entries().clone();
        let xd: Vec<C64> = (0..40).map(|l| C64::from_polar(1.0, 0.2 * l as f64)).collect();
        let xr: Vec<C64> = (0..40).map(|l| C64::from_polar(0.5, -0.7 * l as f64)).collect();
        let y = a_d.entries() * CVector::from_vec(xd.clone()).transpose()
            + a_r.entries() * CVector::from_vec(xr.clone()).transpose();
        let (rd, rr) = separate_paths(&y, &w_d, &w_r).unwrap();
        let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let err_d: Vec<C64> = rd.iter().zip(&xd).map(|(a, b)| a - b).collect();
        let err_r: Vec<C64> = rr.iter().zip(&xr).map(|(a, b)| a - b).collect();
        assert!(norm(&err_d) <= w_d.dotc(a_r.entries()).norm() * norm(&xr) + 1e-12);
        assert!(norm(&err_r) <= w_r.dotc(a_d.entries()).norm() * norm(&xd) + 1e-12);
        let bad = CVector::zeros(3);
        assert!(separate_paths(&y, &bad, &w_r).is_err());
    }

    proptest! {
        #[test]
        fn demod_inverts_small_motion(d0 in 0.0f64..LAMBDA / 8.0 * 0.99, f in 0.05f64..1.9, phase0 in -3.0f64..3.0) {
            let d = tone(d0, f, 100);
            let r: Vec<C64> = modulate(1.0, &d, LAMBDA).iter().map(|z| z * C64::from_polar(1.0, phase0)).collect();
            let out = phase_demodulate(&r, LAMBDA, 4.0, false).unwrap();
            let offset = out.samples()[0] - d[0];
            for (a, b) in out.samples().iter().zip(&d) {
                prop_assert!((a - offset - b).abs() < 1e-9);
            }
        }

        #[test]
        fn unwrap_recovers_smooth_phase(steps in prop::collection::vec(-3.0f64..3.0, 2..200), start in -10.0f64..10.0) {
            let mut truth = vec![start];
            for s in &steps {
                let last = *truth.last().unwrap();
                truth.push(last + s);
            }
            let wrapped: Vec<f64> = truth.iter().map(|p| C64::from_polar(1.0, *p).arg()).collect();
            let un = unwrap_phase(&wrapped);
            let off = truth[0] - un[0];
            for (u, t) in un.iter().zip(&truth) {
                prop_assert!((u + off - t).abs() < 1e-9);
            }
        }
    }
}
