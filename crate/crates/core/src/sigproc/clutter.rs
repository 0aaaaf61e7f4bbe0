//! Slow-time moving-average clutter removal.

use std::f64::consts::PI;

use crate::{CMatrix, Result, C64};

/// Subtract the length-`w` slow-time moving average from every row.
///
/// Interior samples use the centered window. Near the edges the window keeps
/// its full length and is shifted inward, so every output is an exact
/// `w`-point mean removal and `w = L` reduces to plain mean removal.
pub fn clutter_filter(y: &CMatrix, w: usize) -> Result<CMatrix> {
    let l = y.ncols();
    if w % 2 == 0 || w < 3 || w > l {
        return Err(crate::invalid(format!(
            "clutter window {w} must be odd and within [3, {l}]"
        )));
    }
    let half = w / 2;
    let scale = 1.0 / w as f64;
    let mut out = CMatrix::zeros(y.nrows(), l);
    for m in 0..y.nrows() {
        for j in 0..l {
            let start = j.saturating_sub(half).min(l - w);
            let mean: C64 = (start..start + w).map(|i| y[(m, i)]).sum::<C64>() * scale;
            out[(m, j)] = y[(m, j)] - mean;
        }
    }
    Ok(out)
}

/// Frequency response of the centered `w`-point moving average,
/// `sin(π f w / rate) / (w sin(π f / rate))`.
pub fn moving_average_response(f: f64, w: usize, rate: f64) -> f64 {
    let x = PI * f / rate;
    if x.sin().abs() < 1e-15 {
        return 1.0;
    }
    (x * w as f64).sin() / (w as f64 * x.sin())
}
