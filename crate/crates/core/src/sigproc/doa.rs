//! Root-MUSIC direction finding for a uniform linear array.

use std::f64::consts::PI;

use crate::geometry::ArrayConfig;
use crate::{CMatrix, Error, Result, C64};

/// Azimuths (radians) of the `n_sources` strongest plane waves in
/// `snapshots` (M×T, column per snapshot), ordered by root distance to the
/// unit circle.
pub fn root_music_doa(snapshots: &CMatrix, n_sources: usize, cfg: &ArrayConfig) -> Result<Vec<f64>> {
    let m = snapshots.nrows();
    let t = snapshots.ncols();
    if m != cfg.element_count {
        return Err(Error::ShapeMismatch(format!("{m} snapshot rows for a {}-element array", cfg.element_count)));
    }
    if n_sources == 0 || n_sources >= m {
        return Err(crate::invalid(format!("source count {n_sources} must be in [1, {}]", m - 1)));
    }
    if t < m {
        return Err(crate::invalid(format!("{t} snapshots are fewer than {m} array elements")));
    }
    let r = snapshots * snapshots.adjoint() / C64::new(t as f64, 0.0);
    let eig = r.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut noise = CMatrix::zeros(m, m - n_sources);
    for (j, &i) in order.iter().take(m - n_sources).enumerate() {
        noise.set_column(j, &eig.eigenvectors.column(i));
    }
    let c = &noise * noise.adjoint();

    // aᴴ(z) C a(z) = Σ_k b_k z^k with b_k = Σ_{n−m=k} C[m,n]; multiplied by
    // z^{M−1} this is a degree-2(M−1) polynomial, highest power first below.
    let deg = 2 * (m - 1);
    let mut coeffs = vec![C64::new(0.0, 0.0); deg + 1];
    for i in 0..m {
        for j in 0..m {
            let power = j + m - 1 - i;
            coeffs[deg - power] += c[(i, j)];
        }
    }
    let roots = polynomial_roots(&coeffs)?;
    let mut inside: Vec<C64> = roots.into_iter().filter(|z| z.norm() <= 1.0 + 1e-9).collect();
    inside.sort_by(|a, b| (1.0 - a.norm()).abs().total_cmp(&(1.0 - b.norm()).abs()));
    let mut angles = Vec::with_capacity(n_sources);
    for z in inside {
        let s = cfg.wavelength * z.arg() / (2.0 * PI * cfg.spacing);
        if s.abs() <= 1.0 {
            angles.push(s.asin());
            if angles.len() == n_sources {
                return Ok(angles);
            }
        }
    }
    Err(Error::Doa(format!(
        "only {} admissible roots for {n_sources} sources",
        angles.len()
    )))
}

/// Roots of `c[0] z^n + c[1] z^{n−1} + … + c[n]` via companion-matrix
/// eigenvalues.
fn polynomial_roots(c: &[C64]) -> Result<Vec<C64>> {
    let n = c.len() - 1;
    if c[0].norm() == 0.0 {
        return Err(Error::Doa("degenerate root-MUSIC polynomial".into()));
    }
    let mut comp = CMatrix::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    let ev = comp
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::Doa("companion eigenvalues did not converge".into()))?;
    Ok(ev.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ula_steering;
    use crate::rng::{complex_gaussian, stream, Stream};

    fn snapshots(cfg: &ArrayConfig, angles: &[f64], t: usize, snr_db: f64, seed: u64) -> CMatrix {
        let mut rng = stream(seed, Stream::Probe);
        let noise = 10f64.powf(-snr_db / 10.0);
        let mut y = CMatrix::zeros(cfg.element_count, t);
        for &th in angles {
            // unnormalized steering so each element sees unit source power
            let a = ula_steering(cfg, th).entries() * C64::new((cfg.element_count as f64).sqrt(), 0.0);
            for k in 0..t {
                let s = complex_gaussian(&mut rng, 1.0);
                y.column_mut(k).axpy(s, &a, C64::new(1.0, 0.0));
            }
        }
        for z in y.iter_mut() {
            *z += complex_gaussian(&mut rng, noise);
        }
        y
    }

    #[test]
    fn polynomial_roots_known() {
        // (z − 1)(z − 2j) = z² − (1+2j) z + 2j
        let roots = polynomial_roots(&[C64::new(1.0, 0.0), C64::new(-1.0, -2.0), C64::new(0.0, 2.0)]).unwrap();
        assert!(roots.iter().any(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-12));
        assert!(roots.iter().any(|z| (z - C64::new(0.0, 2.0)).norm() < 1e-12));
    }

    #[test]
    fn noiseless_broadside() {
        let cfg = ArrayConfig::half_wavelength(5, 0.04).unwrap();
        let a = ula_steering(&cfg, 0.0);
        let mut y = CMatrix::zeros(5, 100);
        for k in 0..100 {
            y.set_column(k, &(a.entries() * C64::from_polar(1.0, 0.37 * k as f64)));
        }
        // rank-one covariance: add a tiny white floor so the noise subspace is well defined
        let mut rng = stream(1, Stream::Probe);
        for z in y.iter_mut() {
            *z += complex_gaussian(&mut rng, 1e-24);
        }
        let th = root_music_doa(&y, 1, &cfg).unwrap();
        assert!(th[0].to_degrees().abs() < 1e-6, "{}", th[0].to_degrees());
    }

    #[test]
    fn two_sources_at_twenty_degrees() {
        let cfg = ArrayConfig::half_wavelength(5, 1.0).unwrap();
        let truth = [20f64.to_radians(), -20f64.to_radians()];
        let mut errs: Vec<f64> = (0..100)
            .map(|seed| {
                let mut est = root_music_doa(&snapshots(&cfg, &truth, 200, 20.0, seed), 2, &cfg).unwrap();
                est.sort_by(f64::total_cmp);
                (est[0] - truth[1]).abs().max((est[1] - truth[0]).abs()).to_degrees()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        assert!(errs[50] < 1.0, "median error {}", errs[50]);
    }

    #[test]
    fn single_source_accuracy() {
        let cfg = ArrayConfig::half_wavelength(5, 1.0).unwrap();
        let th = 0.3;
        let mut errs: Vec<f64> = (0..100)
            .map(|seed| {
                let est = root_music_doa(&snapshots(&cfg, &[th], 200, 20.0, seed), 1, &cfg).unwrap();
                (est[0] - th).abs().to_degrees()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        assert!(errs[50] < 0.5);
    }

    #[test]
    fn bad_source_counts() {
        let cfg = ArrayConfig::half_wavelength(5, 1.0).unwrap();
        let y = snapshots(&cfg, &[0.1], 50, 20.0, 0);
        assert!(root_music_doa(&y, 5, &cfg).is_err());
        assert!(root_music_doa(&y, 0, &cfg).is_err());
        assert!(root_music_doa(&y.columns(0, 3).into_owned(), 1, &cfg).is_err());
    }
}
