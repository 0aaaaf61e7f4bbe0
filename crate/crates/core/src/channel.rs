//! Stochastic radar channels, RIS reflection and the end-to-end matrix.
//!
//! Three link channels are modeled: radar↔RIS (`h_i`, M×N), RIS↔target
//! (`h_t`, N) and radar↔target (`h_d`, M). Each is Rician around a
//! free-space line-of-sight component with one-way amplitude `λ0/(4πd)`;
//! the path-loss amplitude multiplies both the LoS and the scattered part.
//! Small-scale fading and clutter are drawn once per run (block fading).

use rand::Rng;

use crate::geometry::{ArrayConfig, Placement, Point3};
use crate::rng::{self, complex_gaussian, Stream};
use crate::{CMatrix, CVector, Error, Result, C64};

use std::f64::consts::PI;

/// Rician factors at or above this are treated as pure line of sight.
pub const LOS_ONLY_K: f64 = 1e12;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RicianSpec {
    /// Linear Rician factor K.
    pub k_factor: f64,
    pub los_component: CMatrix,
}

impl RicianSpec {
    pub fn new(k_factor: f64, los_component: CMatrix) -> Result<Self> {
        if !(k_factor >= 0.0) {
            return Err(crate::invalid(format!("Rician factor {k_factor} must be >= 0")));
        }
        if los_component.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(crate::invalid("LoS component has non-finite entries"));
        }
        Ok(Self {
            k_factor,
            los_component,
        })
    }
}

/// `√(K/(K+1))·H_LoS + √(1/(K+1))·H_nLoS`, `H_nLoS` entries i.i.d. CN(0, 1).
pub fn rician_draw(spec: &RicianSpec, seed: u64) -> CMatrix {
    rician_draw_with(spec, &mut rng::stream(seed, Stream::Channel))
}

pub fn rician_draw_with<R: Rng + ?Sized>(spec: &RicianSpec, rng: &mut R) -> CMatrix {
    let k = spec.k_factor;
    if k >= LOS_ONLY_K {
        return spec.los_component.clone();
    }
    let los_w = (k / (k + 1.0)).sqrt();
    let nlos_w = (1.0 / (k + 1.0)).sqrt();
    spec.los_component
        .map(|los| los * los_w + complex_gaussian(rng, 1.0) * nlos_w)
}

/// Rectangular RIS aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig {
    pub rows: usize,
    pub cols: usize,
    pub element_spacing: f64,
    pub element_positions: Vec<Point3>,
    /// Reflection phase per element, radians in `[0, 2π)`.
    pub phases: Vec<f64>,
}

impl RisConfig {
    /// Grid of `rows × cols` elements centered on `center`, lying in the
    /// plane orthogonal to `normal`. Rows run vertically, columns
    /// horizontally; element `n = row * cols + col`.
    pub fn grid(rows: usize, cols: usize, spacing: f64, center: Point3, normal: Point3) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(crate::invalid("RIS grid needs at least one row and column"));
        }
        if !(spacing > 0.0) {
            return Err(crate::invalid("RIS element spacing must be > 0"));
        }
        let up = Point3::new(0.0, 0.0, 1.0);
        let mut horizontal = up.cross(&normal);
        if horizontal.norm() < 1e-9 {
            horizontal = Point3::new(1.0, 0.0, 0.0);
        }
        let horizontal = horizontal.normalize();
        let vertical = normal.cross(&horizontal).normalize();
        let mut positions = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let dc = (c as f64 - (cols as f64 - 1.0) / 2.0) * spacing;
                let dr = (r as f64 - (rows as f64 - 1.0) / 2.0) * spacing;
                positions.push(center + horizontal * dc + vertical * dr);
            }
        }
        Ok(Self {
            rows,
            cols,
            element_spacing: spacing,
            element_positions: positions,
            phases: vec![0.0; rows * cols],
        })
    }

    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn with_phases(mut self, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != self.element_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} phases for {} RIS elements",
                phases.len(),
                self.element_count()
            )));
        }
        self.phases = phases.into_iter().map(wrap_phase).collect();
        Ok(self)
    }

    /// Diagonal of Γ.
    pub fn reflection(&self) -> CVector {
        CVector::from_iterator(self.phases.len(), self.phases.iter().map(|&p| C64::from_polar(1.0, p)))
    }
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Round phases to a `bits`-bit uniform grid; `bits == 0` keeps them continuous.
pub fn quantize_phases(phases: &[f64], bits: u32) -> Vec<f64> {
    if bits == 0 {
        return phases.to_vec();
    }
    let step = 2.0 * PI / f64::from(1u32 << bits.min(30));
    phases.iter().map(|&p| wrap_phase((p / step).round() * step)).collect()
}

/// Free-space line-of-sight channels.
#[derive(Debug, Clone, PartialEq)]
pub struct LosChannels {
    pub h_i: CMatrix,
    pub h_t: CVector,
    pub h_d: CVector,
}

fn free_space(a: &Point3, b: &Point3, lambda: f64) -> Result<C64> {
    let d = (a - b).norm();
    if d <= 0.0 {
        return Err(Error::InvalidGeometry("zero link distance".into()));
    }
    Ok(C64::from_polar(lambda / (4.0 * PI * d), -2.0 * PI * d / lambda))
}

pub fn los_channel(p: &Placement, cfg: &ArrayConfig, ris: &RisConfig) -> Result<LosChannels> {
    let lambda = cfg.wavelength;
    let radar = p.element_positions(cfg);
    let m = radar.len();
    let n = ris.element_count();
    let mut h_i = CMatrix::zeros(m, n);
    for (i, e) in radar.iter().enumerate() {
        for (j, r) in ris.element_positions.iter().enumerate() {
            h_i[(i, j)] = free_space(e, r, lambda)?;
        }
    }
    let h_t = ris
        .element_positions
        .iter()
        .map(|r| free_space(r, &p.target_position, lambda))
        .collect::<Result<Vec<_>>>()?;
    let h_d = radar
        .iter()
        .map(|e| free_space(e, &p.target_position, lambda))
        .collect::<Result<Vec<_>>>()?;
    Ok(LosChannels {
        h_i,
        h_t: CVector::from_vec(h_t),
        h_d: CVector::from_vec(h_d),
    })
}

/// Phases that make the radar → element n → `focus` phase equal for all n.
pub fn ris_focus_profile(p: &Placement, ris: &RisConfig, lambda: f64, focus: &Point3) -> Vec<f64> {
    let k = 2.0 * PI / lambda;
    ris.element_positions
        .iter()
        .map(|e| wrap_phase(k * ((p.radar_position - e).norm() + (e - focus).norm())))
        .collect()
}

/// Per-entry CN(0, strength), symmetric, constant over a run.
pub fn clutter_draw(strength: f64, seed: u64, m: usize) -> Result<CMatrix> {
    clutter_draw_with(strength, &mut rng::stream(seed, Stream::Clutter), m)
}

pub fn clutter_draw_with<R: Rng + ?Sized>(strength: f64, rng: &mut R, m: usize) -> Result<CMatrix> {
    if !(strength >= 0.0) {
        return Err(crate::invalid(format!("clutter strength {strength} must be >= 0")));
    }
    let mut h = CMatrix::zeros(m, m);
    if strength == 0.0 {
        return Ok(h);
    }
    for i in 0..m {
        for j in i..m {
            let z = complex_gaussian(rng, strength);
            h[(i, j)] = z;
            h[(j, i)] = z;
        }
    }
    Ok(h)
}

/// One block-fading draw of all channel components.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Radar ↔ RIS, M×N.
    pub h_i: CMatrix,
    /// RIS ↔ target, N.
    pub h_t: CVector,
    /// Radar ↔ target, M.
    pub h_d: CVector,
    /// Static clutter, M×M.
    pub h_c: CMatrix,
    /// Diagonal of Γ.
    pub gamma: CVector,
}

impl ChannelRealization {
    pub fn validate(&self) -> Result<()> {
        let m = self.h_i.nrows();
        let n = self.h_i.ncols();
        if self.h_t.len() != n || self.gamma.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "h_i has {n} RIS columns, h_t has {}, Γ has {}",
                self.h_t.len(),
                self.gamma.len()
            )));
        }
        if self.h_d.len() != m || self.h_c.nrows() != m || self.h_c.ncols() != m {
            return Err(Error::ShapeMismatch(format!(
                "h_i has {m} radar rows, h_d has {}, h_c is {}×{}",
                self.h_d.len(),
                self.h_c.nrows(),
                self.h_c.ncols()
            )));
        }
        Ok(())
    }

    pub fn gamma_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&self.gamma)
    }

    /// Cascaded radar → RIS → target row `h_t Γ h_iᵀ`, as an M-vector.
    pub fn ris_cascade(&self) -> CVector {
        let weighted = self.h_t.component_mul(&self.gamma);
        &self.h_i * weighted
    }

    pub fn with_reflection(mut self, gamma: CVector) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }
}

/// `H(α, β) = α·g gᵀ + β·h_d h_dᵀ + H_C` with `g = h_i Γ h_t` the RIS cascade.
///
/// `α` is the chest reflectivity seen through the RIS, `β` the one seen
/// directly. Both target terms are rank-1 and symmetric.
pub fn assemble_end_to_end(ch: &ChannelRealization, alpha: C64, beta: C64) -> Result<CMatrix> {
    ch.validate()?;
    let g = ch.ris_cascade();
    let mut h = ch.h_c.clone();
    h += (&g * g.transpose()) * alpha;
    h += (&ch.h_d * ch.h_d.transpose()) * beta;
    Ok(h)
}

/// Draw fading for every link around `los`, then attach Γ and clutter.
pub fn draw_realization(
    los: &LosChannels,
    k_factor: f64,
    reflection: CVector,
    clutter_strength: f64,
    seed: u64,
) -> Result<ChannelRealization> {
    let mut fading = rng::stream(seed, Stream::Channel);
    let h_i = rician_around(&los.h_i, k_factor, &mut fading)?;
    let h_t = rician_around(&CMatrix::from_column_slice(los.h_t.len(), 1, los.h_t.as_slice()), k_factor, &mut fading)?;
    let h_d = rician_around(&CMatrix::from_column_slice(los.h_d.len(), 1, los.h_d.as_slice()), k_factor, &mut fading)?;
    let h_c = clutter_draw(clutter_strength, seed, los.h_d.len())?;
    let ch = ChannelRealization {
        h_i,
        h_t: h_t.column(0).into_owned(),
        h_d: h_d.column(0).into_owned(),
        h_c,
        gamma: reflection,
    };
    ch.validate()?;
    Ok(ch)
}

/// Rician draw on the unit-modulus LoS phases, rescaled by path-loss amplitude.
fn rician_around<R: Rng + ?Sized>(los: &CMatrix, k_factor: f64, rng: &mut R) -> Result<CMatrix> {
    let phases = los.map(|z| z / z.norm());
    let small_scale = rician_draw_with(&RicianSpec::new(k_factor, phases)?, rng);
    Ok(small_scale.zip_map(los, |s, l| s * l.norm()))
}
