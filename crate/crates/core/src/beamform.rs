//! Dual-constraint minimum-norm transmit precoding.
//!
//! The precoder minimizes `wᴴw` subject to `|a1ᴴw| = γ1` and `|a2ᴴw| = γ2`.
//! For fixed constraint phases the least-norm solution is
//! `w = A (AᴴA)⁻¹ g` with `A = [a1, a2]` and `g = [γ1 e^{jφ1}, γ2 e^{jφ2}]`;
//! the phase difference is then chosen to minimize the resulting power.
//! The Gram matrix of two unit-norm steering vectors is
//! `[[1, a_c], [a_c*, 1]]` with `a_c = a1ᴴa2`, so everything reduces to
//! closed-form 2×2 algebra.
//!
//! Gauge: `φ2 = 0`. When either constraint magnitude is zero the phase
//! difference is unobservable and is fixed to 0.

use std::collections::BTreeSet;

use crate::geometry::SteeringVector;
use crate::{CVector, Error, PathKind, Result, C64};

/// Steering pairs with `|a_c| >= 1 - COLLINEAR_TOL` are rejected.
pub const COLLINEAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintPair {
    pub a1: SteeringVector,
    pub a2: SteeringVector,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl ConstraintPair {
    pub fn new(a1: SteeringVector, a2: SteeringVector, gamma1: f64, gamma2: f64) -> Result<Self> {
        let pair = Self {
            a1,
            a2,
            gamma1,
            gamma2,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a1.len() != self.a2.len() {
            return Err(Error::ShapeMismatch(format!(
                "steering vectors of length {} and {}",
                self.a1.len(),
                self.a2.len()
            )));
        }
        for g in [self.gamma1, self.gamma2] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(crate::invalid(format!("constraint magnitude {g} must be finite and >= 0")));
            }
        }
        let c = self.correlation().norm();
        if c >= 1.0 - COLLINEAR_TOL && (self.gamma1 > 0.0 || self.gamma2 > 0.0) {
            return Err(Error::IllConditioned(c));
        }
        Ok(())
    }

    pub fn correlation(&self) -> C64 {
        steering_correlation(&self.a1, &self.a2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    w: CVector,
    achieved_power: f64,
    constraints: ConstraintPair,
}

impl Precoder {
    fn from_weights(w: CVector, constraints: ConstraintPair) -> Self {
        let achieved_power = w.norm_squared();
        Self {
            w,
            achieved_power,
            constraints,
        }
    }

    pub fn weights(&self) -> &CVector {
        &self.w
    }

    /// `wᴴw`.
    pub fn achieved_power(&self) -> f64 {
        self.achieved_power
    }

    pub fn constraints(&self) -> &ConstraintPair {
        &self.constraints
    }

    /// Array response `aᴴw` toward a steering vector.
    pub fn response(&self, a: &SteeringVector) -> C64 {
        a.entries().dotc(&self.w)
    }

    /// Receive combiner matching this transmit beam on the conjugate
    /// (echo) manifold: `conj(w)`, so that `conj(w)ᴴ conj(a) = aᴴ w`.
    pub fn receive_combiner(&self) -> CVector {
        self.w.map(|z| z.conj())
    }
}

/// `a_c = a1ᴴ a2`.
pub fn steering_correlation(a1: &SteeringVector, a2: &SteeringVector) -> C64 {
    a1.entries().dotc(a2.entries())
}

/// Phase difference `φ1 − φ2` minimizing `wᴴw`: `∠a_c`.
pub fn optimal_phase_difference(a_c: C64) -> f64 {
    if a_c.norm() < 1e-12 {
        0.0
    } else {
        a_c.arg()
    }
}

/// Least-norm `w` meeting `a1ᴴw = γ1 e^{jΔφ}`, `a2ᴴw = γ2`.
pub fn least_norm_with_phase(c: &ConstraintPair, delta_phi: f64) -> Result<CVector> {
    c.validate()?;
    let m = c.a1.len();
    if c.gamma1 == 0.0 && c.gamma2 == 0.0 {
        return Ok(CVector::zeros(m));
    }
    let a_c = c.correlation();
    let det = 1.0 - a_c.norm_sqr();
    let g1 = C64::from_polar(c.gamma1, delta_phi);
    let g2 = C64::new(c.gamma2, 0.0);
    // (AᴴA)⁻¹ g
    let l1 = (g1 - a_c * g2) / det;
    let l2 = (g2 - a_c.conj() * g1) / det;
    Ok(c.a1.entries() * l1 + c.a2.entries() * l2)
}

/// Minimum-power precoder meeting both magnitude constraints.
pub fn min_norm_precoder(c: &ConstraintPair) -> Result<Precoder> {
    let delta_phi = if c.gamma1 > 0.0 && c.gamma2 > 0.0 {
        optimal_phase_difference(c.correlation())
    } else {
        0.0
    };
    let w = least_norm_with_phase(c, delta_phi)?;
    Ok(Precoder::from_weights(w, c.clone()))
}

/// `(γ1² + γ2² − 2γ1γ2|a_c|) / (1 − |a_c|²)`.
pub fn min_power_closed_form(gamma1: f64, gamma2: f64, a_c: C64) -> Result<f64> {
    let c = a_c.norm();
    if c >= 1.0 {
        return Err(Error::IllConditioned(c));
    }
    Ok((gamma1 * gamma1 + gamma2 * gamma2 - 2.0 * gamma1 * gamma2 * c) / (1.0 - c * c))
}

/// Fixed-budget split: `γ1 = sγ`, `γ2 = s(1−γ)` with `s` chosen so that
/// the minimum-norm precoder uses exactly `p_total`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    pub gamma: f64,
    pub p_total: f64,
    pub scale: f64,
}

impl PowerSplit {
    pub fn new(p_total: f64, gamma: f64, a_c: C64) -> Result<Self> {
        Ok(Self {
            gamma,
            p_total,
            scale: split_scale(p_total, gamma, a_c)?,
        })
    }

    pub fn magnitudes(&self) -> (f64, f64) {
        (self.scale * self.gamma, self.scale * (1.0 - self.gamma))
    }
}

/// `s = √( P(1−|a_c|²) / (1 − 2γ(1+|a_c|) + 2γ²(1+|a_c|)) )`.
pub fn split_scale(p_total: f64, gamma: f64, a_c: C64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(crate::invalid(format!("power share {gamma} outside [0, 1]")));
    }
    if !(p_total > 0.0 && p_total.is_finite()) {
        return Err(crate::invalid(format!("total power {p_total} must be > 0")));
    }
    let c = a_c.norm();
    if c >= 1.0 - COLLINEAR_TOL {
        return Err(Error::IllConditioned(c));
    }
    let denom = 1.0 - 2.0 * gamma * (1.0 + c) + 2.0 * gamma * gamma * (1.0 + c);
    if denom <= 0.0 {
        return Err(crate::invalid(format!("split denominator {denom} is not positive")));
    }
    Ok((p_total * (1.0 - c * c) / denom).sqrt())
}

/// Precoder at total power `p_total` with share `γ` on constraint 1 and
/// `1−γ` on constraint 2.
pub fn split_precoder(a1: &SteeringVector, a2: &SteeringVector, gamma: f64, p_total: f64) -> Result<Precoder> {
    let a_c = steering_correlation(a1, a2);
    let split = PowerSplit::new(p_total, gamma, a_c)?;
    let (g1, g2) = split.magnitudes();
    min_norm_precoder(&ConstraintPair::new(a1.clone(), a2.clone(), g1, g2)?)
}

/// Disjoint slow-time slot sets for the direct and RIS beams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotSets {
    direct: BTreeSet<usize>,
    ris: BTreeSet<usize>,
}

impl SlotSets {
    pub fn new(direct: impl IntoIterator<Item = usize>, ris: impl IntoIterator<Item = usize>) -> Result<Self> {
        let direct: BTreeSet<usize> = direct.into_iter().collect();
        let ris: BTreeSet<usize> = ris.into_iter().collect();
        if let Some(l) = direct.intersection(&ris).next() {
            return Err(crate::invalid(format!("slot {l} assigned to both paths")));
        }
        Ok(Self { direct, ris })
    }

    /// `round(ris_share·len)` contiguous RIS slots, at the end of the window
    /// unless `ris_first`.
    pub fn contiguous(len: usize, ris_share: f64, ris_first: bool) -> Result<Self> {
        if !(0.0..=1.0).contains(&ris_share) {
            return Err(crate::invalid(format!("RIS slot share {ris_share} outside [0, 1]")));
        }
        let n_ris = (ris_share * len as f64).round() as usize;
        if ris_first {
            Self::new(n_ris..len, 0..n_ris)
        } else {
            let n_direct = len - n_ris;
            Self::new(0..n_direct, n_direct..len)
        }
    }

    pub fn path_of(&self, l: usize) -> Option<PathKind> {
        if self.direct.contains(&l) {
            Some(PathKind::Direct)
        } else if self.ris.contains(&l) {
            Some(PathKind::Ris)
        } else {
            None
        }
    }

    pub fn slots(&self, path: PathKind) -> Vec<usize> {
        match path {
            PathKind::Direct => self.direct.iter().copied().collect(),
            PathKind::Ris => self.ris.iter().copied().collect(),
        }
    }

    /// True when every index in `0..len` belongs to one set.
    pub fn covers(&self, len: usize) -> bool {
        (0..len).all(|l| self.path_of(l).is_some())
    }
}

/// Full-power beam on the direct path with a null on the RIS, or the
/// reverse, depending on which set `l` falls in.
pub fn temporal_weights(
    l: usize,
    slots: &SlotSets,
    a_direct: &SteeringVector,
    a_ris: &SteeringVector,
    p_total: f64,
) -> Result<Precoder> {
    path_beam(slots.path_of(l).ok_or(Error::UnscheduledSlot(l))?, a_direct, a_ris, p_total)
}

/// Full-power single-path beam with a null toward the other path.
pub fn path_beam(path: PathKind, a_direct: &SteeringVector, a_ris: &SteeringVector, p_total: f64) -> Result<Precoder> {
    let gamma = match path {
        PathKind::Direct => 1.0,
        PathKind::Ris => 0.0,
    };
    split_precoder(a_direct, a_ris, gamma, p_total)
}
