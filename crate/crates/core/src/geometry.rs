//! Array apertures, scene placement and uniform-linear-array steering.
//!
//! Angle convention: azimuth is measured in the horizontal plane from the
//! radar broadside, zero on broadside and positive toward the side of the
//! radar on which the RIS is mounted. Distances are fully 3-D; steering only
//! uses azimuth.
//!
//! Array element `m` sits at `radar_position - m * spacing * axis`, where
//! `axis` is the horizontal unit vector pointing toward positive azimuth.
//! With this layout the one-way line-of-sight channel from the array toward
//! azimuth `θ` is proportional to `conj(a(θ))`, so `a(θ)ᴴ w` is the field a
//! precoder `w` radiates toward `θ`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::{CVector, Error, Result, C64};

pub type Point3 = Vector3<f64>;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const UNIT_TOL: f64 = 1e-12;
const COINCIDENT_TOL: f64 = 1e-9;

/// Wavelength for a carrier frequency in Hz.
pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub element_count: usize,
    /// Inter-element spacing in meters.
    pub spacing: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
}

impl ArrayConfig {
    pub fn new(element_count: usize, spacing: f64, wavelength: f64) -> Result<Self> {
        let cfg = Self {
            element_count,
            spacing,
            wavelength,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn half_wavelength(element_count: usize, wavelength: f64) -> Result<Self> {
        Self::new(element_count, wavelength / 2.0, wavelength)
    }

    pub fn validate(&self) -> Result<()> {
        if self.element_count == 0 {
            return Err(crate::invalid("array needs at least one element"));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(crate::invalid(format!("element spacing {} must be > 0", self.spacing)));
        }
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(crate::invalid(format!("wavelength {} must be > 0", self.wavelength)));
        }
        Ok(())
    }

    /// Spatial phase increment between adjacent elements toward `theta`.
    pub fn spatial_phase(&self, theta: f64) -> f64 {
        2.0 * std::f64::consts::PI * self.spacing * theta.sin() / self.wavelength
    }
}

/// Unit-norm ULA response toward one azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    entries: CVector,
    angle: f64,
}

impl SteeringVector {
    pub fn entries(&self) -> &CVector {
        &self.entries
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Steering vector of the conjugate manifold, i.e. the receive signature
    /// of a monostatic echo from `angle` under this crate's element layout.
    pub fn conjugate(&self) -> CVector {
        self.entries.map(|z| z.conj())
    }
}

/// `a(θ)[m] = exp(j 2π m δ sin θ / λ0) / √M`.
pub fn ula_steering(cfg: &ArrayConfig, theta: f64) -> SteeringVector {
    let m = cfg.element_count;
    let scale = 1.0 / (m as f64).sqrt();
    let psi = cfg.spatial_phase(theta);
    let entries = CVector::from_iterator(m, (0..m).map(|k| C64::from_polar(scale, psi * k as f64)));
    SteeringVector {
        entries,
        angle: theta,
    }
}

/// Positions of radar, RIS and patient in the room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub radar_position: Point3,
    /// Horizontal unit vector of the radar broadside.
    pub radar_broadside: Point3,
    pub ris_center: Point3,
    pub ris_normal: Point3,
    pub target_position: Point3,
    pub chest_normal: Point3,
}

/// Azimuths seen from the radar and incidence angles seen from the chest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathAngles {
    /// Azimuth of the target (direct path), radians.
    pub direct: f64,
    /// Azimuth of the RIS center, radians.
    pub ris: f64,
    /// Angle between chest normal and the chest-to-radar direction.
    pub chest_incidence_direct: f64,
    /// Angle between chest normal and the chest-to-RIS direction.
    pub chest_incidence_ris: f64,
}

impl Placement {
    /// Indoor layout with the chest 3 m in front of the radar, facing a
    /// 10×10 RIS mounted to the side.
    pub fn default_room() -> Self {
        let radar = Point3::new(0.0, 0.0, 1.0);
        let ris = Point3::new(2.707, 1.4606, 1.0);
        let target = Point3::new(3.0, 0.0, 1.0);
        Self {
            radar_position: radar,
            radar_broadside: Point3::new(1.0, 0.0, 0.0),
            ris_center: ris,
            ris_normal: Point3::new(0.0, -1.0, 0.0),
            target_position: target,
            chest_normal: (ris - target).normalize(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("radar_broadside", &self.radar_broadside),
            ("ris_normal", &self.ris_normal),
            ("chest_normal", &self.chest_normal),
        ] {
            if (v.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidGeometry(format!(
                    "{name} must have unit length, got {}",
                    v.norm()
                )));
            }
        }
        if self.radar_broadside.z.abs() > UNIT_TOL {
            return Err(Error::InvalidGeometry("radar_broadside must be horizontal".into()));
        }
        let points = [
            ("radar", &self.radar_position),
            ("RIS", &self.ris_center),
            ("target", &self.target_position),
        ];
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if (points[i].1 - points[j].1).norm() <= COINCIDENT_TOL {
                    return Err(Error::InvalidGeometry(format!(
                        "{} and {} positions coincide",
                        points[i].0, points[j].0
                    )));
                }
            }
        }
        Ok(())
    }

    /// Horizontal unit vector along the array, pointing to positive azimuth.
    pub fn array_axis(&self) -> Point3 {
        let up = Point3::new(0.0, 0.0, 1.0);
        let axis = up.cross(&self.radar_broadside).normalize();
        let to_ris = self.ris_center - self.radar_position;
        if to_ris.dot(&axis) < 0.0 {
            -axis
        } else {
            axis
        }
    }

    /// Azimuth of `point` relative to the radar broadside.
    pub fn azimuth_of(&self, point: &Point3) -> Result<f64> {
        let v = point - self.radar_position;
        let along = v.dot(&self.radar_broadside);
        let lateral = v.dot(&self.array_axis());
        if along.hypot(lateral) <= COINCIDENT_TOL {
            return Err(Error::InvalidGeometry(
                "point lies on the radar's vertical axis; azimuth undefined".into(),
            ));
        }
        Ok(lateral.atan2(along))
    }

    pub fn element_positions(&self, cfg: &ArrayConfig) -> Vec<Point3> {
        let axis = self.array_axis();
        (0..cfg.element_count)
            .map(|m| self.radar_position - axis * (m as f64 * cfg.spacing))
            .collect()
    }

    /// Target position at the same range and height as the true target but
    /// at azimuth `theta`. Narrowband sensing cannot resolve range, so a
    /// direction estimate is turned into a position this way.
    pub fn target_at_azimuth(&self, theta: f64) -> Point3 {
        let v = self.target_position - self.radar_position;
        let horizontal = Point3::new(v.x, v.y, 0.0).norm();
        let dir = self.radar_broadside * theta.cos() + self.array_axis() * theta.sin();
        self.radar_position + dir * horizontal + Point3::new(0.0, 0.0, v.z)
    }
}

fn angle_between(a: &Point3, b: &Point3) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

pub fn angles_from_placement(p: &Placement) -> Result<PathAngles> {
    p.validate()?;
    let to_radar = p.radar_position - p.target_position;
    let to_ris = p.ris_center - p.target_position;
    Ok(PathAngles {
        direct: p.azimuth_of(&p.target_position)?,
        ris: p.azimuth_of(&p.ris_center)?,
        chest_incidence_direct: angle_between(&p.chest_normal, &to_radar),
        chest_incidence_ris: angle_between(&p.chest_normal, &to_ris),
    })
}
