//! Unit-suffixed quantities for scenario files.
//!
//! Every dimensioned config value is a string such as `"7.15 GHz"` or
//! `"250 ms"`; bare numbers are rejected for them. Values are held in SI
//! base units internally and serialized back in base units, so a
//! parse/serialize/parse cycle reproduces the same `f64` bit for bit.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Frequency,
    Time,
    Power,
    Length,
    Velocity,
    Decibel,
    Angle,
}

enum Scale {
    Pow10(i32),
    Factor(f64),
    Dbm,
    Dbw,
    Degrees,
}

impl Dim {
    fn base(self) -> &'static str {
        match self {
            Dim::Frequency => "Hz",
            Dim::Time => "s",
            Dim::Power => "W",
            Dim::Length => "m",
            Dim::Velocity => "m/s",
            Dim::Decibel => "dB",
            Dim::Angle => "rad",
        }
    }

    /// Accepted suffixes, longest first so `cm` wins over `m`.
    fn units(self) -> &'static [(&'static str, Scale)] {
        match self {
            Dim::Frequency => &[
                ("GHz", Scale::Pow10(9)),
                ("MHz", Scale::Pow10(6)),
                ("kHz", Scale::Pow10(3)),
                ("Hz", Scale::Pow10(0)),
            ],
            Dim::Time => &[
                ("min", Scale::Factor(60.0)),
                ("ms", Scale::Pow10(-3)),
                ("us", Scale::Pow10(-6)),
                ("µs", Scale::Pow10(-6)),
                ("ns", Scale::Pow10(-9)),
                ("s", Scale::Pow10(0)),
            ],
            Dim::Power => &[
                ("dBm", Scale::Dbm),
                ("dBW", Scale::Dbw),
                ("mW", Scale::Pow10(-3)),
                ("uW", Scale::Pow10(-6)),
                ("µW", Scale::Pow10(-6)),
                ("W", Scale::Pow10(0)),
            ],
            Dim::Length => &[
                ("mm", Scale::Pow10(-3)),
                ("cm", Scale::Pow10(-2)),
                ("m", Scale::Pow10(0)),
            ],
            Dim::Velocity => &[
                ("mm/s", Scale::Pow10(-3)),
                ("cm/s", Scale::Pow10(-2)),
                ("m/s", Scale::Pow10(0)),
            ],
            Dim::Decibel => &[("dB", Scale::Pow10(0))],
            Dim::Angle => &[("deg", Scale::Degrees), ("rad", Scale::Pow10(0))],
        }
    }
}

/// Parse `"<number> <unit>"` (space optional) into SI base units.
pub fn parse_quantity(text: &str, dim: Dim) -> Result<f64> {
    let s = text.trim();
    let bad = |why: &str| Error::Config(format!("`{text}`: {why}"));
    let (num, scale) = dim
        .units()
        .iter()
        .find_map(|(suffix, scale)| s.strip_suffix(suffix).map(|n| (n.trim(), scale)))
        .ok_or_else(|| {
            let names: Vec<&str> = dim.units().iter().map(|u| u.0).collect();
            bad(&format!("missing or unknown unit, expected one of {}", names.join(", ")))
        })?;
    if num.is_empty() {
        return Err(bad("missing number"));
    }
    let x: f64 = num.parse().map_err(|_| bad(&format!("`{num}` is not a number")))?;
    if !x.is_finite() {
        return Err(bad("value must be finite"));
    }
    let v = match scale {
        // re-parse with the exponent attached so the result is correctly rounded
        Scale::Pow10(0) => x,
        Scale::Pow10(e) if !num.contains(['e', 'E']) => format!("{num}e{e}").parse().map_err(|_| bad("overflow"))?,
        Scale::Pow10(e) => x * 10f64.powi(*e),
        Scale::Factor(f) => x * f,
        Scale::Dbm => 10f64.powf((x - 30.0) / 10.0),
        Scale::Dbw => 10f64.powf(x / 10.0),
        Scale::Degrees => x.to_radians(),
    };
    Ok(v)
}

/// SI base-unit rendering with the shortest exact decimal.
pub fn format_quantity(value: f64, dim: Dim) -> String {
    format!("{value} {}", dim.base())
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

macro_rules! unit_serde {
    ($name:ident, $dim:expr) => {
        pub mod $name {
            use serde::{Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(&super::format_quantity(*v, $dim))
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
                let text = String::deserialize(d)?;
                super::parse_quantity(&text, $dim).map_err(serde::de::Error::custom)
            }
        }
    };
}

unit_serde!(frequency, super::Dim::Frequency);
unit_serde!(time, super::Dim::Time);
unit_serde!(power, super::Dim::Power);
unit_serde!(length, super::Dim::Length);
unit_serde!(velocity, super::Dim::Velocity);
unit_serde!(decibel, super::Dim::Decibel);
unit_serde!(angle, super::Dim::Angle);

/// `[lo, hi]` frequency pair.
pub mod frequency_band {
    use super::{format_quantity, parse_quantity, Dim};
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &(f64, f64), s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(2))?;
        seq.serialize_element(&format_quantity(v.0, Dim::Frequency))?;
        seq.serialize_element(&format_quantity(v.1, Dim::Frequency))?;
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<(f64, f64), D::Error> {
        let [lo, hi] = <[String; 2]>::deserialize(d)?;
        let p = |t: &str| parse_quantity(t, Dim::Frequency).map_err(serde::de::Error::custom);
        Ok((p(&lo)?, p(&hi)?))
    }
}

/// `[x, y, z]` position with a length unit on every coordinate.
pub mod position {
    use super::{format_quantity, parse_quantity, Dim};
    use crate::geometry::Point3;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Point3, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(3))?;
        for c in v.iter() {
            seq.serialize_element(&format_quantity(*c, Dim::Length))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Point3, D::Error> {
        let xs = <[String; 3]>::deserialize(d)?;
        let mut out = Point3::zeros();
        for (i, t) in xs.iter().enumerate() {
            out[i] = parse_quantity(t, Dim::Length).map_err(serde::de::Error::custom)?;
        }
        Ok(out)
    }
}

/// Plain `[x, y, z]` direction (dimensionless).
pub mod direction {
    use crate::geometry::Point3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Point3, s: S) -> std::result::Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Point3, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(d)?;
        Ok(Point3::new(x, y, z))
    }
}
