//! Unit system, physical constants and the SI ingestion boundary.
//!
//! Everything past the config loader is dimensionless. A [`UnitSystem`]
//! records the SI size of the natural mass, length and time units (and of
//! `hbar`, which must agree with them), and [`to_natural`] / [`from_natural`]
//! convert [`Quantity`] values across that boundary.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J s (CODATA 2018, exact).
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Unified atomic mass unit, kg (CODATA 2018).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Relative atomic mass of caesium-133.
pub const CS133_RELATIVE_MASS: f64 = 132.905_451_961;
/// Mass of a caesium-133 atom, kg.
pub const CS133_MASS: f64 = CS133_RELATIVE_MASS * ATOMIC_MASS_UNIT;

/// Exponents of mass, length and time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dimension {
    pub mass: i8,
    pub length: i8,
    pub time: i8,
}

impl Dimension {
    pub const fn new(mass: i8, length: i8, time: i8) -> Self {
        Self { mass, length, time }
    }

    pub const DIMENSIONLESS: Dimension = Dimension::new(0, 0, 0);
    pub const MASS: Dimension = Dimension::new(1, 0, 0);
    pub const LENGTH: Dimension = Dimension::new(0, 1, 0);
    pub const TIME: Dimension = Dimension::new(0, 0, 1);
    pub const FREQUENCY: Dimension = Dimension::new(0, 0, -1);
    pub const VELOCITY: Dimension = Dimension::new(0, 1, -1);
    pub const ACCELERATION: Dimension = Dimension::new(0, 1, -2);
    pub const FORCE: Dimension = Dimension::new(1, 1, -2);
    pub const ENERGY: Dimension = Dimension::new(1, 2, -2);
    pub const ACTION: Dimension = Dimension::new(1, 2, -1);
    /// Phase per unit force.
    pub const SENSITIVITY: Dimension = Dimension::new(-1, -1, 2);

    fn mul(self, other: Dimension) -> Dimension {
        Dimension::new(
            self.mass + other.mass,
            self.length + other.length,
            self.time + other.time,
        )
    }

    fn powi(self, p: i8) -> Dimension {
        Dimension::new(self.mass * p, self.length * p, self.time * p)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let named = match *self {
            Dimension::DIMENSIONLESS => Some("dimensionless"),
            Dimension::MASS => Some("mass"),
            Dimension::LENGTH => Some("length"),
            Dimension::TIME => Some("time"),
            Dimension::FREQUENCY => Some("frequency"),
            Dimension::VELOCITY => Some("velocity"),
            Dimension::ACCELERATION => Some("acceleration"),
            Dimension::FORCE => Some("force"),
            Dimension::ENERGY => Some("energy"),
            Dimension::ACTION => Some("action"),
            Dimension::SENSITIVITY => Some("sensitivity"),
            _ => None,
        };
        match named {
            Some(name) => f.write_str(name),
            None => write!(f, "M^{} L^{} T^{}", self.mass, self.length, self.time),
        }
    }
}

/// An SI value tagged with its dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub dim: Dimension,
}

impl Quantity {
    pub fn new(value: f64, dim: Dimension) -> Self {
        Self { value, dim }
    }

    pub fn length(meters: f64) -> Self {
        Self::new(meters, Dimension::LENGTH)
    }

    pub fn time(seconds: f64) -> Self {
        Self::new(seconds, Dimension::TIME)
    }

    pub fn mass(kg: f64) -> Self {
        Self::new(kg, Dimension::MASS)
    }

    /// Parses a value with a unit expression such as `"866 nm"` or
    /// `"1.2e-3 J*s"`. A bare number is dimensionless.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (num, unit) = match text.find(char::is_whitespace) {
            Some(pos) => (&text[..pos], text[pos..].trim()),
            None => (text, ""),
        };
        let value: f64 = num
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse number in `{text}`")))?;
        let (factor, dim) = parse_unit(unit)?;
        Ok(Self::new(value * factor, dim))
    }

    /// Same as [`Quantity::parse`] but rejects any dimension other than
    /// `expected`.
    pub fn parse_as(text: &str, expected: Dimension) -> Result<Self> {
        let q = Self::parse(text)?;
        check_dim(q.dim, expected)?;
        Ok(q)
    }
}

fn check_dim(found: Dimension, expected: Dimension) -> Result<()> {
    if found != expected {
        return Err(Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

fn unit_atom(sym: &str) -> Option<(f64, Dimension)> {
    let d = match sym {
        "m" => (1.0, Dimension::LENGTH),
        "mm" => (1e-3, Dimension::LENGTH),
        "um" | "µm" | "μm" => (1e-6, Dimension::LENGTH),
        "nm" => (1e-9, Dimension::LENGTH),
        "s" => (1.0, Dimension::TIME),
        "ms" => (1e-3, Dimension::TIME),
        "us" | "µs" | "μs" => (1e-6, Dimension::TIME),
        "ns" => (1e-9, Dimension::TIME),
        "kg" => (1.0, Dimension::MASS),
        "u" | "amu" => (ATOMIC_MASS_UNIT, Dimension::MASS),
        "J" => (1.0, Dimension::ENERGY),
        "N" => (1.0, Dimension::FORCE),
        "Hz" => (1.0, Dimension::FREQUENCY),
        "rad" => (1.0, Dimension::DIMENSIONLESS),
        "hbar" => (HBAR_SI, Dimension::ACTION),
        _ => return None,
    };
    Some(d)
}

/// Parses products and quotients of unit atoms, e.g. `J*s`, `rad/s`,
/// `m/s^2`, `1/N`.
fn parse_unit(unit: &str) -> Result<(f64, Dimension)> {
    let mut factor = 1.0;
    let mut dim = Dimension::DIMENSIONLESS;
    if unit.is_empty() {
        return Ok((factor, dim));
    }
    let mut sign = 1i8;
    let mut token = String::new();
    let mut flush = |token: &mut String, sign: i8| -> Result<()> {
        let tok = token.trim();
        if tok.is_empty() {
            return Err(Error::UnknownUnit(unit.to_string()));
        }
        let (base, exp) = match tok.split_once('^') {
            Some((b, e)) => (
                b,
                e.parse::<i8>()
                    .map_err(|_| Error::UnknownUnit(unit.to_string()))?,
            ),
            None => (tok, 1),
        };
        if base != "1" {
            let (f, d) = unit_atom(base).ok_or_else(|| Error::UnknownUnit(base.to_string()))?;
            let p = exp * sign;
            factor *= f.powi(p as i32);
            dim = dim.mul(d.powi(p));
        }
        token.clear();
        Ok(())
    };
    for ch in unit.chars() {
        match ch {
            '*' | ' ' if !token.trim().is_empty() => {
                flush(&mut token, sign)?;
            }
            '*' | ' ' => {}
            '/' => {
                flush(&mut token, sign)?;
                sign = -1;
            }
            c => token.push(c),
        }
    }
    flush(&mut token, sign)?;
    Ok((factor, dim))
}

/// SI sizes of the natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub hbar: f64,
    pub mass: f64,
    pub length_scale: f64,
    pub time_scale: f64,
}

impl UnitSystem {
    /// Validates positivity and that `hbar` equals `mass * L^2 / T` in the
    /// system, so that energy and action have a single representation.
    pub fn new(hbar: f64, mass: f64, length_scale: f64, time_scale: f64) -> Result<Self> {
        for (name, v) in [
            ("hbar", hbar),
            ("mass", mass),
            ("length_scale", length_scale),
            ("time_scale", time_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidUnits(format!("{name} must be positive, got {v}")));
            }
        }
        let ratio = hbar * time_scale / (mass * length_scale * length_scale);
        if (ratio - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidUnits(format!(
                "hbar is {ratio} in the system's action unit, expected 1"
            )));
        }
        Ok(Self {
            hbar,
            mass,
            length_scale,
            time_scale,
        })
    }

    /// `hbar = m = 1` with the given SI length unit.
    pub fn natural(mass: f64, length_scale: f64) -> Result<Self> {
        let time_scale = mass * length_scale * length_scale / HBAR_SI;
        Self::new(HBAR_SI, mass, length_scale, time_scale)
    }

    /// Natural units for a caesium-133 atom.
    pub fn caesium(length_scale: f64) -> Result<Self> {
        Self::natural(CS133_MASS, length_scale)
    }

    pub fn energy_scale(&self) -> f64 {
        self.hbar / self.time_scale
    }

    /// SI size of one natural unit of the given dimension.
    pub fn scale(&self, dim: Dimension) -> f64 {
        self.mass.powi(dim.mass as i32)
            * self.length_scale.powi(dim.length as i32)
            * self.time_scale.powi(dim.time as i32)
    }
}

/// Converts an SI quantity into the system's natural units.
pub fn to_natural(q: Quantity, system: &UnitSystem) -> f64 {
    q.value / system.scale(q.dim)
}

/// Converts with a dimension check.
pub fn to_natural_as(q: Quantity, expected: Dimension, system: &UnitSystem) -> Result<f64> {
    check_dim(q.dim, expected)?;
    Ok(to_natural(q, system))
}

pub fn from_natural(value: f64, dim: Dimension, system: &UnitSystem) -> Quantity {
    Quantity::new(value * system.scale(dim), dim)
}

/// Force to measure plus the two constants that survive into the
/// dimensionless equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub c: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl PhysicalParams {
    pub fn new(c: f64, mass: f64, hbar: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        if !c.is_finite() {
            return Err(Error::InvalidParameter(format!("force must be finite, got {c}")));
        }
        Ok(Self { c, mass, hbar })
    }

    /// `hbar = m = 1` with the given force.
    pub fn natural(c: f64) -> Self {
        Self {
            c,
            mass: 1.0,
            hbar: 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn lattice_wavelength_is_unit_length() {
        let sys = UnitSystem::caesium(866e-9).unwrap();
        assert_eq!(to_natural(Quantity::length(866e-9), &sys), 1.0);
    }

    #[test]
    fn zero_time_is_zero() {
        let sys = UnitSystem::caesium(1e-6).unwrap();
        assert_eq!(to_natural(Quantity::time(0.0), &sys), 0.0);
    }

    #[test]
    fn caesium_mass_is_unit_mass() {
        // 132.905 u from the published atomic mass constant
        let oracle = 132.905 * 1.660_539_066_60e-27;
        assert!(rel(CS133_MASS, oracle) < 1e-5);
        assert!(rel(CS133_MASS, 2.2069e-25) < 1e-4);
        let sys = UnitSystem::caesium(866e-9).unwrap();
        assert!((to_natural(Quantity::mass(CS133_MASS), &sys) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn energy_scale_round_trips() {
        let sys = UnitSystem::caesium(866e-9).unwrap();
        let e = from_natural(1.0, Dimension::ENERGY, &sys);
        assert!(rel(e.value, sys.energy_scale()) < 1e-12);
        let h = from_natural(1.0, Dimension::ACTION, &sys);
        assert!(rel(h.value, HBAR_SI) < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_and_inconsistent_systems() {
        assert!(UnitSystem::new(HBAR_SI, 1.0, -1.0, 1.0).is_err());
        assert!(UnitSystem::new(HBAR_SI, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(0.0, 0.0, 1.0).is_err());
        assert!(PhysicalParams::new(-3.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn parses_unit_expressions() {
        let q = Quantity::parse("866 nm").unwrap();
        assert_eq!(q.dim, Dimension::LENGTH);
        assert!(rel(q.value, 866e-9) < 1e-15);
        let q = Quantity::parse("72 us").unwrap();
        assert_eq!(q.dim, Dimension::TIME);
        let q = Quantity::parse("2 m/s^2").unwrap();
        assert_eq!(q.dim, Dimension::ACCELERATION);
        let q = Quantity::parse("1 J*s").unwrap();
        assert_eq!(q.dim, Dimension::ACTION);
        let q = Quantity::parse("3 1/N").unwrap();
        assert_eq!(q.dim, Dimension::SENSITIVITY);
        assert!(Quantity::parse("1 furlong").is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let sys = UnitSystem::caesium(866e-9).unwrap();
        let err = to_natural_as(Quantity::time(1.0), Dimension::LENGTH, &sys).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        assert!(Quantity::parse_as("5 s", Dimension::LENGTH).is_err());
    }

    const DIMS: [Dimension; 10] = [
        Dimension::MASS,
        Dimension::LENGTH,
        Dimension::TIME,
        Dimension::FREQUENCY,
        Dimension::VELOCITY,
        Dimension::ACCELERATION,
        Dimension::FORCE,
        Dimension::ENERGY,
        Dimension::ACTION,
        Dimension::SENSITIVITY,
    ];

    proptest! {
        #[test]
        fn conversion_round_trips(v in -1e3f64..1e3, idx in 0usize..10, lscale in 1e-8f64..1e-5) {
            let sys = UnitSystem::caesium(lscale).unwrap();
            let dim = DIMS[idx];
            let si = from_natural(v, dim, &sys);
            let back = to_natural(si, &sys);
            prop_assert!((back - v).abs() <= 1e-12 * v.abs().max(1e-300));
        }

        #[test]
        fn conversion_is_linear(v in -1e3f64..1e3, a in -10f64..10.0, idx in 0usize..10) {
            let sys = UnitSystem::caesium(866e-9).unwrap();
            let dim = DIMS[idx];
            let q = Quantity::new(v * sys.scale(dim), dim);
            let qa = Quantity::new(a * q.value, dim);
            let lhs = to_natural(qa, &sys);
            let rhs = a * to_natural(q, &sys);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
        }
    }
}
