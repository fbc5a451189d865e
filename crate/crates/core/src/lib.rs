//! Guided-arm atom interferometer driven by oppositely moving, spin-dependent
//! traps whose inertial forces are cancelled by linear compensating
//! potentials.
//!
//! The crate covers the whole chain: designing the trap trajectory and its
//! compensation force, propagating both spin arms on a spectral grid, the
//! moving-frame and invariant-based closed-form solutions used to cross-check
//! the propagator, and the interferometric readout (overlap, populations,
//! force estimation). The [`harness`] module ties everything together behind
//! a declarative scenario format.
//!
//! All modules below the config boundary work in natural units
//! (`hbar = m = 1` by default); see [`units`].

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod invariants;
pub mod potentials;
pub mod quad;
pub mod spectral;
pub mod spline;
pub mod trajectory;
pub mod units;

pub use error::{Error, Result};

/// Complex amplitude type used for all wavefunctions.
pub type C64 = num_complex::Complex64;

/// Internal state label of an interferometer arm.
///
/// `Up` carries the upper sign in every `±`/`∓` expression: its trap moves
/// along `+alpha(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    /// `+1.0` for up, `-1.0` for down.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];
}
