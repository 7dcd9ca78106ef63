//! Physical constants and the fixed stage of one problem.
//!
//! Units throughout the crate: energies in MeV, lengths in fm, times in s.
//! Momenta are reported as `pc` in MeV (numerically "MeV/c"). The speed of
//! light is stored in m/s; [`PhysicalSetup::c_fm`] gives it in fm/s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, MeV·s.
pub const HBAR_MEV_S: f64 = 6.58212e-22;
/// Speed of light, m/s.
pub const LIGHT_SPEED_M_S: f64 = 2.99792458e8;
/// Electron rest energy, MeV.
pub const ELECTRON_REST_ENERGY_MEV: f64 = 0.510999;
/// fm per m.
pub const FM_PER_M: f64 = 1e15;

/// Sign of the motion along x (the `±` of the trajectory law).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Direction {
    #[default]
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn from_sign(sign: f64) -> Self {
        if sign < 0.0 {
            Direction::Backward
        } else {
            Direction::Forward
        }
    }
}

/// Energy, rest energy and the constant set for one problem.
///
/// `hbar_c` is always derived as `hbar * c` so the two constants stay
/// consistent under ħ-scaling and c-overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSetup {
    /// Total energy E, MeV.
    pub energy: f64,
    /// Rest energy m0 c², MeV.
    pub rest_energy: f64,
    /// ħ, MeV·s.
    pub hbar: f64,
    /// ħc, MeV·fm.
    pub hbar_c: f64,
    /// c, m/s.
    pub c: f64,
    pub direction: Direction,
}

impl PhysicalSetup {
    pub fn new(energy: f64, rest_energy: f64) -> Result<Self> {
        Self::with_constants(energy, rest_energy, HBAR_MEV_S, LIGHT_SPEED_M_S)
    }

    pub fn electron(energy: f64) -> Result<Self> {
        Self::new(energy, ELECTRON_REST_ENERGY_MEV)
    }

    pub fn with_constants(energy: f64, rest_energy: f64, hbar: f64, c: f64) -> Result<Self> {
        if !energy.is_finite() {
            return Err(Error::InvalidParameter(format!("energy must be finite, got {energy}")));
        }
        if !(rest_energy > 0.0 && rest_energy.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rest energy must be positive, got {rest_energy}"
            )));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
        }
        Ok(Self {
            energy,
            rest_energy,
            hbar,
            hbar_c: hbar * c * FM_PER_M,
            c,
            direction: Direction::Forward,
        })
    }

    /// Scales ħ (and ħc with it) by `eps` for classical-limit studies.
    pub fn with_hbar_scale(self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar scale must be positive, got {eps}")));
        }
        Self::with_constants(self.energy, self.rest_energy, self.hbar * eps, self.c)
            .map(|s| s.with_direction(self.direction))
    }

    /// Overrides the speed of light (m/s); ħc follows.
    pub fn with_light_speed(self, c: f64) -> Result<Self> {
        Self::with_constants(self.energy, self.rest_energy, self.hbar, c)
            .map(|s| s.with_direction(self.direction))
    }

    pub fn with_energy(self, energy: f64) -> Result<Self> {
        Self::with_constants(energy, self.rest_energy, self.hbar, self.c)
            .map(|s| s.with_direction(self.direction))
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    /// c in fm/s.
    pub fn c_fm(&self) -> f64 {
        self.c * FM_PER_M
    }

    /// m0² c⁴, MeV².
    pub fn rest_energy_sq(&self) -> f64 {
        self.rest_energy * self.rest_energy
    }

    /// Planck constant h = 2πħ, MeV·s.
    pub fn planck(&self) -> f64 {
        std::f64::consts::TAU * self.hbar
    }
}

/// The integration constants (a, b) selecting one trajectory of the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenParams {
    a: f64,
    b: f64,
}

impl HiddenParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("hidden parameters must be finite, got ({a}, {b})")));
        }
        if a == 0.0 {
            return Err(Error::ZeroHiddenScale);
        }
        Ok(Self { a, b })
    }

    /// The classical pair (1, 0).
    pub fn classical() -> Self {
        Self { a: 1.0, b: 0.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}
