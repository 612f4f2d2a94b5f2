//! Natural oscillator units and their SI scale.
//!
//! Everything inside the crate runs with `ħ = M = Ω = 1`: lengths are in
//! `(ħ/MΩ)^{1/2}`, times in `Ω⁻¹`, energies in `ħΩ`.

use serde::{Deserialize, Serialize};

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Physical dimension carried by an operator or a reported number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Length,
    Energy,
    Dimensionless,
}

/// Conversion from natural units to SI for a given mass and reference
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiScale {
    pub mass_kg: f64,
    pub omega_rad_s: f64,
}

impl Default for SiScale {
    fn default() -> Self {
        Self {
            mass_kg: 1e-30,
            omega_rad_s: 1e8,
        }
    }
}

impl SiScale {
    /// `(ħ/MΩ)^{1/2}` in metres.
    pub fn length_m(&self) -> f64 {
        (HBAR / (self.mass_kg * self.omega_rad_s)).sqrt()
    }

    /// `Ω⁻¹` in seconds.
    pub fn time_s(&self) -> f64 {
        1.0 / self.omega_rad_s
    }

    /// `ħΩ` in joules.
    pub fn energy_j(&self) -> f64 {
        HBAR * self.omega_rad_s
    }

    pub fn factor(&self, unit: Unit) -> f64 {
        match unit {
            Unit::Length => self.length_m(),
            Unit::Energy => self.energy_j(),
            Unit::Dimensionless => 1.0,
        }
    }
}
