//! Run configuration: defaults, JSON config file, command-line overrides.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};
use trajbell::dynamics::HarmonicStrategy;
use trajbell::hv::CheckMode;
use trajbell::units::SiScale;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Natural,
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Dft,
    Harmonic,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalMode {
    /// `∫|X − Y| dt`, time-resolved.
    Abs,
    /// `max(0, sup(X − Y))` with the sign-flipped combination.
    PositiveSup,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub refine_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_end: 3.0,
            steps: 601,
            refine_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub kind: LatticeKind,
    pub sites: usize,
    pub steps: usize,
    pub spacing: f64,
    pub total_time: f64,
    pub omega: f64,
    /// Initial site, 0-based.
    pub m0: usize,
    pub samples: usize,
    pub mode: CheckMode,
    /// Zero the first term of the first step and renormalize.
    pub corrupt: bool,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            kind: LatticeKind::Dft,
            sites: 4,
            steps: 2,
            spacing: 0.25,
            total_time: 2.0,
            omega: 1.0,
            m0: 0,
            samples: 1_000_000,
            mode: CheckMode::Auto,
            corrupt: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalConfig {
    pub ensembles: usize,
    pub max_samples: usize,
    pub grid_points: usize,
    pub knots: usize,
    pub tau: f64,
    pub functional: FunctionalMode,
    /// Use one ensemble with all four trajectories equal.
    pub degenerate: bool,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            ensembles: 1000,
            max_samples: 8,
            grid_points: 21,
            knots: 4,
            tau: 1.0,
            functional: FunctionalMode::Both,
            degenerate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub strategy: HarmonicStrategy,
    pub n_sub: usize,
    pub n_big: usize,
    pub target_time: f64,
    pub convergence_check: bool,
    pub sweep: SweepConfig,
    pub seed: u64,
    pub units: Units,
    pub si: SiScale,
    pub lattice: LatticeConfig,
    pub classical: ClassicalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            strategy: HarmonicStrategy::default(),
            n_sub: 9,
            n_big: 64,
            target_time: FRAC_PI_2,
            convergence_check: true,
            sweep: SweepConfig::default(),
            seed: 1,
            units: Units::Natural,
            si: SiScale::default(),
            lattice: LatticeConfig::default(),
            classical: ClassicalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n_sub == 0 || self.n_big < self.n_sub {
            return bad(format!("need 1 <= n_sub <= n_big, got {} and {}", self.n_sub, self.n_big));
        }
        if !(self.target_time.is_finite() && self.target_time >= 0.0) {
            return bad(format!("target time {} must be finite and non-negative", self.target_time));
        }
        if !(self.si.mass_kg > 0.0 && self.si.omega_rad_s > 0.0) {
            return bad("SI mass and frequency must be positive".into());
        }
        self.strategy.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    /// Length, time and ħΩ-energy factors for the chosen units.
    pub fn scale(&self) -> Scale {
        match self.units {
            Units::Natural => Scale {
                units: self.units,
                length: 1.0,
                time: 1.0,
                length_unit: "(hbar/(M*Omega))^(1/2)",
                time_unit: "1/Omega",
            },
            Units::Si => Scale {
                units: self.units,
                length: self.si.length_m(),
                time: self.si.time_s(),
                length_unit: "m",
                time_unit: "s",
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scale {
    pub units: Units,
    pub length: f64,
    pub time: f64,
    pub length_unit: &'static str,
    pub time_unit: &'static str,
}
