//! Run configuration: one TOML file with `[grating]`, `[instrument]`,
//! `[simulation]`, `[fit]` and `[donut]` tables. Command-line flags override
//! file values, which override built-in defaults.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vortex_core::grating::GratingSpec;
use vortex_core::instrument::InstrumentConfig;
use vortex_core::specfun::{Side, DEFAULT_REGULATOR};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SesansMode {
    Map,
    Slice,
    Tof,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulation {
    pub lambda_nm: f64,
    pub samples_per_period: usize,
    pub pad: usize,
    pub apodization: f64,
    pub radial_bins: usize,
    pub mode: SesansMode,
    pub orientation_deg: f64,
    pub resolution: bool,
    pub stack: usize,
    pub n_lambda: usize,
    /// Largest slice-mode spin-echo length; half the grating extent if unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_max_nm: Option<f64>,
    pub xi_points: usize,
}

impl Default for Simulation {
    fn default() -> Self {
        Self {
            lambda_nm: 0.4,
            samples_per_period: 32,
            pad: 16,
            apodization: 0.0,
            radial_bins: 40,
            mode: SesansMode::Tof,
            orientation_deg: 0.0,
            resolution: true,
            stack: 1,
            n_lambda: 96,
            xi_max_nm: None,
            xi_points: 201,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub d_min_nm: f64,
    pub d_max_nm: f64,
    pub n_grid: usize,
    pub tolerance_nm: f64,
    pub xi_column: String,
    pub pol_column: String,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            d_min_nm: 3000.0,
            d_max_nm: 6000.0,
            n_grid: 31,
            tolerance_nm: 0.5,
            xi_column: "xi_nm".into(),
            pol_column: "pol".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DonutSection {
    pub order: u32,
    pub side: Side,
    pub regulator: f64,
    pub q_max: f64,
    pub points: usize,
    pub azimuth_rad: f64,
}

impl Default for DonutSection {
    fn default() -> Self {
        Self { order: 1, side: Side::Plus, regulator: DEFAULT_REGULATOR, q_max: 20.0, points: 401, azimuth_rad: 0.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub grating: GratingSpec,
    #[serde(default)]
    pub instrument: InstrumentConfig,
    #[serde(default)]
    pub simulation: Simulation,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub donut: DonutSection,
}

impl Config {
    /// Reads and parses `path`, returning the raw bytes for hashing as well.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| CliError::Config(format!("{} is not UTF-8", path.display())))?;
        let config: Config =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
        Ok((config, bytes))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.grating.validate()?;
        self.instrument.validate()?;
        let s = &self.simulation;
        if !(s.lambda_nm > 0.0 && s.lambda_nm.is_finite()) {
            return Err(CliError::Config(format!("simulation.lambda_nm must be positive, got {}", s.lambda_nm)));
        }
        if s.pad == 0 || s.stack == 0 || s.n_lambda == 0 || s.xi_points < 2 || s.radial_bins == 0 {
            return Err(CliError::Config("simulation.pad, stack, n_lambda, radial_bins must be ≥ 1 and xi_points ≥ 2".into()));
        }
        if !s.orientation_deg.is_finite() {
            return Err(CliError::Config("simulation.orientation_deg must be finite".into()));
        }
        Ok(())
    }
}
