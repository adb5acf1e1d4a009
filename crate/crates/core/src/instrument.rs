//! Spin-echo instrument constants, background normalization and depth fits.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grating::GratingSpec;
use crate::sesans::{convolve_resolution, tof_curve, SesansCurve};

/// Neutron mass (kg).
pub const NEUTRON_MASS: f64 = 1.674_927_498_04e-27;
/// Planck constant (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Quoted entanglement constant (nm⁻¹).
pub const DEFAULT_XI0: f64 = 1.37e4;

/// `ξ₀ = 2 m_n f L cot θ₀ / h` in nm⁻¹, so that `ξ[nm] = ξ₀ λ[nm]²`.
pub fn entanglement_constant(freq_hz: f64, length_m: f64, theta0: f64) -> Result<f64> {
    if !(freq_hz > 0.0 && length_m > 0.0) {
        return Err(Error::InvalidArgument("frequency and length must be positive".into()));
    }
    if !(theta0 > 0.0 && theta0 < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("θ₀ = {theta0} rad outside (0, π/2)")));
    }
    let per_metre = 2.0 * NEUTRON_MASS * freq_hz * length_m / (theta0.tan() * PLANCK);
    Ok(per_metre * 1e-9)
}

/// `ξ = ξ₀λ²`.
pub fn xi_of_lambda(xi0: f64, lambda: f64) -> f64 {
    xi0 * lambda * lambda
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstrumentRecord", into = "InstrumentRecord")]
pub struct InstrumentConfig {
    pub freq_hz: f64,
    pub length_rf_m: f64,
    /// Radians.
    pub theta0: f64,
    /// nm⁻¹; defaults to the quoted value rather than the computed one.
    pub xi0: f64,
    /// `[λ_min, λ_max]` in nm.
    pub band: [f64; 2],
    /// `δξ/ξ` of the Gaussian resolution.
    pub frac_resolution: f64,
    /// Collimation distances (m), carried as metadata.
    pub collimation_l1_m: f64,
    pub collimation_l2_m: f64,
}

impl Default for InstrumentConfig {
    fn default() -> Self {
        Self {
            freq_hz: 2.0e6,
            length_rf_m: 1.2,
            theta0: 40f64.to_radians(),
            xi0: DEFAULT_XI0,
            band: [0.3, 1.05],
            frac_resolution: 0.02,
            collimation_l1_m: 4.82,
            collimation_l2_m: 0.09,
        }
    }
}

impl InstrumentConfig {
    pub fn validate(&self) -> Result<()> {
        entanglement_constant(self.freq_hz, self.length_rf_m, self.theta0)?;
        if !(self.xi0 > 0.0 && self.xi0.is_finite()) {
            return Err(Error::InvalidArgument(format!("ξ₀ must be positive, got {}", self.xi0)));
        }
        let [lo, hi] = self.band;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("wavelength band [{lo}, {hi}] is invalid")));
        }
        if !(0.0..=0.2).contains(&self.frac_resolution) {
            return Err(Error::InvalidArgument(format!(
                "resolution {} outside [0, 0.2]",
                self.frac_resolution
            )));
        }
        Ok(())
    }

    /// ξ₀ from the flipper parameters, independent of the configured value.
    pub fn computed_xi0(&self) -> Result<f64> {
        entanglement_constant(self.freq_hz, self.length_rf_m, self.theta0)
    }

    pub fn xi_of_lambda(&self, lambda: f64) -> f64 {
        xi_of_lambda(self.xi0, lambda)
    }

    pub fn xi_band(&self) -> [f64; 2] {
        [self.xi_of_lambda(self.band[0]), self.xi_of_lambda(self.band[1])]
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstrumentRecord {
    #[serde(default = "d_freq")]
    freq_hz: f64,
    #[serde(default = "d_length")]
    length_rf_m: f64,
    #[serde(default = "d_theta")]
    theta0_deg: f64,
    #[serde(default = "d_xi0")]
    xi0_per_nm: f64,
    #[serde(default = "d_lmin")]
    lambda_min_nm: f64,
    #[serde(default = "d_lmax")]
    lambda_max_nm: f64,
    #[serde(default = "d_res")]
    frac_resolution: f64,
    #[serde(default = "d_l1")]
    collimation_l1_m: f64,
    #[serde(default = "d_l2")]
    collimation_l2_m: f64,
}

fn d_freq() -> f64 {
    InstrumentConfig::default().freq_hz
}
fn d_length() -> f64 {
    InstrumentConfig::default().length_rf_m
}
fn d_theta() -> f64 {
    40.0
}
fn d_xi0() -> f64 {
    DEFAULT_XI0
}
fn d_lmin() -> f64 {
    0.3
}
fn d_lmax() -> f64 {
    1.05
}
fn d_res() -> f64 {
    0.02
}
fn d_l1() -> f64 {
    4.82
}
fn d_l2() -> f64 {
    0.09
}

impl TryFrom<InstrumentRecord> for InstrumentConfig {
    type Error = Error;
    fn try_from(r: InstrumentRecord) -> Result<Self> {
        let cfg = InstrumentConfig {
            freq_hz: r.freq_hz,
            length_rf_m: r.length_rf_m,
            theta0: r.theta0_deg.to_radians(),
            xi0: r.xi0_per_nm,
            band: [r.lambda_min_nm, r.lambda_max_nm],
            frac_resolution: r.frac_resolution,
            collimation_l1_m: r.collimation_l1_m,
            collimation_l2_m: r.collimation_l2_m,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<InstrumentConfig> for InstrumentRecord {
    fn from(c: InstrumentConfig) -> Self {
        InstrumentRecord {
            freq_hz: c.freq_hz,
            length_rf_m: c.length_rf_m,
            theta0_deg: c.theta0.to_degrees(),
            xi0_per_nm: c.xi0,
            lambda_min_nm: c.band[0],
            lambda_max_nm: c.band[1],
            frac_resolution: c.frac_resolution,
            collimation_l1_m: c.collimation_l1_m,
            collimation_l2_m: c.collimation_l2_m,
        }
    }
}

/// Least-squares Chebyshev series on `ξ` mapped affinely to `[−1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevFit {
    pub coefficients: Vec<f64>,
    pub xi_min: f64,
    pub xi_max: f64,
}

fn chebyshev_row(t: f64, order: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(order + 1);
    row.push(1.0);
    if order >= 1 {
        row.push(t);
    }
    for k in 2..=order {
        row.push(2.0 * t * row[k - 1] - row[k - 2]);
    }
    row
}

impl ChebyshevFit {
    pub fn to_unit(&self, xi: f64) -> f64 {
        (2.0 * xi - (self.xi_min + self.xi_max)) / (self.xi_max - self.xi_min)
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let t = self.to_unit(xi);
        chebyshev_row(t, self.coefficients.len() - 1)
            .iter()
            .zip(&self.coefficients)
            .map(|(b, c)| b * c)
            .sum()
    }

    /// Divides a sample curve by the fitted empty-beam polarization.
    pub fn normalize(&self, curve: &SesansCurve) -> SesansCurve {
        let pol = curve.xi.iter().zip(&curve.pol).map(|(&x, &p)| p / self.eval(x)).collect();
        SesansCurve { pol, ..curve.clone() }
    }
}

pub fn chebyshev_fit(xi: &[f64], p0: &[f64], order: usize) -> Result<ChebyshevFit> {
    if xi.len() != p0.len() {
        return Err(Error::Mismatch(format!("{} ξ values vs {} polarizations", xi.len(), p0.len())));
    }
    if xi.iter().chain(p0).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Chebyshev fit input".into()));
    }
    let mut distinct = xi.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < order + 1 {
        return Err(Error::RankDeficient);
    }
    let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
    let mut fit = ChebyshevFit { coefficients: vec![0.0; order + 1], xi_min: lo, xi_max: hi };

    let design = DMatrix::from_fn(xi.len(), order + 1, |r, c| {
        chebyshev_row(fit.to_unit(xi[r]), order)[c]
    });
    let svd = design.svd(true, true);
    let largest = svd.singular_values.max();
    let smallest = svd.singular_values.min();
    if smallest <= 1e-12 * largest {
        return Err(Error::RankDeficient);
    }
    let solution = svd
        .solve(&DVector::from_column_slice(p0), 0.0)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    fit.coefficients = solution.iter().copied().collect();
    Ok(fit)
}

/// Knobs for the forward model inside [`fit_depth`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub n_lambda: usize,
    pub samples_per_period: usize,
    /// Golden-section stopping width (nm).
    pub tolerance_nm: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { n_lambda: 96, samples_per_period: 32, tolerance_nm: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub d_nm: f64,
    pub sse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub d_best_nm: f64,
    pub sse: f64,
    pub grid: Vec<GridPoint>,
    pub spec: GratingSpec,
    pub instrument: InstrumentConfig,
}

/// Resolution-convolved TOF model at `depth`.
pub fn tof_model(
    spec: &GratingSpec,
    inst: &InstrumentConfig,
    orientation: f64,
    opts: &FitOptions,
) -> Result<SesansCurve> {
    let raw = tof_curve(spec, inst, orientation, opts.n_lambda, opts.samples_per_period)?;
    convolve_resolution(&raw, inst.frac_resolution)
}

/// Linear interpolation of `curve` at `x`; `None` outside its range.
pub fn interpolate(curve: &SesansCurve, x: f64) -> Option<f64> {
    let xi = &curve.xi;
    if xi.is_empty() || x < xi[0] || x > xi[xi.len() - 1] {
        return None;
    }
    let k = xi.partition_point(|&v| v <= x).clamp(1, xi.len() - 1);
    let (x0, x1) = (xi[k - 1], xi[k]);
    if x1 == x0 {
        return Some(curve.pol[k]);
    }
    let f = (x - x0) / (x1 - x0);
    Some(curve.pol[k - 1] * (1.0 - f) + curve.pol[k] * f)
}

const MIN_OVERLAP: usize = 10;

fn sse(model: &SesansCurve, data: &SesansCurve) -> Result<f64> {
    let mut used = 0;
    let mut total = 0.0;
    for (&x, &p) in data.xi.iter().zip(&data.pol) {
        if let Some(m) = interpolate(model, x) {
            total += (m - p) * (m - p);
            used += 1;
        }
    }
    if used < MIN_OVERLAP {
        return Err(Error::InvalidArgument(format!(
            "only {used} data points fall inside the simulated ξ range (need {MIN_OVERLAP})"
        )));
    }
    Ok(total)
}

/// One-parameter fit of the groove depth: parallel grid search, then golden
/// section on the bracket around the best grid point.
pub fn fit_depth(
    measured: &SesansCurve,
    template: &GratingSpec,
    inst: &InstrumentConfig,
    d_range: [f64; 2],
    n_grid: usize,
    opts: &FitOptions,
) -> Result<FitReport> {
    let [lo, hi] = d_range;
    if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("depth range [{lo}, {hi}] is invalid")));
    }
    let objective = |d: f64| -> Result<f64> {
        let model = tof_model(&template.with_depth(d), inst, measured.orientation, opts)?;
        sse(&model, measured)
    };
    let report = |d_best_nm, sse, grid| FitReport {
        d_best_nm,
        sse,
        grid,
        spec: template.with_depth(d_best_nm),
        instrument: inst.clone(),
    };

    if hi == lo {
        let s = objective(lo)?;
        return Ok(report(lo, s, vec![GridPoint { d_nm: lo, sse: s }]));
    }
    if n_grid < 3 {
        return Err(Error::InvalidArgument(format!("n_grid must be ≥ 3, got {n_grid}")));
    }

    let step = (hi - lo) / (n_grid - 1) as f64;
    let depths: Vec<f64> = (0..n_grid).map(|k| lo + k as f64 * step).collect();
    let grid = depths
        .par_iter()
        .map(|&d| objective(d).map(|sse| GridPoint { d_nm: d, sse }))
        .collect::<Result<Vec<_>>>()?;

    let worst = grid.iter().map(|g| g.sse).fold(f64::MIN, f64::max);
    let (best_idx, best) = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.sse.total_cmp(&b.1.sse))
        .expect("grid is non-empty");
    if worst - best.sse <= 1e-12 * worst.max(1e-300) {
        return Err(Error::FlatObjective);
    }
    log::debug!("depth grid minimum {:.1} nm (sse {:.4e})", best.d_nm, best.sse);

    let a = depths[best_idx.saturating_sub(1)];
    let b = depths[(best_idx + 1).min(n_grid - 1)];
    let (d, s) = golden_section(objective, a, b, opts.tolerance_nm)?;
    let (d, s) = if s <= best.sse { (d, s) } else { (best.d_nm, best.sse) };
    Ok(report(d, s, grid))
}

/// Minimizes a unimodal `f` on `[a, b]` to bracket width `tol`.
pub fn golden_section<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}
