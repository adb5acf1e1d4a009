//! Spin-echo SANS polarization from the autocorrelation of the transmitted
//! wave `e^{iΦ}`.

use std::f64::consts::FRAC_PI_2;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft2;
use crate::grating::{indicator_grid, GratingSpec, PhaseMap};
use crate::instrument::InstrumentConfig;

/// Perpendicular orientation: ξ along x, across the grooves.
pub const PERPENDICULAR: f64 = 0.0;
/// Parallel orientation: ξ along y.
pub const PARALLEL: f64 = FRAC_PI_2;

const UNIT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mode {
    Monochromatic { lambda_nm: f64 },
    Tof { xi0_per_nm: f64, band_nm: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SesansCurve {
    /// Spin-echo lengths (nm), increasing.
    pub xi: Vec<f64>,
    /// `P/P₀`.
    pub pol: Vec<f64>,
    /// Wavelength per point in TOF mode.
    pub lambda: Option<Vec<f64>>,
    /// Radians; 0 is perpendicular, π/2 parallel.
    pub orientation: f64,
    pub mode: Mode,
    pub resolution_applied: bool,
}

impl SesansCurve {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct SesansMap {
    /// Centred shift axes (nm); `xi_x[nx/2] = 0`.
    pub xi_x: Vec<f64>,
    pub xi_y: Vec<f64>,
    /// Indexed `[iy, ix]`.
    pub pol: Array2<f64>,
    pub lambda: f64,
}

fn wave(pm: &PhaseMap) -> Array2<Complex64> {
    pm.values().mapv(|p| Complex64::from_polar(1.0, p))
}

/// `Re C(ξ)/C(0)` for the periodic autocorrelation `C` of `e^{iΦ}`, computed
/// as the inverse transform of `|FFT e^{iΦ}|²`.
pub fn polarization_map(pm: &PhaseMap) -> Result<SesansMap> {
    let mut field = wave(pm);
    fft2::forward(&mut field);
    field.par_mapv_inplace(|v| Complex64::new(v.norm_sqr(), 0.0));
    fft2::inverse(&mut field);
    let c0 = field[[0, 0]].re;
    let pol = fft2::fftshift(&field.mapv(|c| c.re / c0));
    if pol.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("polarization map".into()));
    }
    let xi_x = fft2::shifted_indices(pm.nx()).map(|k| k as f64 * pm.dx()).collect();
    let xi_y = fft2::shifted_indices(pm.ny()).map(|k| k as f64 * pm.dy()).collect();
    Ok(SesansMap { xi_x, xi_y, pol, lambda: pm.lambda() })
}

fn lattice_shift(xi: f64, step: f64) -> Result<i64> {
    let cells = xi / step;
    let rounded = cells.round();
    if (cells - rounded).abs() > 1e-9 * rounded.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "shift {xi} nm is not a whole number of {step} nm cells"
        )));
    }
    Ok(rounded as i64)
}

/// Direct-sum `Re Σ e^{iΦ(r+ξ)} e^{−iΦ(r)} / N` with periodic wraparound.
pub fn autocorrelation_oracle(pm: &PhaseMap, xi_x: f64, xi_y: f64) -> Result<f64> {
    let (nx, ny) = (pm.nx() as i64, pm.ny() as i64);
    let sx = lattice_shift(xi_x, pm.dx())?.rem_euclid(nx) as usize;
    let sy = lattice_shift(xi_y, pm.dy())?.rem_euclid(ny) as usize;
    let phi = pm.values();
    let (nx, ny) = (nx as usize, ny as usize);
    let total: f64 = (0..ny)
        .into_par_iter()
        .map(|j| {
            let js = (j + sy) % ny;
            (0..nx)
                .map(|i| (phi[[js, (i + sx) % nx]] - phi[[j, i]]).cos())
                .sum::<f64>()
        })
        .sum();
    Ok(total / (nx * ny) as f64)
}

/// Bilinear samples of `map` along the ray `(ξ cos θ, ξ sin θ)`.
pub fn polarization_slice(map: &SesansMap, orientation: f64, xi: &[f64]) -> Result<SesansCurve> {
    let (cos, sin) = (orientation.cos(), orientation.sin());
    let pol = xi
        .iter()
        .map(|&s| map.sample(s * cos, s * sin))
        .collect::<Result<Vec<_>>>()?;
    Ok(SesansCurve {
        xi: xi.to_vec(),
        pol,
        lambda: None,
        orientation,
        mode: Mode::Monochromatic { lambda_nm: map.lambda },
        resolution_applied: false,
    })
}

impl SesansMap {
    /// Bilinear interpolation at `(ξx, ξy)`; points beyond the grid are rejected.
    pub fn sample(&self, x: f64, y: f64) -> Result<f64> {
        let (fx, ix) = locate(&self.xi_x, x)?;
        let (fy, iy) = locate(&self.xi_y, y)?;
        let p = &self.pol;
        let ix1 = (ix + 1).min(self.xi_x.len() - 1);
        let iy1 = (iy + 1).min(self.xi_y.len() - 1);
        let bottom = p[[iy, ix]] * (1.0 - fx) + p[[iy, ix1]] * fx;
        let top = p[[iy1, ix]] * (1.0 - fx) + p[[iy1, ix1]] * fx;
        Ok(bottom * (1.0 - fy) + top * fy)
    }
}

fn locate(axis: &[f64], v: f64) -> Result<(f64, usize)> {
    let (first, last) = (axis[0], axis[axis.len() - 1]);
    let step = axis[1] - axis[0];
    if !(v >= first - 1e-9 * step && v <= last + 1e-9 * step) {
        return Err(Error::OutOfEnvelope(format!("ξ = {v} nm outside [{first}, {last}]")));
    }
    let pos = ((v - first) / step).clamp(0.0, (axis.len() - 1) as f64);
    let i = (pos.floor() as usize).min(axis.len() - 2);
    Ok((pos - i as f64, i))
}

/// Power spectrum `|FFT e^{iΦ}|²` for exact off-lattice correlation lookups.
#[derive(Clone, Debug)]
pub struct PowerSpectrum {
    qx: Vec<f64>,
    qy: Vec<f64>,
    weight: Array2<f64>,
    total: f64,
}

impl PowerSpectrum {
    pub fn new(pm: &PhaseMap) -> Self {
        let mut field = wave(pm);
        fft2::forward(&mut field);
        let weight = field.mapv(|v| v.norm_sqr());
        let total = weight.sum();
        let freq = |n: usize, step: f64| -> Vec<f64> {
            (0..n)
                .map(|k| {
                    let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                    std::f64::consts::TAU * signed / (n as f64 * step)
                })
                .collect()
        };
        Self { qx: freq(pm.nx(), pm.dx()), qy: freq(pm.ny(), pm.dy()), weight, total }
    }

    /// `Σ |F(q)|² cos(q·ξ) / Σ |F|²`, the band-limited periodic
    /// correlation, exact at lattice shifts.
    pub fn polarization_at(&self, xi_x: f64, xi_y: f64) -> f64 {
        let cx: Vec<(f64, f64)> = self.qx.iter().map(|q| (q * xi_x).sin_cos()).collect();
        let cy: Vec<(f64, f64)> = self.qy.iter().map(|q| (q * xi_y).sin_cos()).collect();
        let acc: f64 = self
            .weight
            .axis_iter(Axis(0))
            .zip(cy.iter())
            .map(|(row, &(sy, cy))| {
                row.iter()
                    .zip(cx.iter())
                    .map(|(w, &(sx, cx))| w * (cx * cy - sx * sy))
                    .sum::<f64>()
            })
            .sum();
        acc / self.total
    }
}

/// Polarization at each ξ along `orientation` at a single wavelength.
pub fn monochromatic_curve(
    spec: &GratingSpec,
    lambda: f64,
    orientation: f64,
    xi: &[f64],
    samples_per_period: usize,
) -> Result<SesansCurve> {
    let (nx, ny) = spec.grid_for(samples_per_period);
    let pm = crate::grating::phase_map(spec, lambda, nx, ny)?;
    let ps = PowerSpectrum::new(&pm);
    let (cos, sin) = (orientation.cos(), orientation.sin());
    let pol = xi.par_iter().map(|&s| ps.polarization_at(s * cos, s * sin)).collect();
    Ok(SesansCurve {
        xi: xi.to_vec(),
        pol,
        lambda: None,
        orientation,
        mode: Mode::Monochromatic { lambda_nm: lambda },
        resolution_applied: false,
    })
}

/// Evenly spaced wavelengths over the instrument band.
pub fn tof_wavelengths(inst: &InstrumentConfig, n_lambda: usize) -> Result<Vec<f64>> {
    if n_lambda < 2 {
        return Err(Error::InvalidArgument(format!("n_lambda must be ≥ 2, got {n_lambda}")));
    }
    let [lo, hi] = inst.band;
    let step = (hi - lo) / (n_lambda - 1) as f64;
    Ok((0..n_lambda).map(|k| lo + k as f64 * step).collect())
}

/// Time-of-flight curve: each wavelength has its own phase map and is read
/// out at `ξ = ξ₀λ²`.
pub fn tof_curve(
    spec: &GratingSpec,
    inst: &InstrumentConfig,
    orientation: f64,
    n_lambda: usize,
    samples_per_period: usize,
) -> Result<SesansCurve> {
    inst.validate()?;
    let lambdas = tof_wavelengths(inst, n_lambda)?;
    let (nx, ny) = spec.grid_for(samples_per_period);
    let chi = indicator_grid(spec, nx, ny)?;
    let (cos, sin) = (orientation.cos(), orientation.sin());
    let pol = lambdas
        .par_iter()
        .map(|&lambda| {
            let pm = PhaseMap::from_indicator(spec, lambda, &chi)?;
            let xi = inst.xi_of_lambda(lambda);
            Ok(PowerSpectrum::new(&pm).polarization_at(xi * cos, xi * sin))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SesansCurve {
        xi: lambdas.iter().map(|&l| inst.xi_of_lambda(l)).collect(),
        pol,
        lambda: Some(lambdas),
        orientation,
        mode: Mode::Tof { xi0_per_nm: inst.xi0, band_nm: inst.band },
        resolution_applied: false,
    })
}

/// Variable-width Gaussian smoothing, `σ(ξ) = frac·ξ`, with the kernel
/// renormalized over the sampled support.
pub fn convolve_resolution(curve: &SesansCurve, frac_width: f64) -> Result<SesansCurve> {
    if curve.resolution_applied {
        return Err(Error::ResolutionAlreadyApplied);
    }
    if !(0.0..=0.2).contains(&frac_width) {
        return Err(Error::InvalidArgument(format!("resolution {frac_width} outside [0, 0.2]")));
    }
    let xi = &curve.xi;
    if xi.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("ξ must be strictly increasing".into()));
    }
    let mut out = curve.clone();
    out.resolution_applied = true;
    if frac_width == 0.0 || xi.len() < 2 {
        return Ok(out);
    }

    let n = xi.len();
    let quad: Vec<f64> = (0..n)
        .map(|j| {
            let left = if j > 0 { xi[j] - xi[j - 1] } else { 0.0 };
            let right = if j + 1 < n { xi[j + 1] - xi[j] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    out.pol = (0..n)
        .into_par_iter()
        .map(|i| {
            let sigma = frac_width * xi[i].abs();
            if sigma == 0.0 {
                return curve.pol[i];
            }
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..n {
                let z = (xi[j] - xi[i]) / sigma;
                let w = (-0.5 * z * z).exp() * quad[j];
                num += w * curve.pol[j];
                den += w;
            }
            num / den
        })
        .collect();
    Ok(out)
}

/// Product rule for a stack of gratings: elementwise product of the curves.
///
/// Factors are multiplied in a canonical (sorted) order, so the result is
/// bit-identical for any permutation of `curves`.
pub fn stack_product(curves: &[SesansCurve]) -> Result<SesansCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidArgument("stack needs at least one curve".into()))?;
    for c in &curves[1..] {
        if c.xi != first.xi {
            return Err(Error::Mismatch("ξ grids differ".into()));
        }
        if c.orientation != first.orientation {
            return Err(Error::Mismatch("orientations differ".into()));
        }
        if c.mode != first.mode {
            return Err(Error::Mismatch("acquisition modes differ".into()));
        }
        if c.resolution_applied != first.resolution_applied {
            return Err(Error::Mismatch("resolution state differs".into()));
        }
    }
    let mut factors = vec![0.0; curves.len()];
    let pol = (0..first.len())
        .map(|i| {
            for (f, c) in factors.iter_mut().zip(curves) {
                *f = c.pol[i];
            }
            factors.sort_by(f64::total_cmp);
            factors.iter().product()
        })
        .collect();
    Ok(SesansCurve { pol, ..first.clone() })
}

/// Depth of a single grating equivalent to a stack of `n_gratings`, `d√n`.
pub fn equivalent_depth(depth: f64, n_gratings: usize) -> f64 {
    depth * (n_gratings as f64).sqrt()
}

/// Checks that every value is a valid normalized polarization.
pub fn check_unit_range(values: &[f64]) -> Result<()> {
    match values.iter().find(|v| v.is_nan() || v.abs() > 1.0 + UNIT_TOL) {
        Some(v) => Err(Error::NonFinite(format!("polarization {v} outside [−1, 1]"))),
        None => Ok(()),
    }
}
