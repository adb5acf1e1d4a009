//! Far-field (Fraunhofer, phase-object approximation) diffraction from a
//! phase map, and radial analysis of the resulting Bragg donuts.

use std::f64::consts::{PI, TAU};

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft2;
use crate::grating::{GratingSpec, PhaseMap};
use crate::specfun::{sinc_half_order, Side};

/// Transmitted (zeroth-order) amplitude `(e^{−iρλd} + 1)/2`.
pub fn transmitted_amplitude(rho: f64, lambda: f64, depth: f64) -> Complex64 {
    (Complex64::from_polar(1.0, -rho * lambda * depth) + 1.0) * 0.5
}

/// Weight `½(e^{−iρλd} − 1) sinc(nπ/2)` of the n-th order, `n ≥ 1`.
pub fn order_weight(n: u32, rho: f64, lambda: f64, depth: f64) -> Complex64 {
    (Complex64::from_polar(1.0, -rho * lambda * depth) - 1.0) * (0.5 * sinc_half_order(n))
}

/// Small-angle deflection `nλ/p` of order `n`.
pub fn order_angle(n: i32, lambda: f64, period: f64) -> f64 {
    n as f64 * lambda / period
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffractionOptions {
    /// Zero-padding factor per axis; 1 treats the grid as one period.
    pub pad: usize,
    /// Tukey taper fraction in `[0, 1]` applied to the aperture; 0 disables.
    pub apodization: f64,
}

impl Default for DiffractionOptions {
    fn default() -> Self {
        Self { pad: 1, apodization: 0.0 }
    }
}

#[derive(Clone, Debug)]
pub struct DiffractionPattern {
    /// Centred reciprocal axes (nm⁻¹); `qx[nx/2] = 0`.
    pub qx: Vec<f64>,
    pub qy: Vec<f64>,
    /// Indexed `[iy, ix]`.
    pub amplitude: Array2<Complex64>,
    pub intensity: Array2<f64>,
    pub lambda: f64,
    pub spec: GratingSpec,
    pub dqx: f64,
    pub dqy: f64,
    /// `Σ |field|² dx dy` over the aperture (nm²).
    pub illuminated_area: f64,
}

pub fn diffraction_pattern(pm: &PhaseMap) -> Result<DiffractionPattern> {
    diffraction_pattern_with(pm, DiffractionOptions::default())
}

/// `f(q) = (−i/λ) ∫ e^{−iq·r} e^{iΦ(r)} d²r` sampled on the DFT lattice.
pub fn diffraction_pattern_with(pm: &PhaseMap, opts: DiffractionOptions) -> Result<DiffractionPattern> {
    if opts.pad == 0 {
        return Err(Error::InvalidArgument("pad factor must be ≥ 1".into()));
    }
    if !(0.0..=1.0).contains(&opts.apodization) {
        return Err(Error::InvalidArgument(format!(
            "apodization {} outside [0, 1]",
            opts.apodization
        )));
    }
    let phase = pm.values();
    if phase.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("phase map".into()));
    }
    let (ny, nx) = (pm.ny(), pm.nx());
    let (dx, dy) = (pm.dx(), pm.dy());
    let (nxp, nyp) = (nx * opts.pad, ny * opts.pad);

    let wx = tukey(nx, opts.apodization);
    let wy = tukey(ny, opts.apodization);
    let mut field = Array2::<Complex64>::zeros((nyp, nxp));
    field
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .take(ny)
        .enumerate()
        .for_each(|(j, mut row)| {
            for i in 0..nx {
                row[i] = Complex64::from_polar(wx[i] * wy[j], phase[[j, i]]);
            }
        });
    let illuminated_area: f64 = field.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx * dy;

    fft2::forward(&mut field);
    let centred = fft2::fftshift(&field);

    let dqx = TAU / (nxp as f64 * dx);
    let dqy = TAU / (nyp as f64 * dy);
    let qx: Vec<f64> = fft2::shifted_indices(nxp).map(|k| k as f64 * dqx).collect();
    let qy: Vec<f64> = fft2::shifted_indices(nyp).map(|k| k as f64 * dqy).collect();

    // Sample j sits at x0 + j dx; the DFT assumes x0 = 0.
    let spec = pm.spec();
    let x0 = 0.5 * dx - 0.5 * spec.plaquette_w;
    let y0 = 0.5 * dy - 0.5 * spec.plaquette_h;
    let lambda = pm.lambda();
    let scale = Complex64::new(0.0, -dx * dy / lambda);

    let mut amplitude = centred;
    amplitude
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(j, mut row)| {
            let ry = Complex64::from_polar(1.0, -qy[j] * y0);
            for (i, v) in row.iter_mut().enumerate() {
                *v *= scale * ry * Complex64::from_polar(1.0, -qx[i] * x0);
            }
        });
    let intensity = amplitude.mapv(|a| a.norm_sqr());

    Ok(DiffractionPattern {
        qx,
        qy,
        amplitude,
        intensity,
        lambda,
        spec: spec.clone(),
        dqx,
        dqy,
        illuminated_area,
    })
}

fn tukey(n: usize, alpha: f64) -> Vec<f64> {
    if alpha <= 0.0 || n < 2 {
        return vec![1.0; n];
    }
    let edge = 0.5 * alpha * (n - 1) as f64;
    (0..n)
        .map(|k| {
            let t = (k as f64).min((n - 1 - k) as f64);
            if t >= edge {
                1.0
            } else {
                0.5 * (1.0 - (PI * t / edge).cos())
            }
        })
        .collect()
}

impl DiffractionPattern {
    pub fn nx(&self) -> usize {
        self.qx.len()
    }

    pub fn ny(&self) -> usize {
        self.qy.len()
    }

    pub fn total_intensity(&self) -> f64 {
        self.intensity.iter().sum::<f64>() * self.dqx * self.dqy
    }

    /// `|Σ I Δq² / ((2π/λ)² area) − 1|`.
    pub fn parseval_residual(&self) -> f64 {
        let k = TAU / self.lambda;
        (self.total_intensity() / (k * k * self.illuminated_area) - 1.0).abs()
    }

    /// Centre `(±2πn/p, 0)` of order `n`.
    pub fn order_centre(&self, n: u32, side: Side) -> (f64, f64) {
        (side.sign() as f64 * TAU * n as f64 / self.spec.period, 0.0)
    }

    /// Grid index nearest to `(qx, qy)`, or `None` outside the grid.
    pub fn nearest_index(&self, qx: f64, qy: f64) -> Option<(usize, usize)> {
        let ix = (qx / self.dqx).round() as i64 + (self.nx() / 2) as i64;
        let iy = (qy / self.dqy).round() as i64 + (self.ny() / 2) as i64;
        ((0..self.nx() as i64).contains(&ix) && (0..self.ny() as i64).contains(&iy))
            .then_some((iy as usize, ix as usize))
    }

    /// Intensity of the lattice point nearest to the order centre.
    pub fn centre_intensity(&self, n: u32, side: Side) -> Result<f64> {
        let (cx, cy) = self.order_centre(n, side);
        let (iy, ix) = self
            .nearest_index(cx, cy)
            .ok_or_else(|| Error::OutOfEnvelope(format!("order {n} lies outside the q-grid")))?;
        Ok(self.intensity[[iy, ix]])
    }

    fn window(&self, cx: f64, cy: f64, radius: f64) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        let half_x = (self.nx() / 2) as f64;
        let half_y = (self.ny() / 2) as f64;
        let lo_x = ((cx - radius) / self.dqx + half_x).floor();
        let hi_x = ((cx + radius) / self.dqx + half_x).ceil();
        let lo_y = ((cy - radius) / self.dqy + half_y).floor();
        let hi_y = ((cy + radius) / self.dqy + half_y).ceil();
        if lo_x < 0.0 || lo_y < 0.0 || hi_x >= self.nx() as f64 || hi_y >= self.ny() as f64 {
            return Err(Error::OutOfEnvelope(format!(
                "disc of radius {radius:.3e} about ({cx:.3e}, {cy:.3e}) leaves the q-grid"
            )));
        }
        Ok((lo_y as usize..hi_y as usize + 1, lo_x as usize..hi_x as usize + 1))
    }

    /// Integrated intensity `Σ I Δq²` within `radius` of order `n`'s centre.
    pub fn annulus_power(&self, n: u32, side: Side, radius: f64) -> Result<f64> {
        let (cx, cy) = self.order_centre(n, side);
        let (rows, cols) = self.window(cx, cy, radius)?;
        let r2 = radius * radius;
        let mut total = 0.0;
        for iy in rows {
            let ddy = self.qy[iy] - cy;
            for ix in cols.clone() {
                let ddx = self.qx[ix] - cx;
                if ddx * ddx + ddy * ddy < r2 {
                    total += self.intensity[[iy, ix]];
                }
            }
        }
        Ok(total * self.dqx * self.dqy)
    }

    /// `Σ_q I(q) cos(q_a ξ) / Σ I` after projecting the intensity onto axis
    /// `a` (`Axis(1)` for `q_x`, `Axis(0)` for `q_y`).
    pub fn projected_cosine_transform(&self, axis: Axis, xi: &[f64]) -> Vec<f64> {
        let (q, projection) = if axis == Axis(1) {
            (&self.qx, self.intensity.sum_axis(Axis(0)))
        } else {
            (&self.qy, self.intensity.sum_axis(Axis(1)))
        };
        let norm: f64 = projection.sum();
        xi.par_iter()
            .map(|&s| {
                q.iter()
                    .zip(projection.iter())
                    .map(|(&qk, &w)| w * (qk * s).cos())
                    .sum::<f64>()
                    / norm
            })
            .collect()
    }
}

/// Azimuthally averaged intensity about one order.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub order_n: u32,
    pub side: Side,
    pub bin_width: f64,
    /// Mean radius of the samples in each bin (bin centre when empty).
    pub q_prime: Vec<f64>,
    /// Mean intensity per bin; `NaN` marks an empty bin.
    pub intensity: Vec<f64>,
    pub counts: Vec<usize>,
}

impl RadialProfile {
    pub fn empty_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 0).count()
    }
}

/// Bins `q′ = |q − (±2πn/p, 0)|` over `[0, π/p)` into `nbins` equal bins.
pub fn radial_profile(dp: &DiffractionPattern, n: u32, side: Side, nbins: usize) -> Result<RadialProfile> {
    if n == 0 {
        return Err(Error::InvalidArgument("radial profiles need an order n ≥ 1".into()));
    }
    if nbins == 0 {
        return Err(Error::InvalidArgument("nbins must be ≥ 1".into()));
    }
    let cap = PI / dp.spec.period;
    let (cx, cy) = dp.order_centre(n, side);
    let (rows, cols) = dp.window(cx, cy, cap)?;
    let width = cap / nbins as f64;

    let mut sum_r = vec![0.0; nbins];
    let mut sum_i = vec![0.0; nbins];
    let mut counts = vec![0usize; nbins];
    for iy in rows {
        let ddy = dp.qy[iy] - cy;
        for ix in cols.clone() {
            let ddx = dp.qx[ix] - cx;
            let r = (ddx * ddx + ddy * ddy).sqrt();
            let bin = (r / width).floor() as usize;
            if bin < nbins {
                sum_r[bin] += r;
                sum_i[bin] += dp.intensity[[iy, ix]];
                counts[bin] += 1;
            }
        }
    }
    let q_prime = (0..nbins)
        .map(|b| if counts[b] > 0 { sum_r[b] / counts[b] as f64 } else { (b as f64 + 0.5) * width })
        .collect();
    let intensity = (0..nbins)
        .map(|b| if counts[b] > 0 { sum_i[b] / counts[b] as f64 } else { f64::NAN })
        .collect();
    Ok(RadialProfile { order_n: n, side, bin_width: width, q_prime, intensity, counts })
}

/// Radius of maximum intensity, refined by a parabola through the peak bin
/// and its neighbours.
///
/// Fails with [`Error::NotADonut`] when the maximum sits in the first or last
/// occupied bin, i.e. the profile has no interior maximum.
pub fn donut_peak_radius(profile: &RadialProfile) -> Result<f64> {
    let n = profile.intensity.len();
    if n < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 bins, got {n}")));
    }
    let (peak, _) = profile
        .intensity
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::NotADonut)?;
    let (lo, hi) = (peak.checked_sub(1), peak + 1);
    let (Some(lo), true) = (lo, hi < n) else {
        return Err(Error::NotADonut);
    };
    let (y0, y1, y2) = (profile.intensity[lo], profile.intensity[peak], profile.intensity[hi]);
    if !(y0.is_finite() && y2.is_finite()) {
        return Err(Error::NotADonut);
    }
    let curvature = y0 - 2.0 * y1 + y2;
    let offset = if curvature < 0.0 { 0.5 * (y0 - y2) / curvature } else { 0.0 };
    Ok(profile.q_prime[peak] + offset.clamp(-0.5, 0.5) * profile.bin_width)
}
