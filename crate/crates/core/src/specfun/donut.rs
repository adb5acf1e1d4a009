use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bessel::bessel_j_sequence;
use super::hyper::hyp1f2;
use super::struve::{struve_h, MAX_STRUVE_ARG};
use super::{sinc_half_order, FACTORIALS};
use crate::error::{Error, Result};

/// Largest `|n·m|` accepted by the closed form.
pub const MAX_WINDING: u32 = 32;

/// Default aperture regulator; `R·q′` is treated as dimensionless.
pub const DEFAULT_REGULATOR: f64 = 0.4;

// Below this R·q′ the ₁F₂ series is used; above it the Bessel/Struve
// reduction, which is stable once the argument exceeds the order.
const SERIES_SWITCH: f64 = 30.0;

/// Which member of a conjugate pair of orders.
///
/// `Plus` is centred at `q_x = +2πn/p` and carries the azimuthal factor
/// `e^{−inmφ′}`; `Minus` is its mirror with `e^{+inmφ′}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> i32 {
        match self {
            Side::Plus => 1,
            Side::Minus => -1,
        }
    }
}

fn normalizer(l: u32) -> f64 {
    2f64.powi(l as i32) * (2.0 + l as f64) * FACTORIALS[l as usize]
}

/// `x^l ₁F₂(1 + l/2; 2 + l/2, 1 + l; −x²/4)`, the shape of the donut.
///
/// Equal to `2^l (2+l) l! / x² · ∫₀^x t J_l(t) dt`.
pub fn bragg_radial_factor(l: u32, x: f64) -> Result<f64> {
    check_radial_args(l, x)?;
    if x == 0.0 {
        return Ok(if l == 0 { 1.0 } else { 0.0 });
    }
    if use_series(l, x) {
        let lf = l as f64;
        Ok(x.powi(l as i32) * hyp1f2(1.0 + lf / 2.0, 2.0 + lf / 2.0, 1.0 + lf, -0.25 * x * x)?)
    } else {
        Ok(radial_integral_reduction(l, x)? * normalizer(l) / (x * x))
    }
}

/// `∫₀^x t J_l(t) dt`, dispatching between the series and the reduction.
pub fn radial_integral(l: u32, x: f64) -> Result<f64> {
    check_radial_args(l, x)?;
    if use_series(l, x) {
        radial_integral_series(l, x)
    } else {
        radial_integral_reduction(l, x)
    }
}

fn use_series(l: u32, x: f64) -> bool {
    x <= SERIES_SWITCH.max(l as f64 + 10.0)
}

fn check_radial_args(l: u32, x: f64) -> Result<()> {
    if l > MAX_WINDING {
        return Err(Error::OutOfEnvelope(format!("|nm| = {l} exceeds {MAX_WINDING}")));
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!("radial argument {x} must be finite and ≥ 0")));
    }
    Ok(())
}

/// `∫₀^x t J_l(t) dt = x^{l+2} ₁F₂(…) / (2^l (2+l) l!)`.
pub fn radial_integral_series(l: u32, x: f64) -> Result<f64> {
    check_radial_args(l, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let lf = l as f64;
    let f = hyp1f2(1.0 + lf / 2.0, 2.0 + lf / 2.0, 1.0 + lf, -0.25 * x * x)?;
    Ok(x.powi(l as i32 + 2) * f / normalizer(l))
}

/// `∫₀^x t J_l(t) dt` through the Bessel recurrence.
///
/// With `K_k = ∫₀^x J_k` and `I_k = ∫₀^x t J_k`:
/// `I_0 = x J_1`, `I_1 = (πx/2)(J_1 H_0 − J_0 H_1)`,
/// `I_l = 2(l−1) K_{l−1} − I_{l−2}`, and `K_{k+1} = K_{k−1} − 2J_k` seeded by
/// `K_1 = 1 − J_0`, `K_0 = x J_0 + I_1`. Even `l` never needs Struve
/// functions.
pub fn radial_integral_reduction(l: u32, x: f64) -> Result<f64> {
    check_radial_args(l, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let j = bessel_j_sequence(l as usize + 1, x);
    let l = l as usize;
    let odd = l % 2 == 1;

    // Struve terms only enter through I_1 and K_0.
    let i1 = if odd {
        if x > MAX_STRUVE_ARG {
            return Err(Error::OutOfEnvelope(format!(
                "odd-order reduction needs x ≤ {MAX_STRUVE_ARG}, got {x}"
            )));
        }
        let (h0, h1) = (struve_h(0, x)?, struve_h(1, x)?);
        0.5 * PI * x * (j[1] * h0 - j[0] * h1)
    } else {
        0.0
    };

    // K_k for k ≤ l − 1 with k of the opposite parity to l.
    let mut k_int = vec![0.0; l.max(1)];
    if odd {
        k_int[0] = x * j[0] + i1;
        for k in (2..l).step_by(2) {
            k_int[k] = k_int[k - 2] - 2.0 * j[k - 1];
        }
    } else if l > 0 {
        k_int[1] = 1.0 - j[0];
        for k in (3..l).step_by(2) {
            k_int[k] = k_int[k - 2] - 2.0 * j[k - 1];
        }
    }

    let mut prev = if odd { i1 } else { x * j[1] };
    let mut k = if odd { 1 } else { 0 };
    while k < l {
        k += 2;
        prev = 2.0 * (k - 1) as f64 * k_int[k - 1] - prev;
    }
    Ok(prev)
}

/// One conjugate order `(n, ±m)` of a forked grating.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DonutOrder {
    pub n: u32,
    pub m: i32,
    pub side: Side,
    pub regulator: f64,
    pub lambda: f64,
    /// `e^{−iρλd} − 1`.
    pub contrast: Complex64,
}

impl DonutOrder {
    pub fn new(
        n: u32,
        m: i32,
        side: Side,
        regulator: f64,
        lambda: f64,
        contrast: Complex64,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument(
                "n·m = 0 is an ordinary Bragg peak; use the grating path".into(),
            ));
        }
        let winding = n as u64 * m.unsigned_abs() as u64;
        if winding > MAX_WINDING as u64 {
            return Err(Error::OutOfEnvelope(format!("|n·m| = {winding} exceeds {MAX_WINDING}")));
        }
        if !(regulator > 0.0 && regulator.is_finite()) {
            return Err(Error::InvalidArgument(format!("regulator must be > 0, got {regulator}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("wavelength must be > 0, got {lambda}")));
        }
        if !(contrast.re.is_finite() && contrast.im.is_finite()) {
            return Err(Error::NonFinite("contrast".into()));
        }
        Ok(Self { n, m, side, regulator, lambda, contrast })
    }

    /// `|n·m|`.
    pub fn order(&self) -> u32 {
        self.n * self.m.unsigned_abs()
    }

    /// Net phase winding of the amplitude around the order centre.
    pub fn winding(&self) -> i64 {
        -(self.side.sign() as i64) * self.n as i64 * self.m as i64
    }

    /// `A_n = (−iπ/λ)(contrast/2) sinc(nπ/2)`.
    pub fn prefactor(&self) -> Complex64 {
        Complex64::new(0.0, -PI / self.lambda) * self.contrast * 0.5 * sinc_half_order(self.n)
    }

    /// `C_nm = |πR²/λ · contrast · sinc(nπ/2) / (2^{l+1}(2+l) l!)|²`.
    pub fn intensity_coefficient(&self) -> f64 {
        let r = self.regulator;
        let scale = PI * r * r / self.lambda * sinc_half_order(self.n) / (2.0 * normalizer(self.order()));
        (self.contrast * scale).norm_sqr()
    }

    pub fn amplitude(&self, q_prime: f64, phi_prime: f64) -> Result<Complex64> {
        if !(q_prime >= 0.0 && q_prime.is_finite()) || !phi_prime.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need finite q′ ≥ 0 and φ′, got ({q_prime}, {phi_prime})"
            )));
        }
        let l = self.order();
        let r = self.regulator;
        let radial = r * r * bragg_radial_factor(l, r * q_prime)? / normalizer(l);
        let spiral = Complex64::from_polar(1.0, self.winding() as f64 * phi_prime);
        Ok(i_pow(l) * self.prefactor() * spiral * radial)
    }

    /// `|amplitude|²`, independent of `φ′`.
    pub fn intensity(&self, q_prime: f64) -> Result<f64> {
        Ok(self.amplitude(q_prime, 0.0)?.norm_sqr())
    }
}

fn i_pow(l: u32) -> Complex64 {
    match l % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Analytic far-field amplitude of one donut at `(q′, φ′)` about its centre.
pub fn donut_amplitude(order: &DonutOrder, q_prime: f64, phi_prime: f64) -> Result<Complex64> {
    order.amplitude(q_prime, phi_prime)
}

/// Smallest vortex radius `mλ/2π`.
pub fn min_vortex_radius(m: u32, lambda: f64) -> f64 {
    m as f64 * lambda / (2.0 * PI)
}

/// Warns when the regulator is large compared with the grating period.
pub fn regulator_warning(regulator: f64, period: f64) -> Option<String> {
    let limit = period / PI;
    (regulator >= limit).then(|| {
        format!("regulator R = {regulator} is not small against p/π = {limit:.4}; the closed form may be inaccurate")
    })
}

/// Sampled analytic radial profile of one order.
#[derive(Clone, Debug, PartialEq)]
pub struct DonutProfile {
    pub order_n: u32,
    pub charge_m: i32,
    pub side: Side,
    pub regulator_r: f64,
    pub lambda: f64,
    pub q_prime: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    pub intensity: Vec<f64>,
    pub azim_phase_sign: i32,
}

impl DonutProfile {
    /// Evaluates the amplitude along the ray at azimuth `phi_prime`.
    pub fn evaluate(order: &DonutOrder, q_prime: &[f64], phi_prime: f64) -> Result<Self> {
        let amplitude = q_prime
            .iter()
            .map(|&q| order.amplitude(q, phi_prime))
            .collect::<Result<Vec<_>>>()?;
        let intensity = amplitude.iter().map(|a| a.norm_sqr()).collect();
        Ok(Self {
            order_n: order.n,
            charge_m: order.m,
            side: order.side,
            regulator_r: order.regulator,
            lambda: order.lambda,
            q_prime: q_prime.to_vec(),
            amplitude,
            intensity,
            azim_phase_sign: order.winding().signum() as i32,
        })
    }

    /// `q′` of the largest sample; `None` when every sample is zero.
    pub fn argmax(&self) -> Option<f64> {
        let (i, v) = self
            .intensity
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))?;
        (*v > 0.0).then(|| self.q_prime[i])
    }
}
