//! Special functions used by the Bragg-donut solution: Bessel `J_n`, Struve
//! `H_0`/`H_1`, the generalized hypergeometric `₁F₂`, and the donut amplitude
//! built from them.

mod bessel;
mod donut;
mod dd;
mod hyper;
mod struve;

pub use bessel::{bessel_j, bessel_j_sequence, MAX_BESSEL_ARG, MAX_BESSEL_ORDER};
pub use donut::{
    bragg_radial_factor, donut_amplitude, min_vortex_radius, radial_integral,
    radial_integral_reduction, radial_integral_series, regulator_warning, DonutOrder,
    DonutProfile, Side, DEFAULT_REGULATOR, MAX_WINDING,
};
pub use hyper::{hyp1f2, HYP_MAX_TERMS, HYP_REL_TOL};
pub use struve::{struve_h, MAX_STRUVE_ARG};

use std::f64::consts::PI;

/// Unnormalized cardinal sine `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    // below this the Taylor form is exact to working precision
    if x.abs() < 1e-4 {
        let x2 = x * x;
        return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
    }
    x.sin() / x
}

/// `sinc(nπ/2)` with the even orders returned as exact zeros.
pub fn sinc_half_order(n: u32) -> f64 {
    match n {
        0 => 1.0,
        n if n % 2 == 0 => 0.0,
        n => {
            let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            sign * 2.0 / (n as f64 * PI)
        }
    }
}

/// `n!` for `n ≤ 32`, accumulated once in double precision.
pub(crate) const FACTORIALS: [f64; 33] = {
    let mut table = [1.0; 33];
    let mut k = 1;
    while k < 33 {
        table[k] = table[k - 1] * k as f64;
        k += 1;
    }
    table
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_examples() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-15);
        assert!((sinc(PI / 2.0) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn sinc_small_argument_branch_is_continuous() {
        for &x in &[9.99e-5, 1.0001e-4, 1e-6, -3e-5] {
            let direct = f64::sin(x) / x;
            assert!(((sinc(x) - direct) / direct).abs() < 1e-14);
        }
    }

    #[test]
    fn half_order_matches_sinc() {
        for n in 1..40u32 {
            let direct = sinc(n as f64 * PI / 2.0);
            assert!((sinc_half_order(n) - direct).abs() < 1e-15, "n = {n}");
        }
    }

    #[test]
    fn factorial_table() {
        assert_eq!(FACTORIALS[0], 1.0);
        assert_eq!(FACTORIALS[5], 120.0);
        assert_eq!(FACTORIALS[20], 2_432_902_008_176_640_000.0);
        let f32_ = 2.631_308_369_336_935e35;
        assert!((FACTORIALS[32] - f32_).abs() / f32_ < 1e-15);
    }
}
