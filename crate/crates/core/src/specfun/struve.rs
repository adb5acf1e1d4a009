use std::f64::consts::{FRAC_2_PI, PI};

use super::bessel::bessel_j_sequence;
use crate::error::{Error, Result};

pub const MAX_STRUVE_ARG: f64 = 1e3;

// Above this the alternating power series starts losing digits.
const SERIES_LIMIT: f64 = 8.0;

/// Struve function `H_0(x)` or `H_1(x)` for `0 ≤ x ≤ 1e3`.
///
/// Small arguments use the power series; larger ones the Neumann series in
/// Bessel functions,
/// `H_0 = (4/π) Σ J_{2k+1}/(2k+1)` and
/// `H_1 = (2/π)(1 − J_0) + (4/π) Σ_{k≥1} J_{2k}/(4k² − 1)`,
/// whose terms are all bounded by one.
pub fn struve_h(order: u32, x: f64) -> Result<f64> {
    if order > 1 {
        return Err(Error::InvalidArgument(format!("Struve order {order} is not supported")));
    }
    if !(0.0..=MAX_STRUVE_ARG).contains(&x) {
        return Err(Error::OutOfEnvelope(format!(
            "Struve argument {x} outside [0, {MAX_STRUVE_ARG}]"
        )));
    }
    if x < SERIES_LIMIT {
        Ok(power_series(order, x))
    } else {
        Ok(neumann_series(order, x))
    }
}

fn power_series(order: u32, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let q = -0.25 * x * x;
    // leading terms: 2x/π and 2x²/(3π)
    let (mut term, shift) = if order == 0 {
        (FRAC_2_PI * x, 1.5)
    } else {
        (FRAC_2_PI * x * x / 3.0, 2.5)
    };
    let mut sum = term;
    let mut k = 0.0;
    loop {
        term *= q / ((k + 1.5) * (k + shift));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            return sum;
        }
        k += 1.0;
    }
}

fn neumann_series(order: u32, x: f64) -> f64 {
    let kmax = x.ceil() as usize + 30 + (15.0 * x.cbrt()) as usize;
    let j = bessel_j_sequence(kmax, x);
    if order == 0 {
        let s: f64 = (0..)
            .map(|k| 2 * k + 1)
            .take_while(|&i| i <= kmax)
            .map(|i| j[i] / i as f64)
            .sum();
        4.0 / PI * s
    } else {
        let s: f64 = (1..)
            .take_while(|&k| 2 * k <= kmax)
            .map(|k| j[2 * k] / (4.0 * (k * k) as f64 - 1.0))
            .sum();
        FRAC_2_PI * (1.0 - j[0]) + 4.0 / PI * s
    }
}
