use crate::error::{Error, Result};

pub const MAX_BESSEL_ORDER: u32 = 64;
pub const MAX_BESSEL_ARG: f64 = 1e4;

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// Bessel function of the first kind `J_n(x)` for `|n| ≤ 64`, `0 ≤ x ≤ 1e4`.
///
/// Negative orders use `J_{−n} = (−1)ⁿ J_n`.
pub fn bessel_j(n: i32, x: f64) -> Result<f64> {
    let order = n.unsigned_abs();
    if order > MAX_BESSEL_ORDER {
        return Err(Error::OutOfEnvelope(format!("Bessel order {n} exceeds {MAX_BESSEL_ORDER}")));
    }
    if !(0.0..=MAX_BESSEL_ARG).contains(&x) {
        return Err(Error::OutOfEnvelope(format!(
            "Bessel argument {x} outside [0, {MAX_BESSEL_ARG}]"
        )));
    }
    let value = if x == 0.0 {
        if order == 0 {
            1.0
        } else {
            0.0
        }
    } else if ascending_series_is_monotone(order, x) {
        ascending_series(order, x)
    } else {
        miller(order as usize, x)[order as usize]
    };
    Ok(if n < 0 && order % 2 == 1 { -value } else { value })
}

/// `J_0(x), …, J_nmax(x)` from one normalized downward recurrence.
pub fn bessel_j_sequence(nmax: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; nmax + 1];
        out[0] = 1.0;
        return out;
    }
    miller(nmax, x)
}

// Terms of the power series shrink monotonically when (x/2)² ≤ n + 1, so
// there is no cancellation to amplify rounding.
fn ascending_series_is_monotone(n: u32, x: f64) -> bool {
    0.25 * x * x <= (n + 1) as f64
}

fn ascending_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let q = -half * half;
    let mut k = 1.0;
    loop {
        term *= q / (k * (n as f64 + k));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || term == 0.0 {
            return sum;
        }
        k += 1.0;
    }
}

/// Miller's algorithm, normalized with `J_0 + 2 Σ J_2k = 1`.
fn miller(nmax: usize, x: f64) -> Vec<f64> {
    let top = nmax.max(x.ceil() as usize);
    let mut start = top
        + 20
        + (15.0 * (top as f64).cbrt()) as usize
        + (40.0 * nmax as f64).sqrt() as usize;
    start += start % 2;

    let mut out = vec![0.0; nmax + 1];
    let inv_x = 1.0 / x;
    let mut above = 0.0;
    let mut current = 1e-30;
    let mut even_sum = 0.0;
    for k in (1..=start).rev() {
        let below = 2.0 * k as f64 * inv_x * current - above;
        above = current;
        current = below;
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = current;
        }
        if idx > 0 && idx % 2 == 0 {
            even_sum += current;
        }
        if current.abs() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            above *= RESCALE_BY;
            even_sum *= RESCALE_BY;
            for v in out.iter_mut().skip(idx) {
                *v *= RESCALE_BY;
            }
        }
    }
    let norm = current + 2.0 * even_sum;
    for v in &mut out {
        *v /= norm;
    }
    out
}
