use super::dd::Dd;
use crate::error::{Error, Result};

/// Stop once a term falls below this fraction of the running sum.
pub const HYP_REL_TOL: f64 = 1e-12;
pub const HYP_MAX_TERMS: usize = 10_000;

const MAX_ABS_Z: f64 = 1e4;

// The sum is carried in double-double (~1e-32 relative), so this much
// cancellation still leaves HYP_REL_TOL of accuracy.
const MAX_CANCELLATION: f64 = 1e19;

/// Generalized hypergeometric `₁F₂(a; b1, b2; z)` by direct summation.
///
/// Terms are accumulated in double-double arithmetic; when the largest term
/// exceeds the result by more than the extended precision can absorb the
/// evaluation fails with [`Error::PrecisionLoss`] rather than returning noise.
pub fn hyp1f2(a: f64, b1: f64, b2: f64, z: f64) -> Result<f64> {
    if ![a, b1, b2, z].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("hyp1f2 parameters must be finite".into()));
    }
    for b in [b1, b2] {
        if b <= 0.0 && b.fract() == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "lower parameter {b} is a non-positive integer"
            )));
        }
    }
    if z.abs() > MAX_ABS_Z {
        return Err(Error::OutOfEnvelope(format!("|z| = {} exceeds {MAX_ABS_Z}", z.abs())));
    }
    if z == 0.0 {
        return Ok(1.0);
    }

    let zd = Dd::new(z);
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    let mut largest = 1.0f64;
    let mut converged = false;
    for k in 0..HYP_MAX_TERMS {
        let kf = k as f64;
        let num = Dd::sum(a, kf) * zd;
        let den = Dd::sum(b1, kf) * Dd::sum(b2, kf) * Dd::new(kf + 1.0);
        term = term * num / den;
        sum = sum + term;

        let size = term.hi.abs();
        largest = largest.max(size);
        if size == 0.0 {
            converged = true;
            break;
        }
        let ratio = ((a + kf) * z / ((b1 + kf) * (b2 + kf) * (kf + 1.0))).abs();
        if ratio < 1.0 && size <= HYP_REL_TOL * sum.abs().hi {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(HYP_MAX_TERMS));
    }

    let value = sum.to_f64();
    let cancellation = largest / value.abs();
    if cancellation > MAX_CANCELLATION {
        return Err(Error::PrecisionLoss(cancellation));
    }
    Ok(value)
}
