//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

// Gauss–Kronrod 7/15 nodes and weights on [−1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature by bisection on a priority list.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    let mut parts = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..20_000 {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let error: f64 = parts.iter().map(|p| p.2 .1).sum();
        if error <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .unwrap();
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk15(&f, lo, mid)));
        parts.push((mid, hi, gk15(&f, mid, hi)));
    }
    parts.iter().map(|p| p.2 .0).sum()
}

/// `J_n(x) = (1/π) ∫₀^π cos(nτ − x sin τ) dτ` by the trapezoid rule, which
/// converges geometrically for this periodic integrand.
pub fn bessel_trapezoid(n: i32, x: f64) -> f64 {
    let m = (x.abs() + n.abs() as f64) as usize + 64;
    let h = PI / m as f64;
    let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
    let mut s = 0.5 * (f(0.0) + f(PI));
    for k in 1..m {
        s += f(k as f64 * h);
    }
    s * h / PI
}

/// Struve `H_0`/`H_1` from their integral representations.
pub fn struve_quadrature(order: u32, x: f64) -> f64 {
    let half = PI / 2.0;
    let tol = 1e-14;
    match order {
        0 => 2.0 / PI * integrate(|t| (x * t.cos()).sin(), 0.0, half, tol, 0.0),
        1 => 2.0 * x / PI * integrate(|t| (x * t.cos()).sin() * t.sin().powi(2), 0.0, half, tol, 0.0),
        _ => unreachable!(),
    }
}

/// `∫₀^x t J_l(t) dt` with a Bessel function that shares no code with the
/// library.
pub fn radial_integral_quadrature(l: u32, x: f64) -> f64 {
    integrate(|t| t * bessel_trapezoid(l as i32, t), 0.0, x, 1e-15, 1e-13)
}

/// Unwrapped phase increments of a closed sequence of complex samples.
pub fn total_winding(phases: &[f64]) -> f64 {
    let mut total = 0.0;
    for w in phases.windows(2) {
        let mut d = w[1] - w[0];
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        total += d;
    }
    total
}
