mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vortex_core::grating::{phase_map, GratingSpec, PhaseMap, SLD_SILICON};
use vortex_core::instrument::InstrumentConfig;
use vortex_core::sesans::*;

fn fdg(charge: i32, depth: f64) -> GratingSpec {
    GratingSpec { charge, depth, ..GratingSpec::default() }
}

fn pi_depth(lambda: f64) -> f64 {
    PI / (SLD_SILICON * lambda)
}

#[test]
fn fft_map_matches_direct_sum_on_random_shifts() {
    let pm = phase_map(&fdg(1, pi_depth(0.4)), 0.4, 64, 64).unwrap();
    let map = polarization_map(&pm).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (sx, sy) = (rng.random_range(-32i64..32), rng.random_range(-32i64..32));
        let want = autocorrelation_oracle(&pm, sx as f64 * pm.dx(), sy as f64 * pm.dy()).unwrap();
        let got = map.pol[[(32 + sy) as usize, (32 + sx) as usize]];
        worst = worst.max((got - want).abs());
    }
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn oracle_trivial_cases() {
    let spec = fdg(1, 3000.0);
    let pm = phase_map(&spec, 0.4, 40, 40).unwrap();
    assert!((autocorrelation_oracle(&pm, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
    let flat = PhaseMap::from_values(&spec, 0.4, ndarray::Array2::from_elem((40, 40), -1.7)).unwrap();
    for s in [1.0, 7.0, -13.0] {
        let v = autocorrelation_oracle(&flat, s * flat.dx(), 2.0 * s * flat.dy()).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }
}

#[test]
fn tiled_maps_are_periodic() {
    let spec = GratingSpec { tiles_x: 2, tiles_y: 2, ..fdg(1, pi_depth(0.4)) };
    let pm = phase_map(&spec, 0.4, 128, 128).unwrap();
    let map = polarization_map(&pm).unwrap();
    for iy in 0..64 {
        for ix in 0..64 {
            assert!((map.pol[[iy, ix]] - map.pol[[iy, ix + 64]]).abs() < 1e-6);
            assert!((map.pol[[iy, ix]] - map.pol[[iy + 64, ix]]).abs() < 1e-6);
        }
    }
}

#[test]
fn polarization_is_even_in_xi() {
    let pm = phase_map(&fdg(2, 9000.0), 0.5, 80, 80).unwrap();
    let map = polarization_map(&pm).unwrap();
    for k in 1..40 {
        assert!((map.pol[[40, 40 + k]] - map.pol[[40, 40 - k]]).abs() < 1e-9);
        assert!((map.pol[[40 + k, 40]] - map.pol[[40 - k, 40]]).abs() < 1e-9);
    }
}

#[test]
fn slices_interpolate_between_lattice_points() {
    let pm = phase_map(&fdg(1, 7000.0), 0.4, 80, 80).unwrap();
    let map = polarization_map(&pm).unwrap();
    let dx = pm.dx();
    let c = polarization_slice(&map, PERPENDICULAR, &[3.0 * dx, 3.5 * dx]).unwrap();
    assert!((c.pol[0] - map.pol[[40, 43]]).abs() < 1e-14);
    assert!((c.pol[1] - 0.5 * (map.pol[[40, 43]] + map.pol[[40, 44]])).abs() < 1e-14);
    let p = polarization_slice(&map, PARALLEL, &[3.0 * dx]).unwrap();
    assert!((p.pol[0] - map.pol[[43, 40]]).abs() < 1e-12);
}

#[test]
fn tof_band_spans_expected_lengths() {
    let inst = InstrumentConfig::default();
    let c = tof_curve(&fdg(1, 5500.0), &inst, PERPENDICULAR, 96, 16).unwrap();
    assert_eq!(c.len(), 96);
    assert!((c.xi[0] - 1233.0).abs() < 1e-9);
    assert!((c.xi[95] - 15_104.25).abs() < 1e-9);
    assert!(c.xi.windows(2).all(|w| w[1] > w[0]));
    check_unit_range(&c.pol).unwrap();
}

#[test]
fn tof_without_grooves_is_unpolarized_loss_free() {
    let inst = InstrumentConfig::default();
    let c = tof_curve(&fdg(1, 0.0), &inst, PARALLEL, 24, 16).unwrap();
    assert!(c.pol.iter().all(|p| (p - 1.0).abs() < 1e-12));
}

#[test]
fn tof_point_matches_monochromatic_curve() {
    let inst = InstrumentConfig { band: [0.3, 0.5], ..InstrumentConfig::default() };
    let spec = fdg(2, 4000.0);
    let tof = tof_curve(&spec, &inst, PERPENDICULAR, 3, 16).unwrap();
    // the middle wavelength is exactly 0.4 nm
    let lambda = tof.lambda.as_ref().unwrap()[1];
    assert!((lambda - 0.4).abs() < 1e-15);
    let mono = monochromatic_curve(&spec, lambda, PERPENDICULAR, &[tof.xi[1]], 16).unwrap();
    assert!((mono.pol[0] - tof.pol[1]).abs() < 1e-12);
}

#[test]
fn exact_readout_agrees_with_map_at_lattice_shifts() {
    let spec = fdg(1, 6000.0);
    let (nx, ny) = spec.grid_for(16);
    let pm = phase_map(&spec, 0.6, nx, ny).unwrap();
    let map = polarization_map(&pm).unwrap();
    let xi: Vec<f64> = (0..20).map(|k| k as f64 * 2.0 * pm.dx()).collect();
    let mono = monochromatic_curve(&spec, 0.6, PERPENDICULAR, &xi, 16).unwrap();
    let sliced = polarization_slice(&map, PERPENDICULAR, &xi).unwrap();
    for (a, b) in mono.pol.iter().zip(&sliced.pol) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn resolution_damps_cosine_like_continuous_gaussian() {
    let period = 2000.0;
    let q = 2.0 * PI / period;
    let xi: Vec<f64> = (0..=2000).map(|k| 5000.0 + k as f64 * 5.0).collect();
    let curve = SesansCurve {
        pol: xi.iter().map(|x| (q * x).cos()).collect(),
        xi: xi.clone(),
        lambda: None,
        orientation: PERPENDICULAR,
        mode: Mode::Monochromatic { lambda_nm: 0.4 },
        resolution_applied: false,
    };
    let out = convolve_resolution(&curve, 0.02).unwrap();
    let i = xi.iter().position(|&x| x == 10_000.0).unwrap();
    let sigma = 200.0;
    // direct continuous convolution at ξ = 10 µm
    let want = common::integrate(
        |s| (-(s * s) / (2.0 * sigma * sigma)).exp() * (q * (10_000.0 + s)).cos(),
        -12.0 * sigma,
        12.0 * sigma,
        1e-14,
        1e-12,
    ) / (sigma * (2.0 * PI).sqrt());
    assert!((want - (-(q * sigma).powi(2) / 2.0).exp()).abs() < 1e-9);
    assert!((out.pol[i] - want).abs() < 1e-6, "{} vs {want}", out.pol[i]);
}

#[test]
fn stacked_small_contrast_gratings_act_like_deeper_one() {
    let inst = InstrumentConfig::default();
    let single = tof_curve(&fdg(1, 500.0), &inst, PERPENDICULAR, 48, 16).unwrap();
    let deep = tof_curve(&fdg(1, equivalent_depth(500.0, 2)), &inst, PERPENDICULAR, 48, 16).unwrap();
    let stacked = stack_product(&[single.clone(), single]).unwrap();
    let worst = stacked.pol.iter().zip(&deep.pol).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn charges_give_distinct_perpendicular_curves() {
    let lambda = 0.4;
    let xi: Vec<f64> = (0..=200).map(|k| k as f64 * 50.0).collect();
    let curves: Vec<SesansCurve> = (1..=3)
        .map(|m| monochromatic_curve(&fdg(m, pi_depth(lambda)), lambda, PERPENDICULAR, &xi, 16).unwrap())
        .collect();
    for a in 0..3 {
        for b in a + 1..3 {
            let d = curves[a].pol.iter().zip(&curves[b].pol).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(d > 0.05, "m={} vs m={}: {d}", a + 1, b + 1);
        }
    }
}

fn arbitrary_curve(values: Vec<f64>) -> SesansCurve {
    SesansCurve {
        xi: (0..values.len()).map(|k| k as f64).collect(),
        pol: values,
        lambda: None,
        orientation: PARALLEL,
        mode: Mode::Tof { xi0_per_nm: 1.37e4, band_nm: [0.3, 1.05] },
        resolution_applied: true,
    }
}

proptest! {
    #[test]
    fn stacking_is_order_independent(
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 6), 2..6),
        seed in any::<u64>(),
    ) {
        let curves: Vec<SesansCurve> = rows.into_iter().map(arbitrary_curve).collect();
        let mut shuffled = curves.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = stack_product(&curves).unwrap();
        let b = stack_product(&shuffled).unwrap();
        for (x, y) in a.pol.iter().zip(&b.pol) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn maps_stay_in_unit_range(charge in -3i32..=3, depth in 0.0f64..50_000.0, lambda in 0.2f64..1.2) {
        let pm = phase_map(&fdg(charge, depth), lambda, 40, 40).unwrap();
        let map = polarization_map(&pm).unwrap();
        prop_assert!((map.pol[[20, 20]] - 1.0).abs() < 1e-9);
        prop_assert!(check_unit_range(map.pol.as_slice().unwrap()).is_ok());
    }

    #[test]
    fn resolution_preserves_constants(c in -1.0f64..1.0, frac in 0.0f64..0.2) {
        let curve = SesansCurve { pol: vec![c; 30], ..arbitrary_curve(vec![0.0; 30]) };
        let curve = SesansCurve { resolution_applied: false, xi: (1..=30).map(|k| (k * k) as f64).collect(), ..curve };
        let out = convolve_resolution(&curve, frac).unwrap();
        prop_assert!(out.pol.iter().all(|p| (p - c).abs() < 1e-13));
    }
}
