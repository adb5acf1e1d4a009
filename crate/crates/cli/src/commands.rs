//! The five subcommands. Each takes a fully merged [`Config`] and writes its
//! products into an [`OutputDir`].

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;
use serde_json::json;
use vortex_core::diffraction::{
    diffraction_pattern_with, donut_peak_radius, radial_profile, transmitted_amplitude, DiffractionOptions,
};
use vortex_core::grating::{phase_map, GratingSpec};
use vortex_core::instrument::{fit_depth, interpolate, tof_model, FitOptions, FitReport, InstrumentConfig};
use vortex_core::io::{
    read_curve_columns, write_curve_csv, write_donut_csv, write_grid, write_map_csv, write_radial_csv, ColumnMap,
    CurveMeta, IntensityGrid, MAP_COLUMNS,
};
use vortex_core::sesans::{
    convolve_resolution, monochromatic_curve, polarization_map, stack_product, tof_curve, Mode, SesansCurve,
};
use vortex_core::specfun::{regulator_warning, DonutOrder, DonutProfile, Side};
use vortex_core::Error;

use crate::config::{Config, SesansMode};
use crate::output::OutputDir;
use crate::CliError;

#[derive(Serialize)]
struct OrderSummary {
    n: u32,
    side: Side,
    centre_qx_per_nm: f64,
    centre_intensity: f64,
    profile_peak_intensity: f64,
    annulus_power: f64,
    donut: bool,
    peak_radius_per_nm: Option<f64>,
}

pub fn diffract(cfg: &Config, out: &mut OutputDir) -> Result<(), CliError> {
    let (spec, sim) = (&cfg.grating, &cfg.simulation);
    let (nx, ny) = spec.grid_for(sim.samples_per_period);
    let pm = phase_map(spec, sim.lambda_nm, nx, ny)?;
    let dp = diffraction_pattern_with(&pm, DiffractionOptions { pad: sim.pad, apodization: sim.apodization })?;
    out.write("pattern.bin", |w| Ok(write_grid(w, &IntensityGrid::from(&dp))?))?;

    let cap = PI / spec.period;
    let mut orders = Vec::new();
    for n in [1u32, 3] {
        let profile = radial_profile(&dp, n, Side::Plus, sim.radial_bins)?;
        out.write(&format!("radial_n{n}.csv"), |w| Ok(write_radial_csv(w, &profile)?))?;
        let peak = match donut_peak_radius(&profile) {
            Ok(r) => Some(r),
            Err(Error::NotADonut) => None,
            Err(e) => return Err(e.into()),
        };
        if peak.is_none() {
            log::info!("order n={n}: not a donut");
        }
        orders.push(OrderSummary {
            n,
            side: Side::Plus,
            centre_qx_per_nm: dp.order_centre(n, Side::Plus).0,
            centre_intensity: dp.centre_intensity(n, Side::Plus)?,
            profile_peak_intensity: profile.intensity.iter().cloned().filter(|v| v.is_finite()).fold(0.0, f64::max),
            annulus_power: dp.annulus_power(n, Side::Plus, cap)?,
            donut: peak.is_some(),
            peak_radius_per_nm: peak,
        });
    }
    let summary = json!({
        "grid": {
            "file": "pattern.bin",
            "nx": dp.nx(),
            "ny": dp.ny(),
            "dqx_per_nm": dp.dqx,
            "dqy_per_nm": dp.dqy,
            "qx_min_per_nm": dp.qx[0],
            "qy_min_per_nm": dp.qy[0],
            "lambda_nm": dp.lambda,
        },
        "parseval_residual": dp.parseval_residual(),
        "orders": orders,
        "spec": spec,
        "samples_per_period": sim.samples_per_period,
        "pad": sim.pad,
        "apodization": sim.apodization,
    });
    out.write_json("summary.json", &summary)?;
    Ok(())
}

fn slice_grid(spec: &GratingSpec, cfg: &Config) -> Vec<f64> {
    let sim = &cfg.simulation;
    let max = sim.xi_max_nm.unwrap_or(0.5 * spec.total_width().min(spec.total_height()));
    (0..sim.xi_points).map(|k| k as f64 * max / (sim.xi_points - 1) as f64).collect()
}

pub fn sesans(cfg: &Config, out: &mut OutputDir) -> Result<(), CliError> {
    let (spec, sim, inst) = (&cfg.grating, &cfg.simulation, &cfg.instrument);
    let orientation = sim.orientation_deg.to_radians();
    let curve = match sim.mode {
        SesansMode::Map => {
            if sim.stack > 1 {
                return Err(CliError::Config("--stack applies to slice and tof modes only".into()));
            }
            let (nx, ny) = spec.grid_for(sim.samples_per_period);
            let pm = phase_map(spec, sim.lambda_nm, nx, ny)?;
            let map = polarization_map(&pm)?;
            out.write("map.csv", |w| Ok(write_map_csv(w, &map)?))?;
            let meta = json!({
                "columns": MAP_COLUMNS,
                "nx": nx,
                "ny": ny,
                "lambda_nm": sim.lambda_nm,
                "resolution_applied": false,
                "spec": spec,
            });
            out.write_json("map.json", &meta)?;
            return Ok(());
        }
        SesansMode::Slice => {
            let xi = slice_grid(spec, cfg);
            monochromatic_curve(spec, sim.lambda_nm, orientation, &xi, sim.samples_per_period)?
        }
        SesansMode::Tof => tof_curve(spec, inst, orientation, sim.n_lambda, sim.samples_per_period)?,
    };
    let curve = if sim.stack > 1 { stack_product(&vec![curve; sim.stack])? } else { curve };
    let curve = if sim.resolution { convolve_resolution(&curve, inst.frac_resolution)? } else { curve };

    out.write("curve.csv", |w| Ok(write_curve_csv(w, &curve)?))?;
    let meta = CurveMeta {
        frac_resolution: curve.resolution_applied.then_some(inst.frac_resolution),
        stack: Some(sim.stack),
        spec: Some(spec.clone()),
        instrument: Some(inst.clone()),
        ..CurveMeta::for_curve(&curve)
    };
    out.write_json("curve.json", &meta)?;
    Ok(())
}

#[derive(Serialize)]
struct FitOutput<'a> {
    #[serde(flatten)]
    report: &'a FitReport,
    orientation_rad: f64,
    data_rows: usize,
    d_range_nm: [f64; 2],
    n_grid: usize,
}

pub fn fit(cfg: &Config, data: &[u8], out: &mut OutputDir) -> Result<(), CliError> {
    let (sim, inst, f) = (&cfg.simulation, &cfg.instrument, &cfg.fit);
    let columns = ColumnMap { xi: f.xi_column.clone(), pol: f.pol_column.clone() };
    let (xi, pol) = read_curve_columns(data, &columns)?;
    let orientation = sim.orientation_deg.to_radians();
    let measured = SesansCurve {
        xi,
        pol,
        lambda: None,
        orientation,
        mode: Mode::Tof { xi0_per_nm: inst.xi0, band_nm: inst.band },
        resolution_applied: true,
    };
    let opts = FitOptions {
        n_lambda: sim.n_lambda,
        samples_per_period: sim.samples_per_period,
        tolerance_nm: f.tolerance_nm,
    };
    let range = [f.d_min_nm, f.d_max_nm];
    let report = fit_depth(&measured, &cfg.grating, inst, range, f.n_grid, &opts)?;
    log::info!("best depth {:.1} nm, sse {:.4e}", report.d_best_nm, report.sse);

    let summary = FitOutput { report: &report, orientation_rad: orientation, data_rows: measured.len(), d_range_nm: range, n_grid: f.n_grid };
    out.write_json("fit_report.json", &summary)?;

    let model = tof_model(&report.spec, inst, orientation, &opts)?;
    out.write("fit_overlay.csv", |w| overlay_csv(w, &measured, &model))?;
    Ok(())
}

fn overlay_csv<W: Write>(w: &mut W, data: &SesansCurve, model: &SesansCurve) -> Result<(), CliError> {
    let io = |e| CliError::io("fit_overlay.csv", e);
    writeln!(w, "xi_nm,data,model").map_err(io)?;
    for (&x, &p) in data.xi.iter().zip(&data.pol) {
        let m = interpolate(model, x).map(|v| format!("{v:?}")).unwrap_or_default();
        writeln!(w, "{x:?},{p:?},{m}").map_err(io)?;
    }
    Ok(())
}

pub fn donut(cfg: &Config, out: &mut OutputDir) -> Result<(), CliError> {
    let (spec, d, lambda) = (&cfg.grating, &cfg.donut, cfg.simulation.lambda_nm);
    if d.points < 2 || !(d.q_max > 0.0 && d.q_max.is_finite()) {
        return Err(CliError::Config("donut.points must be ≥ 2 and donut.q_max positive".into()));
    }
    let contrast = 2.0 * transmitted_amplitude(spec.sld, lambda, spec.depth) - 2.0;
    let order = DonutOrder::new(d.order, spec.charge, d.side, d.regulator, lambda, contrast)?;
    let warnings: Vec<String> = regulator_warning(d.regulator, spec.period).into_iter().collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    let q: Vec<f64> = (0..d.points).map(|k| k as f64 * d.q_max / (d.points - 1) as f64).collect();
    let profile = DonutProfile::evaluate(&order, &q, d.azimuth_rad)?;
    out.write("donut.csv", |w| Ok(write_donut_csv(w, &profile)?))?;
    let meta = json!({
        "order_n": d.order,
        "charge_m": spec.charge,
        "side": d.side,
        "winding": order.winding(),
        "regulator": d.regulator,
        "lambda_nm": lambda,
        "azimuth_rad": d.azimuth_rad,
        "intensity_coefficient": order.intensity_coefficient(),
        "peak_q_prime": profile.argmax(),
        "warnings": warnings,
    });
    out.write_json("donut.json", &meta)?;
    Ok(())
}

pub fn xi_report(inst: &InstrumentConfig, lambdas: &[f64]) -> Result<serde_json::Value, CliError> {
    let computed = inst.computed_xi0()?;
    let [lo, hi] = inst.xi_band();
    let points: Vec<_> = lambdas
        .iter()
        .map(|&l| {
            if l > 0.0 && l.is_finite() {
                Ok(json!({ "lambda_nm": l, "xi_nm": inst.xi_of_lambda(l) }))
            } else {
                Err(CliError::Config(format!("wavelength {l} must be positive")))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(json!({
        "xi0_per_nm": inst.xi0,
        "computed_xi0_per_nm": computed,
        "relative_difference": computed / inst.xi0 - 1.0,
        "band_nm": inst.band,
        "xi_band_nm": [lo, hi],
        "points": points,
    }))
}
