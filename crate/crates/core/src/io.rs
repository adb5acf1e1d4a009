//! File formats: CSV tables, JSON sidecars and the binary intensity grid.
//!
//! Binary grid layout (little-endian): `u64 nx`, `u64 ny`, `f64 dqx`,
//! `f64 dqy`, `f64 lambda`, then `nx·ny` `f64` intensities row-major
//! (`[iy][ix]`, `q_y` outer), zero frequency at `(ny/2, nx/2)`.

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::diffraction::{DiffractionPattern, RadialProfile};
use crate::error::{Error, Result};
use crate::grating::GratingSpec;
use crate::instrument::InstrumentConfig;
use crate::sesans::{Mode, SesansCurve, SesansMap};
use crate::specfun::DonutProfile;

pub const DONUT_COLUMNS: [&str; 4] = ["q_prime", "intensity", "re_amplitude", "im_amplitude"];
pub const RADIAL_COLUMNS: [&str; 3] = ["q_prime", "intensity", "count"];
pub const MAP_COLUMNS: [&str; 3] = ["xi_x_nm", "xi_y_nm", "pol"];

const GRID_HEADER_BYTES: usize = 40;

fn fmt(v: f64) -> String {
    // shortest round-trip representation keeps output deterministic
    format!("{v:?}")
}

pub fn write_donut_csv<W: Write>(out: W, profile: &DonutProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DONUT_COLUMNS)?;
    for ((q, i), a) in profile.q_prime.iter().zip(&profile.intensity).zip(&profile.amplitude) {
        w.write_record([fmt(*q), fmt(*i), fmt(a.re), fmt(a.im)])?;
    }
    w.flush()?;
    Ok(())
}

/// Empty bins are written as `NaN` with a zero count.
pub fn write_radial_csv<W: Write>(out: W, profile: &RadialProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RADIAL_COLUMNS)?;
    for ((q, i), c) in profile.q_prime.iter().zip(&profile.intensity).zip(&profile.counts) {
        w.write_record([fmt(*q), fmt(*i), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `xi_nm,pol` plus `lambda_nm` for time-of-flight curves.
pub fn write_curve_csv<W: Write>(out: W, curve: &SesansCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match &curve.lambda {
        Some(lambda) => {
            w.write_record(["xi_nm", "pol", "lambda_nm"])?;
            for ((x, p), l) in curve.xi.iter().zip(&curve.pol).zip(lambda) {
                w.write_record([fmt(*x), fmt(*p), fmt(*l)])?;
            }
        }
        None => {
            w.write_record(["xi_nm", "pol"])?;
            for (x, p) in curve.xi.iter().zip(&curve.pol) {
                w.write_record([fmt(*x), fmt(*p)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Long-form map table, `xi_y` outer.
pub fn write_map_csv<W: Write>(out: W, map: &SesansMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MAP_COLUMNS)?;
    for (iy, y) in map.xi_y.iter().enumerate() {
        for (ix, x) in map.xi_x.iter().enumerate() {
            w.write_record([fmt(*x), fmt(*y), fmt(map.pol[[iy, ix]])])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// JSON sidecar describing a curve CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub columns: Vec<String>,
    pub orientation_rad: f64,
    pub mode: Mode,
    pub resolution_applied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frac_resolution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<GratingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instrument: Option<InstrumentConfig>,
}

impl CurveMeta {
    pub fn for_curve(curve: &SesansCurve) -> Self {
        let mut columns = vec!["xi_nm".to_string(), "pol".to_string()];
        if curve.lambda.is_some() {
            columns.push("lambda_nm".into());
        }
        CurveMeta {
            columns,
            orientation_rad: curve.orientation,
            mode: curve.mode,
            resolution_applied: curve.resolution_applied,
            frac_resolution: None,
            stack: None,
            spec: None,
            instrument: None,
        }
    }
}

/// Names of the columns to read from a foreign curve file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnMap {
    pub xi: String,
    pub pol: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self { xi: "xi_nm".into(), pol: "pol".into() }
    }
}

/// Reads `(ξ, P)` pairs sorted by ξ. Rows with an empty or non-finite value
/// in either column are skipped; an input without usable rows is an error.
pub fn read_curve_columns<R: Read>(input: R, columns: &ColumnMap) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column '{name}' (have: {})", headers.iter().collect::<Vec<_>>().join(", "))))
    };
    let (ix, ip) = (find(&columns.xi)?, find(&columns.pol)?);

    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let parse = |i: usize| -> Result<Option<f64>> {
            let field = record.get(i).unwrap_or("");
            if field.is_empty() {
                return Ok(None);
            }
            field
                .parse::<f64>()
                .map(|v| v.is_finite().then_some(v))
                .map_err(|_| Error::Format(format!("row {}: '{field}' is not a number", line + 2)))
        };
        if let (Some(x), Some(p)) = (parse(ix)?, parse(ip)?) {
            rows.push((x, p));
        }
    }
    if rows.is_empty() {
        return Err(Error::Format("curve file has no usable data rows".into()));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(rows.into_iter().unzip())
}

/// Header-plus-payload grid as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityGrid {
    pub dqx: f64,
    pub dqy: f64,
    pub lambda: f64,
    /// `[iy, ix]`.
    pub intensity: Array2<f64>,
}

impl From<&DiffractionPattern> for IntensityGrid {
    fn from(dp: &DiffractionPattern) -> Self {
        IntensityGrid { dqx: dp.dqx, dqy: dp.dqy, lambda: dp.lambda, intensity: dp.intensity.clone() }
    }
}

pub fn write_grid<W: Write>(mut out: W, grid: &IntensityGrid) -> Result<()> {
    let (ny, nx) = grid.intensity.dim();
    let mut buf = Vec::with_capacity(GRID_HEADER_BYTES + 8 * nx * ny);
    buf.extend_from_slice(&(nx as u64).to_le_bytes());
    buf.extend_from_slice(&(ny as u64).to_le_bytes());
    for v in [grid.dqx, grid.dqy, grid.lambda] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in grid.intensity.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn read_grid<R: Read>(mut input: R) -> Result<IntensityGrid> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < GRID_HEADER_BYTES {
        return Err(Error::Format("grid file shorter than its header".into()));
    }
    let word = |k: usize| -> [u8; 8] { bytes[8 * k..8 * k + 8].try_into().expect("8-byte slice") };
    let nx = u64::from_le_bytes(word(0)) as usize;
    let ny = u64::from_le_bytes(word(1)) as usize;
    let (dqx, dqy, lambda) =
        (f64::from_le_bytes(word(2)), f64::from_le_bytes(word(3)), f64::from_le_bytes(word(4)));
    let expected = nx
        .checked_mul(ny)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(GRID_HEADER_BYTES))
        .ok_or_else(|| Error::Format("grid dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "grid payload is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes[GRID_HEADER_BYTES..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let intensity = Array2::from_shape_vec((ny, nx), values)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(IntensityGrid { dqx, dqy, lambda, intensity })
}
