//! Forked grating geometry: indicator functions and accumulated phase maps.
//!
//! Coordinates are in nanometres. Within a plaquette the origin sits on the
//! topological defect, grooves run along `y`, and the grating vector points
//! along `x`. Grids are stored row-major as `[iy, ix]`.

use std::f64::consts::{FRAC_2_PI, PI, TAU};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coherent scattering length density of silicon, nm⁻².
pub const SLD_SILICON: f64 = 2.07e-4;

/// Grids coarser than this alias the higher Bragg orders of a binary profile.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 8.0;

pub const DEFAULT_SAMPLES_PER_PERIOD: usize = 64;

/// Radius of the etched-away region around each fork defect when none is given.
pub const DEFAULT_HOLE_RADIUS: f64 = 500.0;

/// Cross-section of a groove.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    Rectangular,
    Triangular,
    /// Triangle scaled by `c ≥ 1` and clipped at one; `c = 1` is the triangle.
    Trapezoidal { c: f64 },
}

/// Full description of one forked-grating plaquette array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GratingRecord", into = "GratingRecord")]
pub struct GratingSpec {
    pub period: f64,
    pub charge: i32,
    pub depth: f64,
    pub duty: f64,
    pub profile: Profile,
    pub plaquette_w: f64,
    pub plaquette_h: f64,
    pub hole_radius: f64,
    pub tiles_x: usize,
    pub tiles_y: usize,
    pub sld: f64,
}

impl Default for GratingSpec {
    /// The 2 µm period, 10 × 10 µm² charge-one plaquette.
    fn default() -> Self {
        GratingSpec {
            period: 2000.0,
            charge: 1,
            depth: 5500.0,
            duty: 0.5,
            profile: Profile::Rectangular,
            plaquette_w: 10_000.0,
            plaquette_h: 10_000.0,
            hole_radius: DEFAULT_HOLE_RADIUS,
            tiles_x: 1,
            tiles_y: 1,
            sld: SLD_SILICON,
        }
    }
}

impl GratingSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGrating(msg));
        let finite = [
            self.period,
            self.depth,
            self.duty,
            self.plaquette_w,
            self.plaquette_h,
            self.hole_radius,
            self.sld,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all lengths and densities must be finite".into());
        }
        if self.period <= 0.0 {
            return bad(format!("period must be positive, got {}", self.period));
        }
        if self.depth < 0.0 {
            return bad(format!("depth must be non-negative, got {}", self.depth));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return bad(format!("duty must lie in (0, 1), got {}", self.duty));
        }
        if self.plaquette_w <= 0.0 || self.plaquette_h <= 0.0 {
            return bad("plaquette dimensions must be positive".into());
        }
        if self.hole_radius < 0.0 {
            return bad(format!("hole radius must be non-negative, got {}", self.hole_radius));
        }
        if self.hole_radius >= 0.5 * self.plaquette_w.min(self.plaquette_h) {
            return bad(format!(
                "hole radius {} does not fit inside a {} x {} plaquette",
                self.hole_radius, self.plaquette_w, self.plaquette_h
            ));
        }
        if self.tiles_x == 0 || self.tiles_y == 0 {
            return bad("tile counts must be positive".into());
        }
        if let Profile::Trapezoidal { c } = self.profile {
            if !(c.is_finite() && c >= 1.0) {
                return bad(format!("trapezoid parameter must be >= 1, got {c}"));
            }
        }
        Ok(())
    }

    /// Phase contrast `ρλd` in radians at wavelength `lambda`.
    pub fn phase_contrast(&self, lambda: f64) -> f64 {
        self.sld * lambda * self.depth
    }

    pub fn with_depth(&self, depth: f64) -> Self {
        GratingSpec { depth, ..self.clone() }
    }

    pub fn with_charge(&self, charge: i32) -> Self {
        GratingSpec { charge, ..self.clone() }
    }

    pub fn total_width(&self) -> f64 {
        self.tiles_x as f64 * self.plaquette_w
    }

    pub fn total_height(&self) -> f64 {
        self.tiles_y as f64 * self.plaquette_h
    }

    /// Grid dimensions giving at least `samples_per_period` cells per period
    /// along both axes, with a whole number of cells per plaquette.
    pub fn grid_for(&self, samples_per_period: usize) -> (usize, usize) {
        let spp = samples_per_period as f64;
        let per_tile = |extent: f64| ((extent * spp / self.period).ceil() as usize).max(2);
        (
            per_tile(self.plaquette_w) * self.tiles_x,
            per_tile(self.plaquette_h) * self.tiles_y,
        )
    }
}

/// On-disk form with the documented key names.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GratingRecord {
    period_nm: f64,
    charge: i32,
    depth_nm: f64,
    #[serde(default = "default_duty")]
    duty: f64,
    #[serde(default = "default_profile")]
    profile: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trapezoid_c: Option<f64>,
    #[serde(default = "default_plaquette")]
    plaquette_w_nm: f64,
    #[serde(default = "default_plaquette")]
    plaquette_h_nm: f64,
    #[serde(default = "default_hole")]
    hole_radius_nm: f64,
    #[serde(default = "default_tiles")]
    tiles_x: usize,
    #[serde(default = "default_tiles")]
    tiles_y: usize,
    #[serde(default = "default_sld")]
    sld_per_nm2: f64,
}

fn default_duty() -> f64 {
    0.5
}
fn default_profile() -> String {
    "rectangular".into()
}
fn default_plaquette() -> f64 {
    10_000.0
}
fn default_hole() -> f64 {
    DEFAULT_HOLE_RADIUS
}
fn default_tiles() -> usize {
    1
}
fn default_sld() -> f64 {
    SLD_SILICON
}

impl TryFrom<GratingRecord> for GratingSpec {
    type Error = Error;

    fn try_from(r: GratingRecord) -> Result<Self> {
        let profile = match r.profile.to_ascii_lowercase().as_str() {
            "rectangular" => Profile::Rectangular,
            "triangular" => Profile::Triangular,
            "trapezoidal" => Profile::Trapezoidal {
                c: r.trapezoid_c.ok_or_else(|| {
                    Error::InvalidGrating("trapezoidal profile requires trapezoid_c".into())
                })?,
            },
            other => {
                return Err(Error::InvalidGrating(format!("unknown profile '{other}'")));
            }
        };
        let spec = GratingSpec {
            period: r.period_nm,
            charge: r.charge,
            depth: r.depth_nm,
            duty: r.duty,
            profile,
            plaquette_w: r.plaquette_w_nm,
            plaquette_h: r.plaquette_h_nm,
            hole_radius: r.hole_radius_nm,
            tiles_x: r.tiles_x,
            tiles_y: r.tiles_y,
            sld: r.sld_per_nm2,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<GratingSpec> for GratingRecord {
    fn from(s: GratingSpec) -> Self {
        let (profile, trapezoid_c) = match s.profile {
            Profile::Rectangular => ("rectangular", None),
            Profile::Triangular => ("triangular", None),
            Profile::Trapezoidal { c } => ("trapezoidal", Some(c)),
        };
        GratingRecord {
            period_nm: s.period,
            charge: s.charge,
            depth_nm: s.depth,
            duty: s.duty,
            profile: profile.into(),
            trapezoid_c,
            plaquette_w_nm: s.plaquette_w,
            plaquette_h_nm: s.plaquette_h,
            hole_radius_nm: s.hole_radius,
            tiles_x: s.tiles_x,
            tiles_y: s.tiles_y,
            sld_per_nm2: s.sld,
        }
    }
}

/// Fork argument `α = (2π/p)x − mφ` with `φ ∈ (−π, π]` and `φ(0, 0) = 0`.
pub fn azimuthal_arg(x: f64, y: f64, period: f64, charge: i32) -> f64 {
    let phi = if x == 0.0 && y == 0.0 {
        0.0
    } else {
        let a = y.atan2(x);
        if a == -PI {
            PI
        } else {
            a
        }
    };
    TAU * x / period - charge as f64 * phi
}

/// Groove indicator χ ∈ [0, 1] at plaquette-local coordinates.
pub fn indicator(spec: &GratingSpec, x: f64, y: f64) -> f64 {
    if x * x + y * y < spec.hole_radius * spec.hole_radius {
        return 1.0;
    }
    let alpha = azimuthal_arg(x, y, spec.period, spec.charge);
    match spec.profile {
        Profile::Rectangular => {
            if alpha.cos() > (PI * spec.duty).cos() {
                1.0
            } else {
                0.0
            }
        }
        Profile::Triangular => triangle(alpha),
        Profile::Trapezoidal { c } => (c * triangle(alpha)).min(1.0),
    }
}

fn triangle(alpha: f64) -> f64 {
    // clamp guards acos against cos values a rounding step outside [-1, 1]
    (1.0 - FRAC_2_PI * alpha.cos().clamp(-1.0, 1.0).acos()).max(0.0)
}

/// Fourier weight of the n-th harmonic of the half-duty binary profile,
/// `sinc(nπ/2)`, with the even harmonics exactly zero.
pub fn fourier_weight(n: u32) -> f64 {
    crate::specfun::sinc_half_order(n)
}

/// Indicator sampled at cell centres over the whole tiled area.
///
/// One plaquette is evaluated and then copied, so every tile is bit-identical.
pub fn indicator_grid(spec: &GratingSpec, nx: usize, ny: usize) -> Result<Array2<f64>> {
    spec.validate()?;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!("grid {nx} x {ny} is too small")));
    }
    if !nx.is_multiple_of(spec.tiles_x) || !ny.is_multiple_of(spec.tiles_y) {
        return Err(Error::InvalidArgument(format!(
            "grid {nx} x {ny} is not a whole number of cells per tile ({} x {} tiles)",
            spec.tiles_x, spec.tiles_y
        )));
    }
    let dx = spec.total_width() / nx as f64;
    let dy = spec.total_height() / ny as f64;
    let samples = (spec.period / dx).min(spec.period / dy);
    if samples < MIN_SAMPLES_PER_PERIOD {
        return Err(Error::Undersampled { samples, minimum: MIN_SAMPLES_PER_PERIOD });
    }

    let (cx, cy) = (nx / spec.tiles_x, ny / spec.tiles_y);
    let tile = Array2::from_shape_fn((cy, cx), |(j, i)| {
        let x = (i as f64 + 0.5) * dx - 0.5 * spec.plaquette_w;
        let y = (j as f64 + 0.5) * dy - 0.5 * spec.plaquette_h;
        indicator(spec, x, y)
    });
    Ok(Array2::from_shape_fn((ny, nx), |(j, i)| tile[[j % cy, i % cx]]))
}

/// Accumulated phase `Φ = −ρλdχ` on a uniform grid. Immutable once built.
#[derive(Clone, Debug)]
pub struct PhaseMap {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    values: Array2<f64>,
    lambda: f64,
    spec: GratingSpec,
}

/// Samples the grating phase at wavelength `lambda` (nm) on an `nx × ny` grid.
pub fn phase_map(spec: &GratingSpec, lambda: f64, nx: usize, ny: usize) -> Result<PhaseMap> {
    let chi = indicator_grid(spec, nx, ny)?;
    PhaseMap::from_indicator(spec, lambda, &chi)
}

impl PhaseMap {
    /// Scales a precomputed indicator grid; lets wavelength sweeps reuse one geometry.
    pub fn from_indicator(spec: &GratingSpec, lambda: f64, chi: &Array2<f64>) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("wavelength must be positive, got {lambda}")));
        }
        let (ny, nx) = chi.dim();
        let scale = -spec.phase_contrast(lambda);
        Ok(PhaseMap {
            nx,
            ny,
            dx: spec.total_width() / nx as f64,
            dy: spec.total_height() / ny as f64,
            values: chi.mapv(|c| scale * c),
            lambda,
            spec: spec.clone(),
        })
    }

    /// Arbitrary phase values on the grid of `spec`, bypassing the indicator.
    pub fn from_values(spec: &GratingSpec, lambda: f64, values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("phase map values".into()));
        }
        let (ny, nx) = values.dim();
        Ok(PhaseMap {
            nx,
            ny,
            dx: spec.total_width() / nx as f64,
            dy: spec.total_height() / ny as f64,
            values,
            lambda,
            spec: spec.clone(),
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn spec(&self) -> &GratingSpec {
        &self.spec
    }
}
