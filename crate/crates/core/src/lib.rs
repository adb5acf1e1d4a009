//! Simulation of neutron diffraction and spin-echo SANS polarization for
//! forked (vortex-generating) phase gratings.
//!
//! Lengths are in nanometres and reciprocal lengths in nm⁻¹ throughout.

pub mod diffraction;
pub mod error;
pub mod fft2;
pub mod grating;
pub mod instrument;
pub mod io;
pub mod sesans;
pub mod specfun;

pub use error::{Error, Result};
pub use grating::{GratingSpec, PhaseMap, Profile};
