//! Numerical laboratory for abelian gauged Landau-Ginzburg models.
//!
//! The crate covers pointwise model calculus ([`lg_core`]), critical-point and
//! spectral analysis ([`stability`]), discrete fields on rectangular grids
//! ([`grid_field`]), solvers and verification experiments for the gauged Witten
//! equations ([`witten_flow`]), radial vortices ([`vortex`]) and the scalar
//! reductions on surfaces ([`surface_reduction`]).
//!
//! Everything numerical is generic over [`scalar::Real`] (`f32` or `f64`);
//! `f64` aliases are exported below.

pub mod error;
pub mod grid_field;
pub mod lg_core;
pub mod linalg;
pub mod report;
pub mod scalar;
pub mod stability;
pub mod suite;
pub mod surface_reduction;
pub mod vortex;
pub mod witten_flow;

pub use error::{Error, Result};
pub use scalar::Real;

pub type LgModel64 = lg_core::LgModel<f64>;
pub type LgModel32 = lg_core::LgModel<f32>;
pub type FieldConfig64 = grid_field::FieldConfig<f64>;
pub type Grid2D64 = grid_field::Grid2D<f64>;
pub type VortexProfile64 = vortex::VortexProfile<f64>;
pub type SpectralReport64 = stability::SpectralReport<f64>;
pub type Path1D64 = witten_flow::action::Path1D<f64>;

/// Version string embedded in every report.
pub const TOOL_VERSION: &str = concat!("glg ", env!("CARGO_PKG_VERSION"));
