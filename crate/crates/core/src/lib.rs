//! Acoustic scattering by planar screens and apertures.
//!
//! Galerkin matrices for the single-layer and hypersingular operators are
//! assembled from their Fourier symbols, with kernel-based oracles for
//! cross-checks and sweeps that measure wavenumber-explicit bounds.

pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod operators;
pub mod quad;
pub mod sobolev;
pub mod solver;
pub mod special;
pub mod spectral;
pub mod trace;

pub use error::{Error, Result};
pub use geometry::{build_mesh, cantor_prefractal, dist_to_screen, make_screen, BasisFunction, BasisKind, Mesh, Screen};
pub use num_complex::Complex64;

/// Library version recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
