//! Pseudo-spectral solver and verification harness for a rotational
//! approximate-deconvolution turbulence regularization on the periodic
//! 3-torus `[0, 2pi)^3`.
//!
//! The model evolves a filtered velocity `w` under
//!
//! ```text
//! w_t - bar( D w x curl(D w) ) - nu Lap(w) + grad q = bar(f),   div w = 0,
//! ```
//!
//! where `bar(.)` is the inverse of the fractional Helmholtz operator
//! `A = I + alpha^{2 theta} (-Lap)^theta` and `D` is the van Cittert
//! deconvolution operator of order `N` built from `A`. Both operators are
//! diagonal in Fourier space, so the whole pipeline is a pseudo-spectral
//! method: derivatives and symbol applications act on coefficients, the
//! cross product is evaluated pointwise on the collocation grid, and the
//! quadratic product is dealiased by 2/3 truncation.
//!
//! Module map:
//! - [`spectral`]: grid, transforms, wavenumber algebra, Sobolev norms.
//! - [`operators`]: Helmholtz filter, deconvolution, Leray projection.
//! - [`nonlinearity`]: rotational-form nonlinear term and its residuals.
//! - [`timestepper`]: IMEX (integrating factor + RK3) time advancement.
//! - [`diagnostics`]: energy functionals and budget reports.
//! - [`harness`]: scripted experiments (symbol audits, sweeps, verification).
//! - [`io`]: config files, CSV emission, binary snapshots.

pub mod diagnostics;
pub mod harness;
pub mod io;
pub mod nonlinearity;
pub mod operators;
pub mod spectral;
pub mod timestepper;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
