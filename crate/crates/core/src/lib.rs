//! Certified final-state observability constants for C₀-semigroups.
//!
//! - [`cert_engine`]: explicit constants from uncertainty and dissipation
//!   parameters, including the elliptic `L_p(ℝ^d)` pipeline.
//! - [`spectral`]: periodic Fourier-multiplier simulator (semigroups,
//!   smooth spectral cutoffs, kernels, norms).
//! - [`thickness`]: `(ρ, L)`-thickness of observation masks.
//! - [`verify`]: empirical checks of the hypotheses and the estimate.
//! - [`control`]: Duhamel solver and minimal-norm (HUM) null control.
//! - [`cli`]: experiment runner behind the `obscert` binary.
//!
//! All numerical code is generic over [`Real`] (`f32`/`f64`); the `*64`
//! aliases below fix the scalar to `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cert_engine;
pub mod cli;
pub mod control;
mod error;
pub mod scalar;
pub mod spectral;
pub mod thickness;
pub mod verify;

pub use error::{ObsError, Result};
pub use scalar::Real;

pub type AbstractParams64 = cert_engine::AbstractParams<f64>;
pub type CertBundle64 = cert_engine::CertBundle<f64>;
pub type DerivedConstants64 = cert_engine::DerivedConstants<f64>;
pub type EllipticInputs64 = cert_engine::EllipticInputs<f64>;
pub type LpIndex64 = cert_engine::LpIndex<f64>;
pub type GridSpec64 = spectral::GridSpec<f64>;
pub type Field64 = spectral::Field<f64>;
pub type EllipticSymbol64 = spectral::EllipticSymbol<f64>;
pub type Simulator64 = spectral::Simulator<f64>;
pub type Mask64 = thickness::Mask<f64>;
pub type ThicknessReport64 = thickness::ThicknessReport<f64>;
pub type FitResult64 = verify::FitResult<f64>;
pub type ObsRatioReport64 = verify::ObsRatioReport<f64>;
pub type ControlResult64 = control::ControlResult<f64>;
