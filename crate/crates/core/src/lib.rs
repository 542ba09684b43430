//! Scattering of two-level atoms off shaped laser fields.
//!
//! The ground-state atom sees an energy-dependent, non-local and in general
//! non-Hermitian potential. This crate computes its scattering amplitudes
//! (exactly, via invariant imbedding of the two-level problem, and
//! independently via the Lippmann–Schwinger equation of the non-local
//! potential), classifies its symmetries, and optimizes Gaussian laser
//! profiles to build one-way devices.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

// `!(x > 0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod imbedding;
pub mod kernel;
pub mod linalg;
pub mod nonlocal;
pub mod ode;
pub mod optimizer;
pub mod output;
pub mod profile;
#[cfg(test)]
mod properties;
pub mod scalar;
pub mod semiclassical;
pub mod symmetry;
pub mod units;

pub use error::{Error, ErrorClass, Result};
pub use nonlocal::Side;
pub use profile::{Ansatz, Coupling, GaussianTerm, ProfileFile};
pub use scalar::Real;
pub use symmetry::{Device, Symmetry};

pub type Complex = num_complex::Complex<f64>;
pub type RabiProfile = profile::RabiProfile<f64>;
pub type SymmetryReport = symmetry::SymmetryReport<f64>;
pub type ChannelMatrices = imbedding::ChannelMatrices<f64>;
pub type Coefficients = imbedding::Coefficients<f64>;
pub type NonlocalKernel = kernel::NonlocalKernel<f64>;
pub type EffectiveParams = kernel::EffectiveParams<f64>;
pub type ScatterJob<'a> = units::ScatterJob<'a, f64>;
pub type Tolerances = ode::Tolerances<f64>;
pub type GroundSolution = nonlocal::GroundSolution<f64>;
