//! Spectral kernels for decay-rate experiments on the compressible
//! Navier-Stokes perturbation system `(ϱ, m)` around the state `(1, 0)`.
//!
//! Everything here needs only `alloc`. File formats, the command line and the
//! fast transform backend live in the `cns-decay` crate.

#![no_std]
// NaN-rejecting `!(x > 0.0)` guards and index loops over coupled arrays are deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod continuum;
pub mod duhamel;
pub mod energy;
pub mod error;
pub mod fft;
pub mod fit;
pub mod grid;
pub mod initial;
pub mod params;
pub mod quadrature;
pub mod semigroup;
pub mod solver;
pub mod spectral;
pub mod state;
pub mod symbol;

pub use error::{Error, Result};
pub use grid::{Mode, RealField, SpectralField, SpectralGrid};
pub use params::FluidParams;
pub use state::{density_floor_check, Component, NormSpace, PerturbationState};
