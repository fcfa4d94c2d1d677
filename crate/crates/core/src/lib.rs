//! Spectral laboratory for the Hartree/Choquard equation
//! `-Δu + a u = (W * |u|^2) u` in three dimensions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod decay;
pub mod dynamics;
pub mod energy;
pub mod error;
mod fft;
pub mod grid;
pub mod ground_state;
pub mod io;
pub mod kernel;
pub mod potential;
pub mod semiclassical;
pub mod soliton;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{gradient, inner, laplacian, lp_norm, make_grid, norms, shift_field, ComplexField, Grid3, Norms, RealField};
pub use kernel::{build_kernel, coulomb, free_space_convolve, Kernel, KernelKind, KernelSpec, TabulatedKernel};
