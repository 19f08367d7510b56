//! Numerical kernels for Darcy-type magnetic relaxation.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. It contains
//!
//! * discrete fields on the periodic channel `T x (-1, 1)`, the torus and the
//!   unit disk, with Fourier derivatives in the periodic direction and
//!   second-order finite differences across the channel ([`field`], [`ops`]);
//! * the Neumann pressure solve, the Leray projection and stream functions
//!   ([`elliptic`]);
//! * the nonlinear relaxation solver near a shear background, the linearized
//!   operator around it and the diagnostics that track its decay ([`mre`]);
//! * the scalar equation `dg/dt = (B . grad)^2 g` for shear, rotation and
//!   cellular fields ([`scalar`]);
//! * flow maps, periodic orbit detection and orbit averages ([`orbit`]).
//!
//! File formats, configuration and the command line live in the `mrelab`
//! companion crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod banded;
pub mod diag;
pub mod elliptic;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod mre;
pub mod ops;
pub mod orbit;
pub mod profile;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use field::{ChannelField, ScalarField};
pub use grid::{Domain, Grid};
pub use profile::{Profile, ShearProfile};

