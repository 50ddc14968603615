//! Stationary-light polaritons in a rotating EIT medium.
//!
//! The crate evaluates the closed-form synthetic-gauge-field relations of a
//! uniformly rotating double-Λ medium ([`params`]), discretizes the transverse
//! plane on a periodic spectral grid ([`grid`]), and integrates both the
//! effective single-field magnetic Schrödinger equation ([`effective`]) and
//! the three-field bright/dark polariton system it is eliminated from
//! ([`full`]). [`spectra`] computes Landau levels of the Hermitian part and
//! [`observables`] extracts cyclotron orbits, image rotation angles and decay
//! rates from trajectories.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dense;
pub mod effective;
pub mod error;
pub mod fft;
pub mod full;
pub mod grid;
pub mod observables;
pub mod params;
pub mod spectra;
pub mod states;
pub mod trajectory;

pub use error::{Error, Result};
pub use grid::{Axis, ComplexField2D, Observable, TransverseGrid};
pub use params::{DerivedQuantities, FeasibilityReport, MediumParams, RotationGeometry};
pub use trajectory::{Sample, Trajectory};
