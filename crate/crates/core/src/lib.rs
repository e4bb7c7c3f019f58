#![no_std]

//! Drive and detuning schedules that displace a driven resonator exactly in
//! finite time, plus the truncated Fock-space machinery used to verify them.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; IO, configuration and parallel sweeps live in the
//! `ffscale` companion crate.
//!
//! Units: times in ns, frequencies as angular rates in rad/ns. Use
//! [`units::mhz`] to convert from the ν = ω/2π (MHz) convention.

extern crate alloc;

pub mod error;
pub mod fockspace;
pub mod integrator;
pub mod kpo;
pub mod operator;
pub mod propagator;
pub mod pulses;
pub mod quadrature;
pub mod timescaling;
pub mod units;

pub use error::{Error, Result};
pub use fockspace::FockVector;
pub use num_complex::Complex64;
