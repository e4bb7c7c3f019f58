//! Conversion between ν = ω/2π in MHz and angular rates in rad/ns.

use core::f64::consts::TAU;

/// rad/ns per MHz.
pub const RAD_PER_NS_PER_MHZ: f64 = TAU * 1e-3;

/// Angular rate (rad/ns) for a frequency given as ν in MHz.
#[inline]
pub fn mhz(nu_mhz: f64) -> f64 {
    nu_mhz * RAD_PER_NS_PER_MHZ
}

/// Inverse of [`mhz`].
#[inline]
pub fn to_mhz(omega: f64) -> f64 {
    omega / RAD_PER_NS_PER_MHZ
}
