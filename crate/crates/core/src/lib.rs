//! Numerical laboratory for finite-time blowup of `u_t = Δu + u^b`.
//!
//! The crate works on the periodic torus with frequency spacing `2^{-r}`:
//!
//! - [`spectral`]: transforms, coefficient convolution, heat multiplier, norms.
//! - [`littlewood_paley`]: dyadic partition of unity and homogeneous Besov norms.
//! - [`data`]: the bump `w`, the schedules `η_k`, `ε_N` and the oscillatory data `u_{0,N}`.
//! - [`certificate`]: log-space blowup certificates and the threshold search.
//! - [`solver`]: integrating-factor time stepping, Picard iterates and lower-bound checks.

pub mod certificate;
pub mod data;
pub mod error;
mod fft;
pub mod grid;
pub mod littlewood_paley;
pub mod reduce;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::TorusGrid;
pub use spectral::{RealField, SpectralField, Transform};

/// Critical Lebesgue exponent `n(b−1)/2` of the scaling `λ^{2/(b−1)} u(λ²t, λx)`.
pub fn critical_exponent(n: usize, b: u32) -> f64 {
    n as f64 * (b as f64 - 1.0) / 2.0
}

/// Integrability index `nb(b−1)/2` of the critical Besov space `Ḃ^{−2/b}_{p,q}`.
pub fn besov_integrability(n: usize, b: u32) -> f64 {
    n as f64 * b as f64 * (b as f64 - 1.0) / 2.0
}

/// Rejects the Fujita regime `n(b−1)/2 <= 1`.
pub fn check_supercritical(n: usize, b: u32) -> Result<()> {
    if critical_exponent(n, b) <= 1.0 {
        return Err(Error::Precondition(format!(
            "n(b-1)/2 > 1 is required (Fujita regime excluded): n = {n}, b = {b} gives {}",
            critical_exponent(n, b)
        )));
    }
    spectral::check_exponent(b)
}
