//! Spectral toolkit for half-line Schrödinger operators A = -d²/dx² + V with
//! V(x) ~ -1/(4x²) at infinity: distorted Fourier transform, wave propagation,
//! the scaling vector field, and numerical verification of decay estimates.

pub mod data;
pub mod error;
pub mod evolution;
pub mod integrator;
pub mod io;
pub mod numerics;
pub mod odesolve;
pub mod potential;
pub mod specfun;
pub mod spectral;
pub mod transform;
pub mod vectorfield;
pub mod verify;

pub use error::{Error, Result};
