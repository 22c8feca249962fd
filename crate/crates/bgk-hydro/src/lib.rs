//! Exact linear hydrodynamics of the three-dimensional Boltzmann-BGK kinetic model.
//!
//! The linearized BGK operator at wave vector `k` has, below a critical wave
//! number, exactly five isolated eigenvalues above its essential spectrum: a
//! real diffusion mode, a real shear mode of multiplicity two, and a complex
//! conjugate acoustic pair. This crate locates those modes as zeros of a
//! transcendental spectral function built from the plasma dispersion function,
//! changes coordinates from spectral to macroscopic variables (density,
//! velocity, temperature) through the spectral temperature, and assembles the
//! resulting closed 5x5 generator of the macroscopic dynamics per wave vector,
//! together with its Euler, Navier-Stokes and Burnett truncations.
//!
//! Everything is cross-validated against a brute-force discrete-velocity
//! oracle (`oracle`): Gauss-Hermite quadrature of the defining integrals,
//! eigenvector residuals, Riesz projections of the resolvent, and direct
//! kinetic propagation. `hydrosim` evolves macroscopic fields on the 3-torus
//! with per-mode exact propagators, and `validate` bundles the full
//! verification suite.

pub mod closure;
pub mod complexfun;
pub mod hydrosim;
pub mod linalg;
pub mod modes;
pub mod oracle;
pub mod spectral;
pub mod validate;

pub use closure::{ClosureCoefficients, HydroGenerator, Model};
pub use complexfun::{faddeeva_w, plasma_z, plasma_z_asymptotic, plasma_z_derivative, Branch};
pub use modes::{BranchLabel, ModeSet};
pub use spectral::{SpectralParams, WaveVector};
