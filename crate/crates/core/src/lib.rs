//! Travelling-wave analysis for a tumour-invasion model with degenerate
//! cross-diffusion.

pub mod conjecture;
pub mod model;
pub mod ode;
pub mod pde;
pub mod profile;
pub mod shooting;
