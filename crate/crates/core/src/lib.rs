//! Finite-`n` eigenvalue statistics of the elliptic random normal matrix
//! ensemble: droplet geometry, orthonormal polynomials, exact density and
//! kernel, boundary asymptotics, and a Metropolis sampler of the Coulomb gas.

pub mod edge;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kernel;
pub mod orthopoly;
pub mod params;
pub mod quadrature;
pub mod sampler;
pub mod scaled;
pub mod special;
pub mod validation;

pub use error::{Error, Result};
pub use geometry::{BoundaryFrame, Geometry, PlanarCoords};
pub use params::EnsembleParams;
pub use scaled::ScaledComplex;
