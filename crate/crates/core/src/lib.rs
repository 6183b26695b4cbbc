//! Hyperbolic (anisotropic tensor-product) wavelet analysis of 2D fields.
//!
//! The crate computes hyperbolic wavelet coefficients on the periodic unit
//! square, hyperbolic wavelet leaders, sequence-space Besov/Hölder/Sobolev
//! functionals, pointwise anisotropic Hölder exponents, and the Legendre
//! hyperbolic multifractal spectrum over a grid of anisotropies. Synthesizers
//! produce fields with prescribed anisotropic regularity so every estimator can
//! be checked in closed loop, and [`oracles`] holds slow reference
//! implementations used for cross-checking.
//!
//! Coordinates: a [`Grid2D`] is stored row-major; the row index is the first
//! coordinate `x1` (scale `j1`), the column index is `x2` (scale `j2`).

pub mod anisotropy;
pub mod besov;
pub mod error;
pub mod filter;
pub mod io;
pub mod leaders;
pub mod multifractal;
pub mod oracles;
pub mod pointwise;
pub mod regression;
pub mod scales;
pub mod synthesis;
pub mod transform;

pub use anisotropy::Anisotropy;
pub use error::{Error, Result};
pub use filter::Filter;
pub use leaders::LeaderPyramid;
pub use scales::{GammaSet, HyperbolicCube, JRange, ScalePair};
pub use transform::{Grid2D, HyperbolicCoeffs, Normalization};
