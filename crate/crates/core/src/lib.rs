//! Rational QZ: dense generalized eigenvalue solver working on Hessenberg
//! pairs whose subdiagonal ratios (poles) can be chosen freely.

pub mod error;
pub mod generate;
pub mod io;
pub mod kernels;
pub mod oracles;
pub mod pencil;
pub mod pole_ops;
pub mod reduce;
pub mod rk_filter;
pub mod rqz;

pub use error::{Error, Result};
pub use kernels::{ComplexMatrix, GivensRotation, C64};
pub use pencil::{HessenbergPair, ProjectivePoint};
