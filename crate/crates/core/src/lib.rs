//! Trimmed isogeometric discretizations of the wave equation: cut-cell
//! quadrature, consistent and lumped mass matrices, polynomial-extension
//! stabilization, generalized eigenanalysis, and explicit/implicit time
//! integration with exact semi-discrete reference solutions.

pub mod assembly;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod gauss;
pub mod geometry;
pub mod metrics;
pub mod problems;
pub mod space;
pub mod sparse;
pub mod spline;

pub use error::{Error, Result};
pub use spline::{BasisEval, KnotVector, LocalPolynomial, Point, SplineSpace};
