//! Discontinuous least-squares finite elements for two-dimensional linear
//! elasticity.
//!
//! The discrete space carries one unknown per element and field component.
//! Each element's local polynomial is recovered by a constrained
//! least-squares fit over a patch of neighbouring element barycenters, and
//! the stress–displacement first-order system is solved by minimizing a
//! discontinuous least-squares functional.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: polygonal meshes, generators, JSON I/O and quality metrics;
//! - [`patch`]: element patches grown through face adjacency;
//! - [`reconstruct`]: the constrained least-squares reconstruction;
//! - [`elasticity`]: constitutive law and manufactured solutions;
//! - [`quadrature`], [`fields`], [`assembly`]: integration and system assembly;
//! - [`sparse`], [`solver`]: CSR storage and preconditioned CG;
//! - [`analysis`]: error norms and convergence studies.

pub mod analysis;
pub mod assembly;
pub mod elasticity;
pub mod error;
pub mod fields;
pub mod mesh;
pub mod patch;
pub mod poly;
pub mod quadrature;
pub mod reconstruct;
pub mod solver;
pub mod sparse;

pub use error::{Error, ErrorKind, Result};

/// A point in the plane.
pub type Point = [f64; 2];
