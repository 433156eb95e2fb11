//! Hybrid High-Order elasticity coupled with SWIP discontinuous Galerkin Darcy
//! flow for quasi-static Biot poroelasticity on polygonal meshes.

// `!(x > 0.0)` rejects NaN on purpose; component loops index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod basis;
pub mod coupling;
pub mod dofmap;
pub mod element;
pub mod error;
pub mod fluxes;
pub mod harness;
pub mod hho;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod sparse;
pub mod swip;
pub mod system;
pub mod timestepping;

pub use error::{Error, Result};
