//! Discretization of the fractional p-Laplacian with nonlocal Neumann
//! conditions on 1-D domains, together with variational solvers for its
//! critical points.
//!
//! The discrete space is piecewise constant on a mesh of Ω plus a truncated
//! exterior collar. Kernel weights are exact cell-pair integrals of
//! `|x − y|^(−(1+ps))` over the region that excludes exterior–exterior pairs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod critical;
pub mod error;
pub mod energy;
pub mod kernel;
pub mod mesh;
pub mod neumann;
pub mod nonlinearity;
pub mod propcheck;
pub mod spectrum;

pub mod cli;

pub use error::{Error, Result};
