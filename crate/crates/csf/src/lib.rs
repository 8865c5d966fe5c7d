//! One-dimensional model of pulsatile cerebrospinal-fluid flow in a
//! compliant compartment: a coupled system for the axial velocity, the
//! tissue displacement and the pressure, driven by a periodic choroid
//! forcing.
//!
//! The crate provides
//! - exact characteristic solutions and finite-time gradient blow-up
//!   analysis of the damped advection limit ([`characteristics`]),
//! - compatibility checks and construction of admissible initial data
//!   ([`conditions`]),
//! - a fixed-point iteration solver with contraction diagnostics
//!   ([`picard`]),
//! - an explicit upwind time-marching solver with blow-up monitoring
//!   ([`fd`]),
//! - the explicit space-independent periodic regime and a perturbation
//!   stability experiment ([`periodic`]),
//! - configuration parsing and small numeric utilities for the `csf`
//!   command-line binary ([`config`], [`expr`]).

pub mod characteristics;
pub mod conditions;
pub mod config;
pub mod expr;
pub mod fd;
pub mod grid;
pub mod model;
pub mod parallel;
pub mod periodic;
pub mod picard;

pub use grid::Grid;
pub use model::{DerivedCoefficients, Model, PhysicalParams};
