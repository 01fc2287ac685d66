//! MILP toolkit for the integrated power-gas dispatch problem with pipeline
//! linepack.
//!
//! The crate builds, solves and analyzes mixed-integer linear models of a
//! coupled electricity and high-pressure gas transmission system. The
//! nonconvex gas-flow relation `f|f| = R (p_m^2 - p_n^2)` is replaced by one
//! of three piecewise linearizations:
//!
//! * `inc` -- incremental (delta) formulation over flow and nodal pressures,
//! * `sos2` -- SOS2 interpolation over flow and nodal pressures,
//! * `z` -- a tight formulation over forward/reverse flow and pressure
//!   gradient with precomputed cut tables.
//!
//! Models are held in a solver-agnostic intermediate representation
//! ([`mip::MipModel`]) with exact rational coefficients, can be exported to
//! fixed-form MPS, solved with the built-in simplex/branch-and-bound solver
//! or an external solver, and their LP relaxations can be converted to exact
//! vertex sets ([`polytope`]) to measure formulation tightness.

pub mod builder;
pub mod grid;
pub mod instance;
pub mod linsep;
pub mod linz;
pub mod mip;
pub mod polytope;
pub mod rat;
pub mod solver;
pub mod ztables;

pub use mip::{MipModel, ModelStats, Sense, VarId, VarKind};
pub use rat::Rat;
