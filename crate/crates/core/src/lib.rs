//! Numerics for an age-structured model of reversing particles moving on a
//! periodic line.
//!
//! Right movers `u` and left movers `v` are split into a reversible part
//! (`u₁`, `v₁`) and a refractory part. Reversible particles turn at a rate
//! λ depending on the oncoming density; refractory particles become
//! reversible at a rate γ, also depending on the oncoming density. In the
//! limit of fast aging the model reduces to the two-equation memory-free
//! system.
//!
//! Modules:
//!
//! * [`model`]: rate functions λ, γ and the derived curves Λ, Γ, Ω
//! * [`ode`]: space-independent dynamics: steady states, stability, Hopf thresholds
//! * [`linstab`]: dispersion relation and Routh–Hurwitz tests under transport
//! * [`waves`]: explicit construction of counter-propagating traveling waves
//! * [`sim`]: finite-difference simulator
//! * [`analysis`]: speed measurement, profile comparison, figure data

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod linstab;
pub mod model;
pub mod ode;
pub mod output;
pub mod poly;
pub mod quadrature;
pub mod sim;
pub mod waves;

pub use error::{Error, Result};
pub use model::{DerivedCurves, ModelParams, RateFunction, RateSpec};

/// Width of the band around zero treated as neither sign.
pub const MARGINAL_BAND: f64 = 1e-8;
