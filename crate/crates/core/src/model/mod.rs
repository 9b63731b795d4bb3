//! Rate functions, model parameters and the derived curves Λ, Γ, Ω.

mod curves;
mod params;
mod rate;

pub use curves::DerivedCurves;
pub use params::{DimensionalScales, ModelConfig, ModelParams};
pub use rate::{Ramp, RateFunction, RateSpec};
