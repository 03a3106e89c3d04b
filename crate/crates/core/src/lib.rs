//! Subgraph densities, Shannon entropy and constrained entropy maximization
//! for multipodal step graphons, with the k-star phase-space geometry and
//! phase-transition diagnostics built on top.

pub mod analysis;
pub mod canonical;
pub mod forced;
pub mod graphon;
pub mod optimize;
pub mod phase;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod taco;

pub use graphon::{DensityFunctional, DensityVector, GraphonError, StepGraphon};
pub use scalar::{Real, Scalar};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Double-precision step graphon.
pub type Graphon = StepGraphon<f64>;
/// Step graphon with exact rational entries.
pub type ExactGraphon = StepGraphon<num_rational::Rational64>;
pub type Densities = DensityVector<f64>;
