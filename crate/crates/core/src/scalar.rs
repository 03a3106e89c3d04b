//! Scalar abstractions shared by the density engine.
//!
//! Subgraph densities are polynomials in the block fractions and block
//! values, so they are evaluated over any [`Scalar`] (including exact
//! rationals). Entropy, square roots and the optimizer need a [`Real`].

use std::fmt;

use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Field-like scalar: enough arithmetic to evaluate density polynomials.
pub trait Scalar:
    Num
    + NumAssign
    + Copy
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Converts a small integer literal.
    fn int(v: i64) -> Self {
        Self::from_i64(v).expect("integer literal representable")
    }

    /// Converts an `f64` literal (exact for dyadic values in rational types).
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    /// Lossy conversion used for tolerances and reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn abs_val(self) -> Self {
        if self < Self::zero() {
            Self::zero() - self
        } else {
            self
        }
    }
}

impl<T> Scalar for T where
    T: Num
        + NumAssign
        + Copy
        + PartialOrd
        + FromPrimitive
        + ToPrimitive
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Floating-point scalar (`f32`, `f64`).
pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}

/// Integer power by repeated squaring.
pub fn powi<T: Scalar>(x: T, k: u32) -> T {
    num_traits::pow(x, k as usize)
}
