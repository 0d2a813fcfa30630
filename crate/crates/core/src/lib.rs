//! Numerical verification of rigidity for operator-valued functions on the
//! unit disc whose real part is a positive contraction and for which
//! `F(z) + zF(z)*` is holomorphic, together with the resulting
//! classification of factorizations of the shift semigroup.
//!
//! Everything is finite: operators are `d × d` complex matrices, "for all
//! `z` in the disc" is a [`disc::DiscGrid`], and Hardy-space operators are
//! truncated to the first `N` monomials.

// `!(x < 1.0)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod disc;
pub mod error;
pub mod factorization;
pub mod herglotz;
mod expm;
pub mod operator;
pub mod random;
pub mod shift;
pub mod rigidity;

pub use disc::{ComplexValue, DiscGrid, ScalarFunction};
pub use error::{Error, Result};
pub use operator::{HermitianPair, OperatorMatrix};
