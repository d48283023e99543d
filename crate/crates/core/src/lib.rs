//! Spectral toolkit for shear-flow transport operators
//! `H₁ = -iψ(x′)∂₁` on `L²(ℝᵈ)` and `H_w = -i(ψ/w)∂₁` on `L²_w(ℝᵈ)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`field_model`]: shear profiles, weights, confinement regions, boundary phases.
//! * [`fiber_ops`]: one fiber operator, its ladder, witnesses, evolution and a matrix oracle.
//! * [`spectrum_assembly`]: the spectrum as a union over fibers, plus the Cantor example.
//! * [`grid`]: tensor grids over `x₁ × x′` and sampled fields.
//! * [`density_of_states`]: spectral measures, densities and their norm bounds.
//! * [`evolution`]: the unitary group and the dilation relating `H₁` to `-i∂₁`.
//! * [`ergodic_average`]: time averages, the kernel projection and rate envelopes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density_of_states;
pub mod error;
pub mod ergodic_average;
pub mod evolution;
pub mod extended;
pub mod fiber_ops;
pub mod grid;
pub mod field_model;
pub mod numerics;
pub mod spectrum_assembly;

pub use error::{Error, Result};
pub use extended::ExtendedReal;
