//! Spectral laboratory for planar Beltrami equations.
//!
//! Fields live on a uniform periodic grid ([`grid`]). Cauchy and Beurling
//! transforms are Fourier multipliers ([`transforms`]) and drive a fixed-point
//! solver for `f_z̄ = μ f_z + ν·conj(f_z)` ([`solver`]). Pairs of solutions are
//! analysed in [`family`], and the elliptic equations satisfied by their
//! components are checked in weak form in [`adjoint`].

// range checks are written `!(x < max)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
pub mod bump;
pub mod error;
pub mod family;
pub mod fft;
pub mod generators;
pub mod grid;
pub mod mapping;
pub mod par;
pub mod solver;
pub mod transforms;

pub use error::{LabError, Result};
pub use grid::{coordinate_field, ComplexField, GridSpec};
pub use mapping::{ComponentGradients, Mapping};
pub use num_complex::Complex64;
pub use solver::{BeltramiCoefficients, QcSolution, ReducedCoefficient, SolverOptions};
pub use transforms::TransformPlan;
