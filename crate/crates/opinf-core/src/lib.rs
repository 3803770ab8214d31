//! Non-intrusive reduction of quadratic dynamical systems.
//!
//! The crate learns reduced models of the form
//! `x' = A x + B u + F x^2 (+ c)` from simulated trajectory data by
//! least-squares regression on projected states and finite-difference
//! derivatives, offers a stability-biased regularizer on the quadratic
//! operator plus a symmetric-negative-definite constrained variant, and
//! evaluates the learned families (stability radii, parametric
//! interpolation, prediction errors) against intrusive Galerkin reference
//! models.
//!
//! Module map:
//! - [`quadform`]: compressed quadratic products and the F <-> H operator
//!   conversions.
//! - [`dynamics`]: quadratic models and explicit-Euler time integration.
//! - [`fom`]: the three benchmark full-order model families and seeded
//!   signal generators.
//! - [`pod`]: snapshot handling, POD bases, Galerkin reduction.
//! - [`opinf`]: the four inference solvers (plain, Tikhonov, quadratic-norm
//!   regularized, constrained).
//! - [`stability`]: Lyapunov solves, stability radii, eigenvalue
//!   reflection.
//! - [`interp`]: parametric interpolation of learned model families.
//! - [`select`]: regularization-weight selection by leave-one-out
//!   interpolation validation.
//! - [`metrics`]: the scalar error measures.

pub mod dynamics;
pub mod error;
pub mod fom;
pub mod interp;
pub mod metrics;
pub mod opinf;
pub mod pod;
pub mod quadform;
pub mod select;
pub mod stability;

pub use error::{Error, Result};

/// Dense column-major matrix of `f64`, the universal numeric carrier.
pub type DenseMatrix = nalgebra::DMatrix<f64>;
/// Dense vector of `f64`.
pub type DenseVector = nalgebra::DVector<f64>;
