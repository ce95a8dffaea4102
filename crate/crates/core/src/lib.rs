//! Solving and learning variable-order fractional differential equations
//! `D^{α(t,x)} x(t) = f(t, x(t))`.
//!
//! The numerical core is generic over [`Real`], implemented for `f32`,
//! `f64` and the reverse-mode [`Var`]: the same solver code produces values
//! or, run on a [`Tape`], gradients through the unrolled recursion.

// Reference constants keep every printed digit; `!(x > y)` guards reject NaN.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod checks;
pub mod error;
pub mod frac_core;
pub mod graph;
pub mod inverse;
pub mod io;
pub mod order;
pub mod scalar;
pub mod solvers;

pub use autodiff::{Adam, ParamStore, Tape, Tensor, Var};
pub use error::{Error, Result};
pub use order::{OrderFn, OrderModel};
pub use scalar::Real;
pub use solvers::{Scheme, SolverConfig, Trajectory};

pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type TrajectoryVar = Trajectory<Var>;
pub type Tensor64 = Tensor<f64>;
pub type TensorVar = Tensor<Var>;
pub type WeightRow64 = frac_core::WeightRow<f64>;
