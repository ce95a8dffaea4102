//! Reverse-mode differentiation, dense tensors, multilayer perceptrons and
//! the Adam optimizer.

mod adam;
mod gradcheck;
mod mlp;
mod params;
mod tape;
mod tensor;

pub use adam::Adam;
pub use gradcheck::{central_difference, grad_check, GradCheckReport, Objective};
pub use mlp::{glorot_bound, mlp_forward, Activation, Mlp};
pub use params::{ParamEntry, ParamSlot, ParamStore};
pub(crate) use crate::io::json_real as real_value;
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

use crate::scalar::Real;

/// `b^e` for a constant positive base and a variable exponent.
pub fn pow_const_base<T: Real>(base: f64, exponent: T) -> T {
    T::cst(base).powf(exponent)
}

/// `b^e` for a variable positive base and a constant exponent.
pub fn pow_var_base<T: Real>(base: T, exponent: f64) -> T {
    base.powf(T::cst(exponent))
}

/// `Γ(x)` as a differentiable primitive.
pub fn gamma_of<T: Real>(x: T) -> T {
    x.gamma()
}
