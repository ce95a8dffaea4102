//! Special functions and the coefficient kernels shared by every solver
//! scheme.

mod kernels;
pub mod special;

pub use kernels::{
    abm_weights, caputo_power_term, corrector_weights, l1_weights, validate_order, WeightRow,
};
pub use special::{digamma, gamma, ln_gamma, mittag_leffler};
