//! The scalar abstraction every numerical routine is written against.
//!
//! [`Real`] is implemented for `f32`, `f64`, and the reverse-mode tape
//! variable [`crate::autodiff::Var`]. Solvers, coefficient kernels, order
//! models and networks are generic over it, so the same code path produces
//! plain values or a differentiable record depending on the scalar chosen.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{Float, One, Zero};

use crate::frac_core::special;

pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    /// Lifts an `f64` constant. Constants carry no derivative.
    fn cst(x: f64) -> Self;

    /// The plain numeric value.
    fn value(self) -> f64;

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powf(self, exponent: Self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn abs(self) -> Self;
    fn recip(self) -> Self;

    /// Euler gamma function. Returns NaN at poles; callers that need a
    /// checked version use [`crate::frac_core::gamma`].
    fn gamma(self) -> Self;

    fn sigmoid(self) -> Self {
        let v = self.value();
        if v >= 0.0 {
            Self::one() / (Self::one() + (-self).exp())
        } else {
            let e = self.exp();
            e / (Self::one() + e)
        }
    }

    fn relu(self) -> Self {
        if self.value() > 0.0 {
            self
        } else {
            Self::zero()
        }
    }

    fn is_finite(self) -> bool {
        self.value().is_finite()
    }

    /// Inner product `Σ a_i b_i`.
    fn dot(a: &[Self], b: &[Self]) -> Self {
        debug_assert_eq!(a.len(), b.len());
        let mut acc = Self::zero();
        for (&x, &y) in a.iter().zip(b) {
            acc += x * y;
        }
        acc
    }

    fn sum(xs: &[Self]) -> Self {
        let mut acc = Self::zero();
        for &x in xs {
            acc += x;
        }
        acc
    }
}

macro_rules! impl_real_for_float {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn cst(x: f64) -> Self {
                x as $t
            }
            #[inline]
            fn value(self) -> f64 {
                self as f64
            }
            #[inline]
            fn exp(self) -> Self {
                Float::exp(self)
            }
            #[inline]
            fn ln(self) -> Self {
                Float::ln(self)
            }
            #[inline]
            fn sqrt(self) -> Self {
                Float::sqrt(self)
            }
            #[inline]
            fn powf(self, exponent: Self) -> Self {
                Float::powf(self, exponent)
            }
            #[inline]
            fn powi(self, n: i32) -> Self {
                Float::powi(self, n)
            }
            #[inline]
            fn sin(self) -> Self {
                Float::sin(self)
            }
            #[inline]
            fn cos(self) -> Self {
                Float::cos(self)
            }
            #[inline]
            fn tanh(self) -> Self {
                Float::tanh(self)
            }
            #[inline]
            fn abs(self) -> Self {
                Float::abs(self)
            }
            #[inline]
            fn recip(self) -> Self {
                Float::recip(self)
            }
            fn gamma(self) -> Self {
                special::gamma_unchecked(self)
            }
        }
    };
}

impl_real_for_float!(f32);
impl_real_for_float!(f64);
