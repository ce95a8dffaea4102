//! Reverse-mode differentiation on a thread-local tape.
//!
//! A [`Tape`] guard owns the calling thread's record for its lifetime.
//! Operations on tracked [`Var`]s append nodes; each node stores the
//! indices of its inputs and the local partial derivative with respect to
//! each. Constants (created with [`Var::constant`] or `Real::cst`) never
//! touch the tape, so plain evaluation through `Var` costs no memory.

use std::cell::RefCell;
use std::marker::PhantomData;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

use crate::frac_core::special::{digamma_unchecked, gamma_unchecked};
use crate::scalar::Real;

const UNTRACKED: u32 = u32::MAX;

struct TapeInner {
    active: bool,
    generation: u32,
    /// `ends[i]` is one past the last edge of node `i`.
    ends: Vec<u32>,
    edges: Vec<(u32, f64)>,
}

impl TapeInner {
    fn clear(&mut self) {
        self.ends.clear();
        self.edges.clear();
    }
}

thread_local! {
    static TAPE: RefCell<TapeInner> = const {
        RefCell::new(TapeInner {
            active: false,
            generation: 0,
            ends: Vec::new(),
            edges: Vec::new(),
        })
    };
}

/// Scalar that records its computation history on the active tape.
#[derive(Clone, Copy, Debug)]
pub struct Var {
    value: f64,
    index: u32,
    generation: u32,
}

/// Guard for the calling thread's tape. Only one may be alive per thread.
pub struct Tape {
    generation: u32,
    _not_send: PhantomData<*const ()>,
}

impl Tape {
    /// Starts a fresh record on this thread.
    ///
    /// Panics if another `Tape` is alive on the same thread.
    pub fn new() -> Self {
        let generation = TAPE.with(|t| {
            let mut t = t.borrow_mut();
            assert!(!t.active, "a Tape is already active on this thread");
            t.active = true;
            t.generation = t.generation.wrapping_add(1);
            t.clear();
            t.generation
        });
        Tape {
            generation,
            _not_send: PhantomData,
        }
    }

    /// Registers an independent variable (a leaf).
    pub fn var(&self, value: f64) -> Var {
        record(value, std::iter::empty(), true)
    }

    pub fn vars(&self, values: &[f64]) -> Vec<Var> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    /// Number of nodes recorded so far.
    pub fn len(&self) -> usize {
        TAPE.with(|t| t.borrow().ends.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Runs the reverse sweep from `output`, visiting each node once.
    pub fn gradient(&self, output: Var) -> Gradients {
        TAPE.with(|t| {
            let t = t.borrow();
            let mut adjoint = vec![0.0; t.ends.len()];
            if output.index != UNTRACKED {
                assert_eq!(
                    output.generation, self.generation,
                    "output belongs to a different tape"
                );
                adjoint[output.index as usize] = 1.0;
                for i in (0..=output.index as usize).rev() {
                    let a = adjoint[i];
                    if a == 0.0 {
                        continue;
                    }
                    let start = if i == 0 { 0 } else { t.ends[i - 1] as usize };
                    for &(parent, partial) in &t.edges[start..t.ends[i] as usize] {
                        adjoint[parent as usize] += a * partial;
                    }
                }
            }
            Gradients {
                adjoint,
                generation: self.generation,
            }
        })
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Drop for Tape {
    fn drop(&mut self) {
        TAPE.with(|t| {
            let mut t = t.borrow_mut();
            t.active = false;
            t.clear();
            t.ends.shrink_to(1 << 20);
            t.edges.shrink_to(1 << 21);
        });
    }
}

/// Adjoints from one reverse sweep.
#[derive(Debug, Clone)]
pub struct Gradients {
    adjoint: Vec<f64>,
    generation: u32,
}

impl Gradients {
    /// Derivative of the swept output with respect to `v` (zero for constants).
    pub fn wrt(&self, v: Var) -> f64 {
        if v.index == UNTRACKED {
            return 0.0;
        }
        assert_eq!(v.generation, self.generation, "variable from another tape");
        self.adjoint.get(v.index as usize).copied().unwrap_or(0.0)
    }

    pub fn wrt_all(&self, vs: &[Var]) -> Vec<f64> {
        vs.iter().map(|&v| self.wrt(v)).collect()
    }
}

fn record(value: f64, inputs: impl IntoIterator<Item = (Var, f64)>, leaf: bool) -> Var {
    TAPE.with(|t| {
        let mut t = t.borrow_mut();
        let before = t.edges.len();
        let generation = t.generation;
        for (v, partial) in inputs {
            if v.index != UNTRACKED {
                debug_assert_eq!(v.generation, generation, "variable from a stale tape");
                t.edges.push((v.index, partial));
            }
        }
        if t.edges.len() == before && !leaf {
            return Var::constant(value);
        }
        assert!(t.active, "tracked operation without an active Tape");
        let index = t.ends.len() as u32;
        assert!(index != UNTRACKED, "tape exhausted");
        let end = t.edges.len() as u32;
        t.ends.push(end);
        Var {
            value,
            index,
            generation,
        }
    })
}

impl Var {
    /// An untracked constant.
    pub const fn constant(value: f64) -> Self {
        Var {
            value,
            index: UNTRACKED,
            generation: 0,
        }
    }

    pub fn is_tracked(&self) -> bool {
        self.index != UNTRACKED
    }

    #[inline]
    fn unary(self, value: f64, partial: f64) -> Var {
        if self.index == UNTRACKED {
            return Var::constant(value);
        }
        record(value, [(self, partial)], false)
    }

    #[inline]
    fn binary(a: Var, da: f64, b: Var, db: f64, value: f64) -> Var {
        if a.index == UNTRACKED && b.index == UNTRACKED {
            return Var::constant(value);
        }
        record(value, [(a, da), (b, db)], false)
    }

    /// Records a user-supplied elementary operation with a given local
    /// derivative. Used to plug special functions into the tape.
    pub fn custom_unary(self, value: f64, partial: f64) -> Var {
        self.unary(value, partial)
    }
}

impl Add for Var {
    type Output = Var;
    #[inline]
    fn add(self, rhs: Var) -> Var {
        Var::binary(self, 1.0, rhs, 1.0, self.value + rhs.value)
    }
}

impl Sub for Var {
    type Output = Var;
    #[inline]
    fn sub(self, rhs: Var) -> Var {
        Var::binary(self, 1.0, rhs, -1.0, self.value - rhs.value)
    }
}

impl Mul for Var {
    type Output = Var;
    #[inline]
    fn mul(self, rhs: Var) -> Var {
        Var::binary(self, rhs.value, rhs, self.value, self.value * rhs.value)
    }
}

impl Div for Var {
    type Output = Var;
    #[inline]
    fn div(self, rhs: Var) -> Var {
        let inv = 1.0 / rhs.value;
        let q = self.value * inv;
        Var::binary(self, inv, rhs, -q * inv, q)
    }
}

impl Neg for Var {
    type Output = Var;
    #[inline]
    fn neg(self) -> Var {
        self.unary(-self.value, -1.0)
    }
}

macro_rules! assign_op {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr for Var {
            #[inline]
            fn $method(&mut self, rhs: Var) {
                *self = *self $op rhs;
            }
        }
    };
}

assign_op!(AddAssign, add_assign, +);
assign_op!(SubAssign, sub_assign, -);
assign_op!(MulAssign, mul_assign, *);

impl Add<f64> for Var {
    type Output = Var;
    fn add(self, rhs: f64) -> Var {
        self.unary(self.value + rhs, 1.0)
    }
}

impl Mul<f64> for Var {
    type Output = Var;
    fn mul(self, rhs: f64) -> Var {
        self.unary(self.value * rhs, rhs)
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Var) -> bool {
        self.value == other.value
    }
}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Var) -> Option<std::cmp::Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

impl Zero for Var {
    fn zero() -> Var {
        Var::constant(0.0)
    }
    fn is_zero(&self) -> bool {
        self.value == 0.0
    }
}

impl One for Var {
    fn one() -> Var {
        Var::constant(1.0)
    }
}

impl Real for Var {
    #[inline]
    fn cst(x: f64) -> Self {
        Var::constant(x)
    }

    #[inline]
    fn value(self) -> f64 {
        self.value
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        self.unary(e, e)
    }

    fn ln(self) -> Self {
        self.unary(self.value.ln(), 1.0 / self.value)
    }

    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.unary(s, 0.5 / s)
    }

    fn powf(self, exponent: Self) -> Self {
        let (b, e) = (self.value, exponent.value);
        let v = b.powf(e);
        let db = if self.is_tracked() { e * b.powf(e - 1.0) } else { 0.0 };
        let de = if exponent.is_tracked() { v * b.ln() } else { 0.0 };
        Var::binary(self, db, exponent, de, v)
    }

    fn powi(self, n: i32) -> Self {
        let v = self.value.powi(n);
        self.unary(v, n as f64 * self.value.powi(n - 1))
    }

    fn sin(self) -> Self {
        self.unary(self.value.sin(), self.value.cos())
    }

    fn cos(self) -> Self {
        self.unary(self.value.cos(), -self.value.sin())
    }

    fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.unary(t, 1.0 - t * t)
    }

    fn sigmoid(self) -> Self {
        let s = Real::sigmoid(self.value);
        self.unary(s, s * (1.0 - s))
    }

    fn abs(self) -> Self {
        let sign = if self.value < 0.0 { -1.0 } else { 1.0 };
        self.unary(self.value.abs(), sign)
    }

    fn recip(self) -> Self {
        let r = 1.0 / self.value;
        self.unary(r, -r * r)
    }

    fn gamma(self) -> Self {
        let g = gamma_unchecked(self.value);
        if !self.is_tracked() {
            return Var::constant(g);
        }
        self.unary(g, g * digamma_unchecked(self.value))
    }

    fn dot(a: &[Self], b: &[Self]) -> Self {
        debug_assert_eq!(a.len(), b.len());
        let mut value = 0.0;
        for (x, y) in a.iter().zip(b) {
            value += x.value * y.value;
        }
        let edges = a
            .iter()
            .zip(b)
            .flat_map(|(&x, &y)| [(x, y.value), (y, x.value)]);
        record(value, edges, false)
    }

    fn sum(xs: &[Self]) -> Self {
        let mut value = 0.0;
        for x in xs {
            value += x.value;
        }
        record(value, xs.iter().map(|&x| (x, 1.0)), false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let tape = Tape::new();
        let x = tape.var(3.0);
        let y = tape.var(-2.0);
        let z = x * x * y + y;
        let g = tape.gradient(z);
        assert_eq!(z.value(), -20.0);
        assert_eq!(g.wrt(x), 2.0 * 3.0 * -2.0);
        assert_eq!(g.wrt(y), 9.0 + 1.0);
    }

    #[test]
    fn constants_stay_off_the_tape() {
        let tape = Tape::new();
        let a = Var::cst(2.0);
        let b = a * a + Var::cst(1.0);
        assert_eq!(b.value(), 5.0);
        assert!(!b.is_tracked());
        assert!(tape.is_empty());
    }

    #[test]
    fn constant_evaluation_needs_no_tape() {
        let a = Var::cst(0.25);
        assert_eq!(a.sqrt().value(), 0.5);
    }

    #[test]
    fn sigmoid_adjoint_at_zero() {
        let tape = Tape::new();
        let x = tape.var(0.0);
        let s = x.sigmoid();
        assert_eq!(s.value(), 0.5);
        assert_eq!(tape.gradient(s).wrt(x), 0.25);
    }

    #[test]
    fn pow_with_constant_base() {
        let tape = Tape::new();
        let a = tape.var(1.0);
        let p = Var::cst(2.0).powf(a);
        assert_eq!(p.value(), 2.0);
        let d = tape.gradient(p).wrt(a);
        assert!((d - 1.386_294_361_119_890_6).abs() < 1e-15);
    }

    #[test]
    fn gamma_adjoint_uses_digamma() {
        let tape = Tape::new();
        let x = tape.var(1.5);
        let g = x.gamma();
        assert!((g.value() - 0.886_226_925_452_758).abs() < 1e-14);
        let d = tape.gradient(g).wrt(x);
        assert!((d - 0.032_338_397_448_885_013_829).abs() < 1e-13);
    }

    #[test]
    fn dot_and_sum_nodes() {
        let tape = Tape::new();
        let a = tape.vars(&[1.0, 2.0]);
        let b = tape.vars(&[3.0, 4.0]);
        let d = Var::dot(&a, &b);
        let s = Var::sum(&[d, a[0]]);
        let g = tape.gradient(s);
        assert_eq!(s.value(), 12.0);
        assert_eq!(g.wrt_all(&a), vec![4.0, 4.0]);
        assert_eq!(g.wrt_all(&b), vec![1.0, 2.0]);
    }

    #[test]
    fn shared_subexpression_accumulates() {
        let tape = Tape::new();
        let x = tape.var(0.7);
        let y = x.tanh();
        let z = y * y + y;
        let t = 0.7f64.tanh();
        let want = (2.0 * t + 1.0) * (1.0 - t * t);
        assert!((tape.gradient(z).wrt(x) - want).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "already active")]
    fn one_tape_per_thread() {
        let _a = Tape::new();
        let _b = Tape::new();
    }

    #[test]
    fn tapes_are_reusable_sequentially() {
        for k in 0..3 {
            let tape = Tape::new();
            let x = tape.var(k as f64);
            let y = x * x;
            assert_eq!(tape.gradient(y).wrt(x), 2.0 * k as f64);
        }
    }
}
