//! Coefficient kernels of the L1, fractional Adams-Bashforth and
//! Adams-Moulton schemes, with the order frozen per step.
//!
//! All kernels use the convention `0^β := 0` (including `β = 0`), so the
//! `α → 1` limit stays continuous and the schemes collapse to forward Euler
//! at `α = 1`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One row of scheme coefficients for the step `n → n + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow<T> {
    /// History weights, index `j = 0..=n`.
    pub weights: Vec<T>,
    /// Per-step multiplier applied to the right-hand-side contributions.
    pub scale: T,
    /// The order the row was built with.
    pub order_used: T,
    /// Weight on the predicted point `f(t_{n+1}, x^P_{n+1})`; corrector rows only.
    pub implicit_weight: Option<T>,
}

impl<T: Real> WeightRow<T> {
    /// Sum of the history weights (the implicit weight is not included).
    pub fn history_sum(&self) -> T {
        T::sum(&self.weights)
    }

    /// Index of the step this row advances from.
    pub fn step(&self) -> usize {
        self.weights.len() - 1
    }
}

const ORDER_SLACK: f64 = 1e-12;

/// Checks `α ∈ (0, 1]`, allowing for one rounding step above 1.
pub fn validate_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 + ORDER_SLACK {
        Ok(())
    } else {
        Err(Error::domain(format!("fractional order {alpha} outside (0, 1]")))
    }
}

fn validate_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("step size {h} must be positive and finite")))
    }
}

/// `k^e` for a non-negative integer base, with `0^e := 0`.
#[inline]
fn int_pow<T: Real>(base: usize, exponent: T) -> T {
    match base {
        0 => T::zero(),
        1 => T::one(),
        _ => T::cst(base as f64).powf(exponent),
    }
}

fn power_table<T: Real>(upto: usize, exponent: T) -> Vec<T> {
    (0..=upto).map(|k| int_pow(k, exponent)).collect()
}

/// L1 weights `a_{j,n+1}` and `c_{n+1} = Γ(2 − α) h^α`.
pub fn l1_weights<T: Real>(n: usize, alpha: T, h: T) -> Result<WeightRow<T>> {
    validate_order(alpha.value())?;
    validate_step(h.value())?;
    let beta = T::one() - alpha;
    let p = power_table(n + 2, beta);
    let mut weights = Vec::with_capacity(n + 1);
    weights.push(p[n + 1] - p[n]);
    for j in 1..=n {
        weights.push(T::cst(2.0) * p[n + 1 - j] - p[n - j] - p[n + 2 - j]);
    }
    let scale = (T::cst(2.0) - alpha).gamma() * h.powf(alpha);
    Ok(WeightRow {
        weights,
        scale,
        order_used: alpha,
        implicit_weight: None,
    })
}

/// Fractional Adams-Bashforth (predictor) weights
/// `b_{j,n+1} = (n+1−j)^α − (n−j)^α` and scale `h^α / Γ(1 + α)`.
pub fn abm_weights<T: Real>(n: usize, alpha: T, h: T) -> Result<WeightRow<T>> {
    validate_order(alpha.value())?;
    validate_step(h.value())?;
    let p = power_table(n + 1, alpha);
    let weights = (0..=n).map(|j| p[n + 1 - j] - p[n - j]).collect();
    let scale = h.powf(alpha) / (T::one() + alpha).gamma();
    Ok(WeightRow {
        weights,
        scale,
        order_used: alpha,
        implicit_weight: None,
    })
}

/// Fractional Adams-Moulton (corrector) weights with the implicit point
/// weighted by one and scale `h^α / Γ(α + 2)`.
pub fn corrector_weights<T: Real>(n: usize, alpha: T, h: T) -> Result<WeightRow<T>> {
    validate_order(alpha.value())?;
    validate_step(h.value())?;
    let ap1 = alpha + T::one();
    let q = power_table(n + 2, ap1);
    let mut weights = Vec::with_capacity(n + 1);
    let nf = T::cst(n as f64);
    weights.push(q[n] - (nf - alpha) * int_pow(n + 1, alpha));
    for j in 1..=n {
        weights.push(q[n - j + 2] + q[n - j] - T::cst(2.0) * q[n - j + 1]);
    }
    let scale = h.powf(alpha) / (alpha + T::cst(2.0)).gamma();
    Ok(WeightRow {
        weights,
        scale,
        order_used: alpha,
        implicit_weight: Some(T::one()),
    })
}

/// Caputo derivative of order `α(t)` of the power `t^n` evaluated at `t`:
/// zero for `n = 0`, otherwise `Γ(n+1)/Γ(n+1−α) · t^{n−α}`.
pub fn caputo_power_term<T: Real>(n: u32, alpha: T, t: f64) -> Result<T> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("power term requires t > 0, got {t}")));
    }
    validate_order(alpha.value())?;
    if n == 0 {
        return Ok(T::zero());
    }
    let nf = T::cst(n as f64);
    let ratio = T::cst(crate::frac_core::gamma(n as f64 + 1.0)?) / (nf + T::one() - alpha).gamma();
    Ok(ratio * T::cst(t).powf(nf - alpha))
}
