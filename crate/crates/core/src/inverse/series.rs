use crate::autodiff::{Adam, ParamSlot, ParamStore, Tape};
use crate::error::{Error, Result};
use crate::frac_core::caputo_power_term;
use crate::inverse::LossReport;
use crate::order::OrderModel;
use crate::scalar::Real;

pub const DEFAULT_SERIES_DEGREE: usize = 5;

/// `u(t) = u0 + Σ_{i=0}^{r} a_i t^i` with learnable `a_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeriesModel {
    pub u0: f64,
    pub coeffs: ParamSlot,
}

impl PowerSeriesModel {
    /// Registers `degree + 1` zero coefficients under `name`.
    pub fn new(store: &mut ParamStore, name: &str, u0: f64, degree: usize) -> Result<Self> {
        let coeffs = store.add(name, &[degree + 1], vec![0.0; degree + 1])?;
        Ok(PowerSeriesModel { u0, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len - 1
    }

    pub fn eval<T: Real>(&self, params: &[T], t: f64) -> T {
        let a = self.coeffs.view(params);
        let powers: Vec<T> = (0..a.len()).map(|i| T::cst(t.powi(i as i32))).collect();
        T::cst(self.u0) + T::dot(a, &powers)
    }
}

/// `ζ(t) = Σ_i a_i D^{α(t)} t^i`, the order read at `(t, u(t))`.
pub fn zeta_k<T: Real>(series: &PowerSeriesModel, order: &OrderModel, params: &[T], t: f64) -> Result<T> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("zeta requires t > 0, got {t}")));
    }
    let u = series.eval(params, t);
    let alpha = order.eval_order(params, t, &[u])?;
    let a = series.coeffs.view(params);
    let terms = (1..a.len())
        .map(|i| caputo_power_term(i as u32, alpha, t))
        .collect::<Result<Vec<T>>>()?;
    Ok(T::dot(&a[1..], &terms))
}

/// Right-hand side `h(t, u)` of a scalar equation.
pub trait ScalarRhs {
    fn eval<T: Real>(&self, t: f64, u: T) -> T;
}

pub struct Term {
    pub coefficient: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub order: OrderModel,
}

impl std::fmt::Debug for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Term").field("order", &self.order).finish_non_exhaustive()
    }
}

/// `Σ_{k=0}^{m} Q_k(t) D^{α_k} u(t) = h(t, u)` sampled on `grid`.
#[derive(Debug)]
pub struct MultiTermProblem<H> {
    pub terms: Vec<Term>,
    pub rhs: H,
    pub grid: Vec<f64>,
}

impl<H: ScalarRhs> MultiTermProblem<H> {
    pub fn new(terms: Vec<Term>, rhs: H, grid: Vec<f64>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::domain("a multi-term problem needs at least one term"));
        }
        if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("residual grid must be positive and strictly increasing"));
        }
        Ok(MultiTermProblem { terms, rhs, grid })
    }

    /// Number of terms minus one.
    pub fn m(&self) -> usize {
        self.terms.len() - 1
    }
}

/// `Σ_j (Σ_k Q_k(t_j) ζ_k(t_j) − h(t_j, u(t_j)))²`.
pub fn equation_residual<T: Real, H: ScalarRhs>(
    problem: &MultiTermProblem<H>,
    series: &PowerSeriesModel,
    params: &[T],
) -> Result<T> {
    let mut squares = Vec::with_capacity(problem.grid.len());
    for &t in &problem.grid {
        let mut lhs = T::zero();
        for term in &problem.terms {
            lhs += T::cst((term.coefficient)(t)) * zeta_k(series, &term.order, params, t)?;
        }
        let r = lhs - problem.rhs.eval(t, series.eval(params, t));
        squares.push(r * r);
    }
    let total = T::sum(&squares);
    if !total.value().is_finite() {
        return Err(Error::Numeric("equation residual is not finite".into()));
    }
    Ok(total)
}

/// Minimises the equation residual with Adam over every parameter in
/// `store` (series coefficients and any learnable orders). Returns the
/// residual after each iteration.
pub fn fit_series<H: ScalarRhs>(
    problem: &MultiTermProblem<H>,
    series: &PowerSeriesModel,
    store: &mut ParamStore,
    iterations: usize,
    lr: f64,
) -> Result<Vec<LossReport>> {
    let mut adam = Adam::new(store.len(), lr);
    let mut history = Vec::with_capacity(iterations);
    for it in 0..iterations {
        let (loss, grads) = {
            let tape = Tape::new();
            let vars = tape.vars(store.values());
            let loss = equation_residual(problem, series, &vars)?;
            (loss.value(), tape.gradient(loss).wrt_all(&vars))
        };
        adam.step(store.values_mut(), &grads).map_err(|e| Error::Training {
            iteration: it,
            reason: e.to_string(),
            last_report: history.last().cloned().map(Box::new),
        })?;
        history.push(LossReport::new(it + 1, loss, 0.0, 1.0, 0.0));
    }
    Ok(history)
}
