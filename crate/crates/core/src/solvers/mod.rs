//! Time-steppers for `D^{α(t,x)} x = f(t, x)` on a uniform grid.
//!
//! Every scheme freezes the order at the left end of the step,
//! `α_n = α(t_n, x_n)`, and keeps the full history unless a memory window
//! is configured. All schemes share [`advance`], so a step recomputed from
//! the stored history reproduces the stored state exactly.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac_core::{abm_weights, corrector_weights, l1_weights, WeightRow};
use crate::io::RealTable;
use crate::order::OrderFn;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "abm_p")]
    AbmPredictor,
    #[serde(rename = "abm_pc")]
    AbmPredictorCorrector,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::L1 => "l1",
            Scheme::AbmPredictor => "abm_p",
            Scheme::AbmPredictorCorrector => "abm_pc",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "l1" => Ok(Scheme::L1),
            "abm_p" | "abm" | "predictor" => Ok(Scheme::AbmPredictor),
            "abm_pc" | "pc" | "predictor_corrector" => Ok(Scheme::AbmPredictorCorrector),
            other => Err(Error::domain(format!("unknown scheme '{other}' (expected l1, abm_p or abm_pc)"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub scheme: Scheme,
    /// Number of most recent history points kept; `None` keeps everything.
    #[serde(default)]
    pub memory_window: Option<usize>,
}

impl SolverConfig {
    pub fn new(t0: f64, t1: f64, steps: usize, scheme: Scheme) -> Result<Self> {
        let cfg = SolverConfig { t0, t1, steps, scheme, memory_window: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_memory_window(mut self, window: usize) -> Result<Self> {
        self.memory_window = Some(window);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t1.is_finite() && self.t1 > self.t0) {
            return Err(Error::domain(format!("time span [{}, {}] must satisfy t0 < t1", self.t0, self.t1)));
        }
        if self.steps == 0 {
            return Err(Error::domain("number of steps must be positive"));
        }
        if !(self.h() > 0.0) {
            return Err(Error::domain("step size underflows to zero"));
        }
        match self.memory_window {
            Some(0) => Err(Error::domain("memory window must be positive")),
            Some(w) if w > self.steps => Err(Error::domain(format!(
                "memory window {w} exceeds the number of steps {}",
                self.steps
            ))),
            _ => Ok(()),
        }
    }

    pub fn h(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.t1
        } else {
            self.t0 + n as f64 * self.h()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<f64>,
    pub states: Vec<Vec<T>>,
    /// `α(t_n, x_n)` at every grid point, including the last one.
    pub orders: Vec<T>,
    /// `f(t_n, x_n)` for `n = 0..N-1`.
    pub rhs_evals: Vec<Vec<T>>,
    /// `f(t_{n+1}, x^P_{n+1})`, predictor-corrector runs only.
    pub predicted_evals: Vec<Vec<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &[T] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// Plain values of every stored quantity.
    pub fn values(&self) -> Trajectory<f64> {
        let vals = |rows: &Vec<Vec<T>>| rows.iter().map(|r| r.iter().map(|v| v.value()).collect()).collect();
        Trajectory {
            times: self.times.clone(),
            states: vals(&self.states),
            orders: self.orders.iter().map(|a| a.value()).collect(),
            rhs_evals: vals(&self.rhs_evals),
            predicted_evals: vals(&self.predicted_evals),
        }
    }

    /// Recomputes `x_{n+1}` from the stored history, orders and evaluations.
    pub fn replay_step(&self, cfg: &SolverConfig, n: usize) -> Result<Vec<T>> {
        if n >= self.rhs_evals.len() {
            return Err(Error::domain(format!("step {n} is outside the stored history")));
        }
        let predicted = match cfg.scheme {
            Scheme::AbmPredictorCorrector => Some(self.predicted_evals[n].as_slice()),
            _ => None,
        };
        let next = advance(cfg, n, self.orders[n], &self.states, &self.rhs_evals[..=n], |_| {
            predicted.map(<[T]>::to_vec).ok_or_else(|| Error::domain("missing predicted evaluation"))
        })?;
        Ok(next.0)
    }
}

impl Trajectory<f64> {
    /// Table with header `t,alpha,x_0,...`.
    pub fn to_table(&self) -> Result<RealTable> {
        let mut header = vec!["t".to_string(), "alpha".to_string()];
        header.extend((0..self.dim()).map(|i| format!("x_{i}")));
        let mut table = RealTable::new(header);
        for ((t, a), x) in self.times.iter().zip(&self.orders).zip(&self.states) {
            let mut row = Vec::with_capacity(x.len() + 2);
            row.push(*t);
            row.push(*a);
            row.extend_from_slice(x);
            table.push(row)?;
        }
        Ok(table)
    }
}

fn scheme_row<T: Real>(scheme: Scheme, n: usize, alpha: T, h: T) -> Result<WeightRow<T>> {
    match scheme {
        Scheme::L1 => l1_weights(n, alpha, h),
        Scheme::AbmPredictor | Scheme::AbmPredictorCorrector => abm_weights(n, alpha, h),
    }
}

/// `Σ_j w_j v_j[i]` over a history slice, one dot node per component.
fn weighted_columns<T: Real>(weights: &[T], rows: &[Vec<T>], dim: usize) -> Vec<T> {
    let mut column = Vec::with_capacity(rows.len());
    (0..dim)
        .map(|i| {
            column.clear();
            column.extend(rows.iter().map(|r| r[i]));
            T::dot(weights, &column)
        })
        .collect()
}

/// First retained history index for step `n`.
fn window_start(cfg: &SolverConfig, n: usize) -> usize {
    cfg.memory_window.map_or(0, |w| (n + 1).saturating_sub(w))
}

/// One step `n → n + 1`. `predicted` is called with `x^P_{n+1}` by the
/// predictor-corrector scheme and must return `f(t_{n+1}, x^P_{n+1})`.
/// Returns the new state and, for the corrector, the predicted evaluation.
fn advance<T: Real>(
    cfg: &SolverConfig,
    n: usize,
    alpha: T,
    states: &[Vec<T>],
    evals: &[Vec<T>],
    mut predicted: impl FnMut(&[T]) -> Result<Vec<T>>,
) -> Result<(Vec<T>, Option<Vec<T>>)> {
    let h = T::cst(cfg.h());
    let dim = states[0].len();
    let lo = window_start(cfg, n);
    let row = scheme_row(cfg.scheme, n, alpha, h)?;
    match cfg.scheme {
        Scheme::L1 => {
            let mut w = row.weights[lo..].to_vec();
            if lo > 0 {
                // keep Σ a_j = 1 so constants stay fixed points
                w[0] += T::sum(&row.weights[..lo]);
            }
            let mut x = weighted_columns(&w, &states[lo..=n], dim);
            for (xi, fi) in x.iter_mut().zip(&evals[n]) {
                *xi += row.scale * *fi;
            }
            Ok((x, None))
        }
        Scheme::AbmPredictor => {
            let sums = weighted_columns(&row.weights[lo..], &evals[lo..=n], dim);
            let x = states[0].iter().zip(sums).map(|(&x0, s)| x0 + row.scale * s).collect();
            Ok((x, None))
        }
        Scheme::AbmPredictorCorrector => {
            let sums = weighted_columns(&row.weights[lo..], &evals[lo..=n], dim);
            let xp: Vec<T> = states[0].iter().zip(sums).map(|(&x0, s)| x0 + row.scale * s).collect();
            let fp = predicted(&xp)?;
            check_len(&fp, dim)?;
            let corr = corrector_weights(n, alpha, h)?;
            let implicit = corr.implicit_weight.unwrap_or_else(T::one);
            let sums = weighted_columns(&corr.weights[lo..], &evals[lo..=n], dim);
            let x = states[0]
                .iter()
                .zip(sums)
                .zip(&fp)
                .map(|((&x0, s), &p)| x0 + corr.scale * (s + implicit * p))
                .collect();
            Ok((x, Some(fp)))
        }
    }
}

fn check_len<T>(v: &[T], dim: usize) -> Result<()> {
    if v.len() == dim {
        Ok(())
    } else {
        Err(Error::shape(format!("right-hand side returned {} entries for a state of {dim}", v.len())))
    }
}

fn all_finite<T: Real>(x: &[T]) -> bool {
    x.iter().all(|v| v.value().is_finite())
}

/// Runs the scheme selected in `cfg`.
pub fn solve<T, F, O>(f: F, order: &O, x0: &[T], cfg: &SolverConfig) -> Result<Trajectory<T>>
where
    T: Real,
    F: Fn(f64, &[T]) -> Result<Vec<T>>,
    O: OrderFn<T> + ?Sized,
{
    cfg.validate()?;
    if x0.is_empty() {
        return Err(Error::shape("initial state is empty"));
    }
    if !all_finite(x0) {
        return Err(Error::Divergence { step: 0 });
    }
    let n_steps = cfg.steps;
    let dim = x0.len();
    let mut traj = Trajectory {
        times: (0..=n_steps).map(|n| cfg.time(n)).collect(),
        states: Vec::with_capacity(n_steps + 1),
        orders: Vec::with_capacity(n_steps + 1),
        rhs_evals: Vec::with_capacity(n_steps),
        predicted_evals: Vec::new(),
    };
    traj.states.push(x0.to_vec());
    for n in 0..n_steps {
        let t = traj.times[n];
        let alpha = order.order_at(t, &traj.states[n])?;
        if !alpha.value().is_finite() {
            return Err(Error::Divergence { step: n });
        }
        traj.orders.push(alpha);
        let fx = f(t, &traj.states[n])?;
        check_len(&fx, dim)?;
        traj.rhs_evals.push(fx);
        let t_next = traj.times[n + 1];
        let (x, fp) = advance(cfg, n, alpha, &traj.states, &traj.rhs_evals, |xp| f(t_next, xp))?;
        if !all_finite(&x) {
            log::debug!("non-finite state at step {}", n + 1);
            return Err(Error::Divergence { step: n + 1 });
        }
        if let Some(fp) = fp {
            traj.predicted_evals.push(fp);
        }
        traj.states.push(x);
    }
    let alpha = order.order_at(cfg.t1, &traj.states[n_steps])?;
    if !alpha.value().is_finite() {
        return Err(Error::Divergence { step: n_steps });
    }
    traj.orders.push(alpha);
    Ok(traj)
}

fn solve_with<T, F, O>(scheme: Scheme, f: F, order: &O, x0: &[T], cfg: &SolverConfig) -> Result<Trajectory<T>>
where
    T: Real,
    F: Fn(f64, &[T]) -> Result<Vec<T>>,
    O: OrderFn<T> + ?Sized,
{
    if cfg.scheme != scheme {
        return Err(Error::domain(format!("configuration selects {} but {} was called", cfg.scheme, scheme)));
    }
    solve(f, order, x0, cfg)
}

pub fn solve_l1<T, F, O>(f: F, order: &O, x0: &[T], cfg: &SolverConfig) -> Result<Trajectory<T>>
where
    T: Real,
    F: Fn(f64, &[T]) -> Result<Vec<T>>,
    O: OrderFn<T> + ?Sized,
{
    solve_with(Scheme::L1, f, order, x0, cfg)
}

pub fn solve_abm_predictor<T, F, O>(f: F, order: &O, x0: &[T], cfg: &SolverConfig) -> Result<Trajectory<T>>
where
    T: Real,
    F: Fn(f64, &[T]) -> Result<Vec<T>>,
    O: OrderFn<T> + ?Sized,
{
    solve_with(Scheme::AbmPredictor, f, order, x0, cfg)
}

pub fn solve_abm_pc<T, F, O>(f: F, order: &O, x0: &[T], cfg: &SolverConfig) -> Result<Trajectory<T>>
where
    T: Real,
    F: Fn(f64, &[T]) -> Result<Vec<T>>,
    O: OrderFn<T> + ?Sized,
{
    solve_with(Scheme::AbmPredictorCorrector, f, order, x0, cfg)
}

/// Solves on each grid size and reports the largest deviation from
/// `oracle(t)` over the grid, sorted by grid size.
pub fn convergence_probe<F, O, G>(
    f: F,
    order: &O,
    x0: &[f64],
    base: &SolverConfig,
    grid_sizes: &[usize],
    oracle: G,
) -> Result<Vec<(usize, f64)>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
    O: OrderFn<f64> + ?Sized,
    G: Fn(f64) -> Result<Vec<f64>>,
{
    let mut sizes = grid_sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|n| {
            let cfg = SolverConfig { steps: n, memory_window: None, ..*base };
            let traj = solve(&f, order, x0, &cfg)?;
            let mut worst: f64 = 0.0;
            for (t, x) in traj.times.iter().zip(&traj.states) {
                let exact = oracle(*t)?;
                check_len(&exact, x.len())?;
                for (a, b) in x.iter().zip(&exact) {
                    worst = worst.max((a - b).abs());
                }
            }
            Ok((n, worst))
        })
        .collect()
}

/// True when every error is strictly smaller than the one before it.
pub fn strictly_decreasing(errors: &[(usize, f64)]) -> bool {
    errors.windows(2).all(|w| w[1].1 < w[0].1)
}
