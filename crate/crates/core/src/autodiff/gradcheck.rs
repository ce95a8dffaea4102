use super::tape::{Tape, Var};
use crate::scalar::Real;

/// A scalar function of a flat parameter vector, evaluable both on plain
/// values and on tape variables.
pub trait Objective {
    fn eval<T: Real>(&self, params: &[T]) -> T;
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|autodiff − fd| / max(1e-8, |fd|)` over parameters.
    pub max_rel: f64,
    /// Parameter index attaining `max_rel`.
    pub worst_index: Option<usize>,
    pub checked: usize,
    pub rel_tol: f64,
    pub autodiff: Vec<f64>,
    pub finite_difference: Vec<f64>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel <= self.rel_tol
    }
}

/// Fourth-order central difference of `f` along coordinate `i`.
pub fn central_difference<O: Objective>(obj: &O, params: &[f64], i: usize) -> f64 {
    let h = 1e-3 * params[i].abs().max(1.0);
    let mut p = params.to_vec();
    let mut at = |delta: f64| {
        p[i] = params[i] + delta;
        obj.eval(&p)
    };
    let (f2, f1, b1, b2) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
    ((b2 - f2) + 8.0 * (f1 - b1)) / (12.0 * h)
}

/// Compares the reverse-mode gradient of `obj` at `params` against
/// central finite differences.
pub fn grad_check<O: Objective>(obj: &O, params: &[f64], rel_tol: f64) -> GradCheckReport {
    let autodiff = {
        let tape = Tape::new();
        let vars: Vec<Var> = tape.vars(params);
        let out = obj.eval(&vars);
        tape.gradient(out).wrt_all(&vars)
    };
    let finite_difference: Vec<f64> = (0..params.len())
        .map(|i| central_difference(obj, params, i))
        .collect();
    let mut max_rel = 0.0;
    let mut worst_index = None;
    for (i, (&a, &f)) in autodiff.iter().zip(&finite_difference).enumerate() {
        let rel = (a - f).abs() / f.abs().max(1e-8);
        if rel > max_rel || rel.is_nan() {
            max_rel = if rel.is_nan() { f64::INFINITY } else { rel };
            worst_index = Some(i);
        }
    }
    GradCheckReport {
        max_rel,
        worst_index,
        checked: params.len(),
        rel_tol,
        autodiff,
        finite_difference,
    }
}
