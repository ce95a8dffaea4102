//! The gradient-check suite: every differentiable primitive, an MLP, and
//! losses differentiated through the unrolled solvers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{
    gamma_of, grad_check, pow_const_base, pow_var_base, Activation, GradCheckReport, Mlp, Objective, ParamStore,
    Tensor,
};
use crate::error::Result;
use crate::inverse::vp_network_residual;
use crate::order::{OrderModel, StateInput, DEFAULT_EMBED_DIM, DEFAULT_HIDDEN};
use crate::scalar::Real;
use crate::solvers::{solve, Scheme, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Full,
    /// No checks at all; exercises the empty path.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub steps: usize,
    pub seed: u64,
    pub rel_tol: f64,
    /// Adds a check whose loss has a term detached from the tape, so its
    /// reverse-mode gradient is wrong. Negative control.
    pub inject_faulty_adjoint: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { suite: Suite::Full, steps: 20, seed: 0, rel_tol: 1e-4, inject_faulty_adjoint: false }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub name: String,
    pub report: GradCheckReport,
}

impl SuiteEntry {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primitive {
    Matmul,
    Add,
    AddBroadcast,
    Sub,
    Hadamard,
    ScalarMul,
    Sigmoid,
    Tanh,
    Relu,
    RowSoftmax,
    Square,
    Sum,
    Mean,
    Concat,
    PowConstBase,
    PowVarBase,
    GammaOf,
    Reciprocal,
}

impl Primitive {
    pub const ALL: [Primitive; 18] = [
        Primitive::Matmul,
        Primitive::Add,
        Primitive::AddBroadcast,
        Primitive::Sub,
        Primitive::Hadamard,
        Primitive::ScalarMul,
        Primitive::Sigmoid,
        Primitive::Tanh,
        Primitive::Relu,
        Primitive::RowSoftmax,
        Primitive::Square,
        Primitive::Sum,
        Primitive::Mean,
        Primitive::Concat,
        Primitive::PowConstBase,
        Primitive::PowVarBase,
        Primitive::GammaOf,
        Primitive::Reciprocal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Primitive::Matmul => "matmul",
            Primitive::Add => "add",
            Primitive::AddBroadcast => "add_broadcast",
            Primitive::Sub => "sub",
            Primitive::Hadamard => "hadamard",
            Primitive::ScalarMul => "scalar_mul",
            Primitive::Sigmoid => "sigmoid",
            Primitive::Tanh => "tanh",
            Primitive::Relu => "relu",
            Primitive::RowSoftmax => "row_softmax",
            Primitive::Square => "square",
            Primitive::Sum => "sum",
            Primitive::Mean => "mean",
            Primitive::Concat => "concat",
            Primitive::PowConstBase => "pow_const_base",
            Primitive::PowVarBase => "pow_var_base",
            Primitive::GammaOf => "gamma_of",
            Primitive::Reciprocal => "reciprocal",
        }
    }
}

/// `Σ (prim(A, B) ⊙ R)` for a primitive applied to tensors read from the
/// parameter vector.
#[derive(Debug, Clone)]
pub struct PrimitiveObjective {
    pub primitive: Primitive,
    pub a_shape: (usize, usize),
    pub b_shape: Option<(usize, usize)>,
    probe: Vec<f64>,
}

impl PrimitiveObjective {
    /// Random shapes up to `max_dim` and inputs inside the primitive's
    /// smooth domain.
    pub fn random(primitive: Primitive, max_dim: usize, rng: &mut impl Rng) -> (Self, Vec<f64>) {
        let mut dim = || rng.random_range(1..=max_dim);
        let (r, c, k) = (dim(), dim(), dim());
        let (a_shape, b_shape) = match primitive {
            Primitive::Matmul => ((r, k), Some((k, c))),
            Primitive::Add | Primitive::Sub | Primitive::Hadamard => ((r, c), Some((r, c))),
            Primitive::AddBroadcast => ((r, c), Some((1, c))),
            Primitive::Concat => ((r, c), Some((r, k))),
            Primitive::ScalarMul => ((r, c), Some((1, 1))),
            _ => ((r, c), None),
        };
        let n = a_shape.0 * a_shape.1 + b_shape.map_or(0, |(x, y)| x * y);
        let params: Vec<f64> = (0..n)
            .map(|_| match primitive {
                Primitive::PowConstBase => rng.random_range(0.05..1.0),
                Primitive::PowVarBase | Primitive::Reciprocal => rng.random_range(0.5..2.0),
                Primitive::GammaOf => rng.random_range(0.5..3.0),
                Primitive::Relu => {
                    let m: f64 = rng.random_range(0.1..1.5);
                    if rng.random::<bool>() { m } else { -m }
                }
                _ => rng.random_range(-1.5..1.5),
            })
            .collect();
        let out_len = match primitive {
            Primitive::Matmul => r * c,
            Primitive::Concat => r * (c + k),
            Primitive::Sum | Primitive::Mean => 1,
            _ => a_shape.0 * a_shape.1,
        };
        let probe = (0..out_len).map(|_| rng.random_range(-1.0..1.0)).collect();
        (PrimitiveObjective { primitive, a_shape, b_shape, probe }, params)
    }

    fn apply<T: Real>(&self, p: &[T]) -> Result<Vec<T>> {
        let na = self.a_shape.0 * self.a_shape.1;
        let a = Tensor::matrix(self.a_shape.0, self.a_shape.1, p[..na].to_vec())?;
        let b = match self.b_shape {
            Some((r, c)) => Some(Tensor::matrix(r, c, p[na..].to_vec())?),
            None => None,
        };
        let b = || b.clone().expect("binary primitive has a second operand");
        let out = match self.primitive {
            Primitive::Matmul => a.matmul(&b())?,
            Primitive::Add | Primitive::AddBroadcast => a.add(&b())?,
            Primitive::Sub => a.sub(&b())?,
            Primitive::Hadamard => a.hadamard(&b())?,
            Primitive::ScalarMul => a.scale(b().data()[0]),
            Primitive::Sigmoid => a.sigmoid(),
            Primitive::Tanh => a.tanh(),
            Primitive::Relu => a.relu(),
            Primitive::RowSoftmax => a.row_softmax()?,
            Primitive::Square => a.square(),
            Primitive::Sum => return Ok(vec![a.sum()]),
            Primitive::Mean => return Ok(vec![a.mean()]),
            Primitive::Concat => a.concat_cols(&b())?,
            Primitive::PowConstBase => a.map(|x| pow_const_base(1.7, x)),
            Primitive::PowVarBase => a.map(|x| pow_var_base(x, 0.7)),
            Primitive::GammaOf => a.map(gamma_of),
            Primitive::Reciprocal => a.reciprocal(),
        };
        Ok(out.into_data())
    }
}

impl Objective for PrimitiveObjective {
    fn eval<T: Real>(&self, p: &[T]) -> T {
        let out = self.apply(p).expect("shapes are consistent by construction");
        let probe: Vec<T> = self.probe.iter().map(|&r| T::cst(r)).collect();
        T::dot(&out, &probe)
    }
}

struct MlpObjective {
    net: Mlp,
    inputs: Vec<f64>,
}

impl Objective for MlpObjective {
    fn eval<T: Real>(&self, p: &[T]) -> T {
        let outs: Vec<T> = self
            .inputs
            .iter()
            .map(|&t| self.net.forward(p, &[T::cst(t)]).expect("width-1 input")[0])
            .collect();
        T::sum(&outs)
    }
}

/// `Σ_i x_N[i]² + Σ_n α_n` after solving `x' = tanh(W x + b)` with a
/// state-dependent order.
struct SolverObjective {
    order: OrderModel,
    rhs: std::ops::Range<usize>,
    cfg: SolverConfig,
}

impl Objective for SolverObjective {
    fn eval<T: Real>(&self, p: &[T]) -> T {
        let wb = &p[self.rhs.clone()];
        let f = |_: f64, x: &[T]| {
            Ok((0..2)
                .map(|i| (T::dot(&wb[2 * i..2 * i + 2], x) + wb[4 + i]).tanh())
                .collect::<Vec<T>>())
        };
        let x0 = [T::cst(0.5), T::cst(-0.3)];
        let traj = solve(f, &self.order.bind(p), &x0, &self.cfg).expect("smooth problem does not diverge");
        let end = traj.last();
        T::dot(end, end) + T::sum(&traj.orders)
    }
}

struct VpObjective {
    net: Mlp,
    order: OrderModel,
    cfg: SolverConfig,
}

impl Objective for VpObjective {
    fn eval<T: Real>(&self, p: &[T]) -> T {
        let u_hat: Vec<T> = (0..=self.cfg.steps)
            .map(|n| self.net.forward(p, &[T::cst(self.cfg.time(n))]).expect("width-1 input")[0])
            .collect();
        let (l_eqn, l_ini, _) = vp_network_residual(&u_hat, &self.order.bind(p), &self.cfg).expect("finite inputs");
        l_eqn + l_ini
    }
}

struct SumObjective;

impl Objective for SumObjective {
    fn eval<T: Real>(&self, p: &[T]) -> T {
        T::sum(p)
    }
}

/// `sin(p₀) + c·p₁` where the `c·p₁` term is cut from the tape.
struct DetachedObjective;

impl Objective for DetachedObjective {
    fn eval<T: Real>(&self, p: &[T]) -> T {
        p[0].sin() + T::cst(0.5 * p[1].value())
    }
}

fn entry(name: impl Into<String>, report: GradCheckReport) -> SuiteEntry {
    SuiteEntry { name: name.into(), report }
}

/// Runs the configured suite. Every check is seeded from `cfg.seed`.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    if cfg.suite == Suite::Empty {
        out.push(entry("empty", grad_check(&SumObjective, &[], cfg.rel_tol)));
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for prim in Primitive::ALL {
        let (obj, params) = PrimitiveObjective::random(prim, 8, &mut rng);
        out.push(entry(format!("primitive/{}", prim.name()), grad_check(&obj, &params, cfg.rel_tol)));
    }

    let mut store = ParamStore::new();
    let net = Mlp::new(&mut store, "net", &[1, DEFAULT_HIDDEN, DEFAULT_HIDDEN, 1], Activation::Tanh, Activation::Identity, &mut rng)?;
    let obj = MlpObjective { net, inputs: vec![0.0, 0.3, 0.9] };
    out.push(entry("mlp/1-30-30-1", grad_check(&obj, store.values(), cfg.rel_tol)));

    for scheme in [Scheme::AbmPredictor, Scheme::L1, Scheme::AbmPredictorCorrector] {
        let mut store = ParamStore::new();
        let order = OrderModel::state_net(
            &mut store,
            "order",
            DEFAULT_EMBED_DIM,
            1.0,
            StateInput::Full { width: 2 },
            DEFAULT_HIDDEN,
            0.7,
            &mut rng,
        )?;
        let rhs_init: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rhs = store.add("rhs", &[6], rhs_init)?.range();
        let solver = SolverConfig::new(0.0, 1.0, cfg.steps, scheme)?;
        let obj = SolverObjective { order, rhs, cfg: solver };
        out.push(entry(
            format!("solver/{}-{}-statenet", scheme, cfg.steps),
            grad_check(&obj, store.values(), cfg.rel_tol),
        ));
    }

    let mut store = ParamStore::new();
    let net = Mlp::new(&mut store, "net", &[1, DEFAULT_HIDDEN, DEFAULT_HIDDEN, 1], Activation::Tanh, Activation::Identity, &mut rng)?;
    let order = OrderModel::grid(&mut store, "order", 0.0, 1.0, crate::order::DEFAULT_KNOTS, 0.8)?;
    for v in &mut store.values_mut()[order.param_range().unwrap_or(0..0)] {
        *v += rng.random_range(-0.5..0.5);
    }
    let vp = VpObjective { net, order, cfg: SolverConfig::new(0.0, 1.0, cfg.steps, Scheme::AbmPredictor)? };
    out.push(entry(format!("vp-residual/{}", cfg.steps), grad_check(&vp, store.values(), cfg.rel_tol)));

    if cfg.inject_faulty_adjoint {
        out.push(entry("negative-control/detached-term", grad_check(&DetachedObjective, &[0.3, 1.2], cfg.rel_tol)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_suite_passes_and_control_fails() {
        let cfg = SuiteConfig { steps: 5, inject_faulty_adjoint: true, ..SuiteConfig::default() };
        let results = run_suite(&cfg).unwrap();
        let (control, rest): (Vec<_>, Vec<_>) = results.iter().partition(|e| e.name.starts_with("negative"));
        for e in rest {
            assert!(e.passed(), "{} max_rel {} at {:?}", e.name, e.report.max_rel, e.report.worst_index);
        }
        assert_eq!(control.len(), 1);
        assert!(!control[0].passed());
        assert_eq!(control[0].report.worst_index, Some(1));
    }

    #[test]
    fn empty_suite_checks_nothing() {
        let r = run_suite(&SuiteConfig { suite: Suite::Empty, ..SuiteConfig::default() }).unwrap();
        assert_eq!(r.iter().map(|e| e.report.checked).sum::<usize>(), 0);
        assert!(r.iter().all(SuiteEntry::passed));
    }
}
