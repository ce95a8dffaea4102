//! Verhulst-Pearl: `D^{α(t)} u = 0.3u(1 − u)`, `u(0) = 0.1`, on `[0, 1]`.
//!
//! A `1→30→30→1` tanh network maps `t` to `û(t)`. The ABM predictor solves
//! the equation on the training grid with the current order model, and the
//! network is fitted to that trajectory while the order parameters receive
//! gradients through the unrolled solver.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Activation, Adam, Mlp, ParamStore, Tape, Tensor};
use crate::error::{Error, Result};
use crate::inverse::LossReport;
use crate::order::{OrderFn, OrderModel, DEFAULT_HIDDEN, DEFAULT_KNOTS};
use crate::scalar::Real;
use crate::solvers::{solve, Scheme, SolverConfig, Trajectory};

pub const VP_U0: f64 = 0.1;
const VP_RATE: f64 = 0.3;
const VP_T1: f64 = 1.0;
const DEFAULT_CHECKPOINTS: [usize; 5] = [200, 500, 1000, 1500, 2000];

/// `0.3 u (1 − u)`.
pub fn vp_rhs<T: Real>(u: T) -> T {
    T::cst(VP_RATE) * u * (T::one() - u)
}

/// Loss of network values `u_hat` (one per grid point, `t_0 = 0` first)
/// against the ABM-predictor solution under `order`:
/// `l_eqn = Σ_{j≥1} (û_j − u_j)²`, `l_ini = N (û_0 − 0.1)²`.
pub fn vp_network_residual<T, O>(u_hat: &[T], order: &O, cfg: &SolverConfig) -> Result<(T, T, Trajectory<T>)>
where
    T: Real,
    O: OrderFn<T> + ?Sized,
{
    if u_hat.len() != cfg.steps + 1 {
        return Err(Error::shape(format!(
            "{} network values for a grid of {} points",
            u_hat.len(),
            cfg.steps + 1
        )));
    }
    if u_hat.iter().any(|v| !v.value().is_finite()) {
        return Err(Error::Numeric("network output is not finite".into()));
    }
    let traj = solve(|_, x: &[T]| Ok(vec![vp_rhs(x[0])]), order, &[T::cst(VP_U0)], cfg)?;
    let diffs: Vec<T> = (1..=cfg.steps)
        .map(|j| {
            let d = u_hat[j] - traj.states[j][0];
            d * d
        })
        .collect();
    let l_eqn = T::sum(&diffs);
    let d0 = u_hat[0] - T::cst(VP_U0);
    let l_ini = T::cst(cfg.steps as f64) * d0 * d0;
    Ok((l_eqn, l_ini, traj))
}

/// Piecewise-linear interpolation on a sorted grid, clamped at the ends.
pub fn interp_linear(times: &[f64], values: &[f64], t: f64) -> f64 {
    let last = times.len() - 1;
    if t <= times[0] {
        return values[0];
    }
    if t >= times[last] {
        return values[last];
    }
    let k = times.partition_point(|&s| s <= t) - 1;
    let w = (t - times[k]) / (times[k + 1] - times[k]);
    values[k] * (1.0 - w) + values[k + 1] * w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderChoice {
    Constant,
    Grid,
    TimeNet,
    StateNet,
}

impl FromStr for OrderChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "constant" => Ok(OrderChoice::Constant),
            "grid" => Ok(OrderChoice::Grid),
            "timenet" => Ok(OrderChoice::TimeNet),
            "statenet" => Ok(OrderChoice::StateNet),
            other => Err(Error::domain(format!(
                "unknown order kind '{other}' (expected constant, grid, timenet or statenet)"
            ))),
        }
    }
}

impl OrderChoice {
    /// Builds the order model, registering its parameters under `"order"`.
    pub fn build(
        self,
        store: &mut ParamStore,
        t0: f64,
        t1: f64,
        init: f64,
        state: Option<crate::order::StateInput>,
        rng: &mut impl Rng,
    ) -> Result<OrderModel> {
        use crate::order::DEFAULT_EMBED_DIM;
        match self {
            OrderChoice::Constant => OrderModel::constant(init),
            OrderChoice::Grid => OrderModel::grid(store, "order", t0, t1, DEFAULT_KNOTS, init),
            OrderChoice::TimeNet => {
                OrderModel::time_net(store, "order", DEFAULT_EMBED_DIM, t1, DEFAULT_HIDDEN, init, rng)
            }
            OrderChoice::StateNet => {
                let input = state.ok_or_else(|| Error::domain("state-dependent order needs a state layout"))?;
                OrderModel::state_net(store, "order", DEFAULT_EMBED_DIM, t1, input, DEFAULT_HIDDEN, init, rng)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VpConfig {
    pub iterations: usize,
    pub j_points: usize,
    pub lr: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub seed: u64,
    pub order_kind: OrderChoice,
    pub order_init: f64,
    pub checkpoints: Vec<usize>,
}

impl Default for VpConfig {
    fn default() -> Self {
        VpConfig {
            iterations: 2000,
            j_points: 40,
            lr: 0.01,
            lambda1: 1.0,
            lambda2: 1.0,
            seed: 0,
            order_kind: OrderChoice::Grid,
            order_init: 0.8,
            checkpoints: DEFAULT_CHECKPOINTS.to_vec(),
        }
    }
}

impl VpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::domain("iterations must be at least 1"));
        }
        if self.j_points < 2 {
            return Err(Error::domain("j_points must be at least 2"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::domain("learning rate must be positive"));
        }
        if !(self.lambda1 > 0.0 && self.lambda2 > 0.0) {
            return Err(Error::domain("loss weights must be positive"));
        }
        crate::frac_core::validate_order(self.order_init)
    }

    /// Iterations at which test losses are recorded: the configured ones up
    /// to `iterations`, plus the final iteration.
    pub fn checkpoint_iterations(&self) -> Vec<usize> {
        let mut cps: Vec<usize> = self.checkpoints.iter().copied().filter(|&c| c >= 1 && c <= self.iterations).collect();
        cps.push(self.iterations);
        cps.sort_unstable();
        cps.dedup();
        cps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VpCheckpoint {
    pub iteration: usize,
    pub train: LossReport,
    pub test: LossReport,
}

#[derive(Debug, Clone)]
pub struct VpOutcome {
    /// Training losses, one per iteration, computed before that iteration's update.
    pub history: Vec<LossReport>,
    pub checkpoints: Vec<VpCheckpoint>,
    /// Test losses after the last update, with the learned `α(t)` trace.
    pub final_test: LossReport,
    pub initial_alpha_trace: Vec<(f64, f64)>,
    pub store: ParamStore,
    pub net: Mlp,
    pub order: OrderModel,
    pub solver: SolverConfig,
}

impl VpOutcome {
    pub fn checkpoint(&self, iteration: usize) -> Option<&VpCheckpoint> {
        self.checkpoints.iter().find(|c| c.iteration == iteration)
    }

    /// Network prediction at `t` under the trained parameters.
    pub fn predict(&self, t: f64) -> Result<f64> {
        Ok(self.net.forward(self.store.values(), &[t])?[0])
    }
}

struct VpModel<'a> {
    net: &'a Mlp,
    order: &'a OrderModel,
    cfg: &'a SolverConfig,
    grid: Tensor<f64>,
    lambda1: f64,
    lambda2: f64,
}

impl VpModel<'_> {
    fn losses<T: Real>(&self, params: &[T]) -> Result<(T, T, T, Trajectory<T>)> {
        let u_hat = self.net.forward_batch(params, &Tensor::lift(&self.grid))?.into_data();
        let (l_eqn, l_ini, traj) = vp_network_residual(&u_hat, &self.order.bind(params), self.cfg)?;
        let total = T::cst(self.lambda1) * l_eqn + T::cst(self.lambda2) * l_ini;
        Ok((l_eqn, l_ini, total, traj))
    }

    /// Losses on random test points against the interpolated solver path.
    fn test_report(&self, params: &[f64], test_points: &[f64], iteration: usize) -> Result<LossReport> {
        let (_, _, _, traj) = self.losses(params)?;
        let path: Vec<f64> = traj.states.iter().map(|x| x[0]).collect();
        let mut l_eqn = 0.0;
        for &t in test_points {
            let d = self.net.forward(params, &[t])?[0] - interp_linear(&traj.times, &path, t);
            l_eqn += d * d;
        }
        let d0 = self.net.forward(params, &[0.0])?[0] - VP_U0;
        let l_ini = test_points.len() as f64 * d0 * d0;
        let mut report = LossReport::new(iteration, l_eqn, l_ini, self.lambda1, self.lambda2);
        report.learned_alpha_trace = self.order.order_trace(params, &traj)?;
        Ok(report)
    }
}

/// Trains the network and order model jointly with Adam.
pub fn train_vp(config: &VpConfig) -> Result<VpOutcome> {
    config.validate()?;
    let j = config.j_points;
    let solver = SolverConfig::new(0.0, VP_T1, j, Scheme::AbmPredictor)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut store = ParamStore::new();
    let net = Mlp::new(&mut store, "net", &[1, DEFAULT_HIDDEN, DEFAULT_HIDDEN, 1], Activation::Tanh, Activation::Identity, &mut rng)?;
    let order = config.order_kind.build(
        &mut store,
        0.0,
        VP_T1,
        config.order_init,
        Some(crate::order::StateInput::Full { width: 1 }),
        &mut rng,
    )?;
    let test_points: Vec<f64> = (0..j).map(|_| rng.random::<f64>()).collect();
    let model = VpModel {
        net: &net,
        order: &order,
        cfg: &solver,
        grid: Tensor::matrix(j + 1, 1, (0..=j).map(|n| solver.time(n)).collect())?,
        lambda1: config.lambda1,
        lambda2: config.lambda2,
    };

    let initial_alpha_trace = {
        let (_, _, _, traj) = model.losses(store.values())?;
        order.order_trace(store.values(), &traj)?
    };
    let checkpoints_at = config.checkpoint_iterations();
    let mut adam = Adam::new(store.len(), config.lr);
    let mut history: Vec<LossReport> = Vec::with_capacity(config.iterations);
    let mut checkpoints = Vec::with_capacity(checkpoints_at.len());
    let fail = |iteration: usize, reason: String, history: &[LossReport]| Error::Training {
        iteration,
        reason,
        last_report: history.last().cloned().map(Box::new),
    };

    for it in 1..=config.iterations {
        let (report, grads) = {
            let tape = Tape::new();
            let vars = tape.vars(store.values());
            let (l_eqn, l_ini, total, _) = model.losses(&vars).map_err(|e| fail(it, e.to_string(), &history))?;
            let report = LossReport {
                iteration: it,
                l_eqn: l_eqn.value(),
                l_ini: l_ini.value(),
                l_total: total.value(),
                learned_alpha_trace: Vec::new(),
            };
            (report, tape.gradient(total).wrt_all(&vars))
        };
        if !report.is_finite() {
            return Err(fail(it, "loss is not finite".into(), &history));
        }
        adam.step(store.values_mut(), &grads).map_err(|e| fail(it, e.to_string(), &history))?;
        history.push(report);
        if checkpoints_at.contains(&it) {
            let test = model
                .test_report(store.values(), &test_points, it)
                .map_err(|e| fail(it, e.to_string(), &history))?;
            let (l_eqn, l_ini, _, _) = model.losses(store.values())?;
            let train = LossReport::new(it, l_eqn, l_ini, config.lambda1, config.lambda2);
            log::info!("vp iter {it}: train {:.3e} test {:.3e}", train.l_total, test.l_total);
            checkpoints.push(VpCheckpoint { iteration: it, train, test });
        }
    }
    let final_test = checkpoints
        .last()
        .map(|c| c.test.clone())
        .ok_or_else(|| Error::domain("no checkpoint was recorded"))?;
    Ok(VpOutcome {
        history,
        checkpoints,
        final_test,
        initial_alpha_trace,
        store,
        net,
        order,
        solver,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_fixed_points() {
        assert_eq!(vp_rhs(0.0), 0.0);
        assert_eq!(vp_rhs(1.0), 0.0);
        assert!((vp_rhs(0.1) - 0.027).abs() < 1e-15);
    }

    #[test]
    fn residual_against_hand_euler() {
        let cfg = SolverConfig::new(0.0, 1.0, 10, Scheme::AbmPredictor).unwrap();
        let one = OrderModel::constant(1.0).unwrap();
        let u_hat = vec![0.1; 11];
        let (l_eqn, l_ini, _) = vp_network_residual(&u_hat, &one.bind(&[]), &cfg).unwrap();
        let mut x: f64 = 0.1;
        let mut want = 0.0;
        for _ in 0..10 {
            x += 0.1 * (0.3 * x - 0.3 * x * x);
            want += (0.1 - x) * (0.1 - x);
        }
        assert!((l_eqn - want).abs() < 1e-15);
        assert_eq!(l_ini, 0.0);
    }

    #[test]
    fn perfect_fit_has_zero_loss() {
        let cfg = SolverConfig::new(0.0, 1.0, 12, Scheme::AbmPredictor).unwrap();
        let order = OrderModel::constant(0.7).unwrap();
        let (_, _, traj) = vp_network_residual(&[0.0; 13], &order.bind(&[]), &cfg).unwrap();
        let exact: Vec<f64> = traj.states.iter().map(|x| x[0]).collect();
        let (a, b, _) = vp_network_residual(&exact, &order.bind(&[]), &cfg).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
        assert!(vp_network_residual(&[0.0; 5], &order.bind(&[]), &cfg).is_err());
    }

    #[test]
    fn interpolation() {
        let t = [0.0, 1.0, 2.0];
        let v = [0.0, 10.0, 0.0];
        assert_eq!(interp_linear(&t, &v, 0.25), 2.5);
        assert_eq!(interp_linear(&t, &v, 1.5), 5.0);
        assert_eq!(interp_linear(&t, &v, -1.0), 0.0);
        assert_eq!(interp_linear(&t, &v, 3.0), 0.0);
    }

    #[test]
    fn short_run_reports_and_decomposes() {
        let cfg = VpConfig { iterations: 30, j_points: 10, checkpoints: vec![10, 20], ..VpConfig::default() };
        let out = train_vp(&cfg).unwrap();
        assert_eq!(out.history.len(), 30);
        assert_eq!(out.checkpoints.iter().map(|c| c.iteration).collect::<Vec<_>>(), vec![10, 20, 30]);
        for r in out.history.iter().chain(out.checkpoints.iter().map(|c| &c.test)) {
            assert_eq!(r.l_total, cfg.lambda1 * r.l_eqn + cfg.lambda2 * r.l_ini);
        }
        assert_eq!(out.final_test.learned_alpha_trace.len(), 11);
        assert!((out.initial_alpha_trace[0].1 - 0.8).abs() < 1e-9);
        let again = train_vp(&cfg).unwrap();
        assert_eq!(again.store.values(), out.store.values());
    }

    #[test]
    fn config_checks() {
        assert!(VpConfig { iterations: 0, ..VpConfig::default() }.validate().is_err());
        assert!(VpConfig { lr: -1.0, ..VpConfig::default() }.validate().is_err());
        let c = VpConfig { iterations: 700, ..VpConfig::default() };
        assert_eq!(c.checkpoint_iterations(), vec![200, 500, 700]);
        assert_eq!("StateNet".parse::<OrderChoice>().unwrap(), OrderChoice::StateNet);
    }
}
