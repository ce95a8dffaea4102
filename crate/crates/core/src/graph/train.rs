use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{glorot_bound, Activation, Adam, Mlp, ParamSlot, ParamStore, Tape, Tensor};
use crate::error::{Error, Result};
use crate::graph::{grand_l_rhs, grand_nl_rhs, laplacian, normalized_operator, GraphSpec, SparseMatrix, Split};
use crate::inverse::OrderChoice;
use crate::order::{OrderModel, StateInput};
use crate::scalar::Real;
use crate::solvers::{solve, Scheme, SolverConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dynamics {
    /// `D^α Y = −L Y`.
    #[serde(rename = "grand_l")]
    Linear,
    /// `D^α Y = (A(Y) − I) Y`.
    #[serde(rename = "grand_nl")]
    Attention,
}

impl std::str::FromStr for Dynamics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "grand_l" | "linear" => Ok(Dynamics::Linear),
            "grand_nl" | "attention" => Ok(Dynamics::Attention),
            other => Err(Error::domain(format!("unknown dynamics '{other}' (expected grand_l or grand_nl)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnnConfig {
    pub dynamics: Dynamics,
    pub order_kind: OrderChoice,
    pub order_init: f64,
    pub t_end: f64,
    pub steps: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for GnnConfig {
    fn default() -> Self {
        GnnConfig {
            dynamics: Dynamics::Linear,
            order_kind: OrderChoice::Grid,
            order_init: 0.8,
            t_end: 3.0,
            steps: 8,
            hidden: 16,
            epochs: 200,
            lr: 0.01,
            patience: 50,
            seed: 0,
        }
    }
}

impl GnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.epochs == 0 || self.patience == 0 {
            return Err(Error::domain("hidden, epochs and patience must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::domain("learning rate must be positive"));
        }
        crate::frac_core::validate_order(self.order_init)?;
        SolverConfig::new(0.0, self.t_end, self.steps, Scheme::AbmPredictor)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GnnReport {
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    /// Epoch (1-based) whose parameters scored best on validation.
    pub best_epoch: usize,
    pub epochs_run: usize,
    /// `(t_n, α_n)` of the best epoch's forward solve.
    pub order_trace: Vec<(f64, f64)>,
    pub initial_order_trace: Vec<(f64, f64)>,
    pub loss_history: Vec<f64>,
    #[serde(skip)]
    pub best_params: Vec<f64>,
}

/// Mean softmax cross-entropy over `nodes` of a `n × classes` logit matrix.
pub fn cross_entropy<T: Real>(logits: &Tensor<T>, labels: &[usize], nodes: &[usize]) -> Result<T> {
    if nodes.is_empty() {
        return Err(Error::domain("cross-entropy over an empty node set"));
    }
    let mut terms = Vec::with_capacity(nodes.len());
    for &i in nodes {
        let row = logits.row(i);
        let y = labels[i];
        if y >= row.len() {
            return Err(Error::shape(format!("label {y} outside {} classes", row.len())));
        }
        let shift = row.iter().map(|l| l.value()).fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<T> = row.iter().map(|&l| (l - T::cst(shift)).exp()).collect();
        terms.push(T::cst(shift) + T::sum(&exps).ln() - row[y]);
    }
    Ok(T::sum(&terms) * T::cst(1.0 / nodes.len() as f64))
}

fn accuracy(logits: &Tensor<f64>, labels: &[usize], nodes: &[usize]) -> f64 {
    let correct = nodes
        .iter()
        .filter(|&&i| {
            let row = logits.row(i);
            let best = (0..row.len()).fold(0, |b, k| if row[k] > row[b] { k } else { b });
            best == labels[i]
        })
        .count();
    correct as f64 / nodes.len() as f64
}

struct GnnModel<'a> {
    graph: &'a GraphSpec,
    dynamics: Dynamics,
    operator: SparseMatrix,
    encoder: Mlp,
    decoder: Mlp,
    attention: Option<(ParamSlot, ParamSlot)>,
    order: OrderModel,
    solver: SolverConfig,
    hidden: usize,
}

impl GnnModel<'_> {
    fn forward<T: Real>(&self, params: &[T]) -> Result<(Tensor<T>, Trajectory<T>)> {
        let n = self.graph.n_nodes;
        let h = self.hidden;
        let y0 = self.encoder.forward_batch(params, &Tensor::lift(&self.graph.features))?.into_data();
        let order = self.order.bind(params);
        let traj = match (self.dynamics, &self.attention) {
            (Dynamics::Linear, _) => solve(|_, y: &[T]| grand_l_rhs(&self.operator, y, h), &order, &y0, &self.solver)?,
            (Dynamics::Attention, Some((wk, wq))) => {
                let wk = Tensor::matrix(h, h, wk.view(params).to_vec())?;
                let wq = Tensor::matrix(h, h, wq.view(params).to_vec())?;
                let rhs = |_: f64, y: &[T]| grand_nl_rhs(&self.operator, &Tensor::matrix(n, h, y.to_vec())?, &wk, &wq);
                solve(rhs, &order, &y0, &self.solver)?
            }
            (Dynamics::Attention, None) => return Err(Error::domain("attention dynamics without attention weights")),
        };
        let y_end = Tensor::matrix(n, h, traj.last().to_vec())?;
        Ok((self.decoder.forward_batch(params, &y_end)?, traj))
    }
}

fn trace(traj: &Trajectory<f64>) -> Vec<(f64, f64)> {
    traj.times.iter().copied().zip(traj.orders.iter().copied()).collect()
}

/// Encoder → fractional graph dynamics (ABM predictor) → decoder, trained
/// with Adam on the train split and early-stopped on validation accuracy
/// (ties broken by validation loss).
pub fn train_node_classifier(graph: &GraphSpec, cfg: &GnnConfig) -> Result<GnnReport> {
    cfg.validate()?;
    let train = graph.nodes_in(Split::Train);
    let val = graph.nodes_in(Split::Val);
    let test = graph.nodes_in(Split::Test);
    if train.is_empty() || val.is_empty() || test.is_empty() {
        return Err(Error::domain("train, val and test splits must all be non-empty"));
    }
    if graph.n_classes < 2 {
        return Err(Error::domain("node classification needs at least two classes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut store = ParamStore::new();
    let h = cfg.hidden;
    let encoder = Mlp::new(&mut store, "encoder", &[graph.feature_dim(), h], Activation::Identity, Activation::Identity, &mut rng)?;
    let decoder = Mlp::new(&mut store, "decoder", &[h, graph.n_classes], Activation::Identity, Activation::Identity, &mut rng)?;
    let attention = match cfg.dynamics {
        Dynamics::Linear => None,
        Dynamics::Attention => {
            let bound = glorot_bound(h, h);
            let mut draw = |name: &str, rng: &mut ChaCha8Rng| {
                let vals = (0..h * h).map(|_| rng.random_range(-bound..bound)).collect();
                store.add(name, &[h, h], vals)
            };
            Some((draw("attention.key", &mut rng)?, draw("attention.query", &mut rng)?))
        }
    };
    let state = StateInput::RowMean { rows: graph.n_nodes, cols: h };
    let order = cfg.order_kind.build(&mut store, 0.0, cfg.t_end, cfg.order_init, Some(state), &mut rng)?;
    let operator = match cfg.dynamics {
        Dynamics::Linear => laplacian(graph)?,
        Dynamics::Attention => normalized_operator(graph)?,
    };
    let model = GnnModel {
        graph,
        dynamics: cfg.dynamics,
        operator,
        encoder,
        decoder,
        attention,
        order,
        solver: SolverConfig::new(0.0, cfg.t_end, cfg.steps, Scheme::AbmPredictor)?,
        hidden: h,
    };

    let initial_order_trace = trace(&model.forward(store.values())?.1);
    let mut adam = Adam::new(store.len(), cfg.lr);
    let mut loss_history = Vec::new();
    let mut best: Option<(f64, f64, GnnReport)> = None;
    let mut since_best = 0;
    for epoch in 1..=cfg.epochs {
        let fail = |reason: String| Error::Training { iteration: epoch, reason, last_report: None };
        let (loss, grads, logits, traj) = {
            let tape = Tape::new();
            let vars = tape.vars(store.values());
            let (logits, traj) = model.forward(&vars).map_err(|e| match e {
                Error::Divergence { .. } => e,
                other => fail(other.to_string()),
            })?;
            let loss = cross_entropy(&logits, &graph.labels, &train)?;
            (loss.value(), tape.gradient(loss).wrt_all(&vars), logits.values(), traj.values())
        };
        if !loss.is_finite() {
            return Err(fail("training loss is not finite".into()));
        }
        loss_history.push(loss);
        let val_acc = accuracy(&logits, &graph.labels, &val);
        let val_loss = cross_entropy(&logits, &graph.labels, &val)?;
        let improved = match &best {
            None => true,
            Some((acc, vloss, _)) => val_acc > *acc || (val_acc == *acc && val_loss < *vloss),
        };
        if improved {
            since_best = 0;
            let report = GnnReport {
                train_accuracy: accuracy(&logits, &graph.labels, &train),
                val_accuracy: val_acc,
                test_accuracy: accuracy(&logits, &graph.labels, &test),
                best_epoch: epoch,
                epochs_run: epoch,
                order_trace: trace(&traj),
                initial_order_trace: Vec::new(),
                loss_history: Vec::new(),
                best_params: store.values().to_vec(),
            };
            best = Some((val_acc, val_loss, report));
        } else {
            since_best += 1;
        }
        adam.step(store.values_mut(), &grads).map_err(|e| fail(e.to_string()))?;
        if since_best >= cfg.patience {
            log::info!("early stop at epoch {epoch}");
            break;
        }
    }
    let (_, _, mut report) = best.ok_or_else(|| Error::domain("no epoch was run"))?;
    report.epochs_run = loss_history.len();
    report.initial_order_trace = initial_order_trace;
    report.loss_history = loss_history;
    Ok(report)
}
