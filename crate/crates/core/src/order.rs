//! Fractional-order functions `α(t, x)` with values in `[ε, 1]`.
//!
//! Four families: a fixed constant, learnable knot values interpolated in
//! time, a network on a sinusoidal time embedding, and a network on the time
//! embedding concatenated with the state. Learnable outputs are squashed by
//! `ε + (1 − ε)·sigmoid(·)`.

use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use crate::autodiff::{real_value, Activation, Mlp, ParamSlot, ParamStore};
use crate::error::{Error, Result};
use crate::frac_core::validate_order;
use crate::scalar::Real;
use crate::solvers::Trajectory;

pub const DEFAULT_FLOOR: f64 = 1e-3;
pub const DEFAULT_KNOTS: usize = 11;
pub const DEFAULT_HIDDEN: usize = 30;
pub const DEFAULT_EMBED_DIM: usize = 8;

/// Sinusoidal time features `(sin(t/ω_k), cos(t/ω_k))` with
/// `ω_k = t_max^{2k/dim}`.
pub fn sinusoidal_embed(t: f64, dim: usize, t_max: f64) -> Result<Vec<f64>> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::shape(format!("embedding width {dim} must be even and positive")));
    }
    let mut out = Vec::with_capacity(dim);
    for k in 0..dim / 2 {
        let omega = t_max.powf(2.0 * k as f64 / dim as f64);
        let arg = t / omega;
        out.push(arg.sin());
        out.push(arg.cos());
    }
    Ok(out)
}

/// How a state-dependent order reads the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateInput {
    /// The state is used as-is.
    Full { width: usize },
    /// The state is a row-major `rows x cols` matrix; its row mean feeds
    /// the network so one scalar order serves the whole matrix.
    RowMean { rows: usize, cols: usize },
}

impl StateInput {
    fn state_len(&self) -> usize {
        match *self {
            StateInput::Full { width } => width,
            StateInput::RowMean { rows, cols } => rows * cols,
        }
    }

    fn feature_width(&self) -> usize {
        match *self {
            StateInput::Full { width } => width,
            StateInput::RowMean { cols, .. } => cols,
        }
    }

    fn features<T: Real>(&self, x: &[T]) -> Vec<T> {
        match *self {
            StateInput::Full { .. } => x.to_vec(),
            StateInput::RowMean { rows, cols } => {
                let inv = T::cst(1.0 / rows as f64);
                let mut column = Vec::with_capacity(rows);
                (0..cols)
                    .map(|c| {
                        column.clear();
                        column.extend((0..rows).map(|r| x[r * cols + c]));
                        T::sum(&column) * inv
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrderKind {
    Constant(f64),
    GridInterp {
        knots: Vec<f64>,
        values: ParamSlot,
    },
    TimeNet {
        embed_dim: usize,
        t_max: f64,
        net: Mlp,
    },
    StateNet {
        embed_dim: usize,
        t_max: f64,
        input: StateInput,
        net: Mlp,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderModel {
    kind: OrderKind,
    floor: f64,
}

/// Inverse of the squashing map: the raw value whose squashed output is `alpha`.
pub fn raw_for_order(alpha: f64, floor: f64) -> Result<f64> {
    if !(alpha > floor && alpha < 1.0) {
        return Err(Error::domain(format!(
            "initial order {alpha} must lie strictly inside ({floor}, 1)"
        )));
    }
    let p = (alpha - floor) / (1.0 - floor);
    Ok((p / (1.0 - p)).ln())
}

#[inline]
fn squash<T: Real>(raw: T, floor: f64) -> T {
    T::cst(floor) + T::cst(1.0 - floor) * raw.sigmoid()
}

impl OrderModel {
    pub fn constant(alpha: f64) -> Result<Self> {
        validate_order(alpha)?;
        Ok(OrderModel {
            kind: OrderKind::Constant(alpha),
            floor: DEFAULT_FLOOR,
        })
    }

    /// Learnable values on `n_knots` uniform knots over `[t0, t1]`, all
    /// initialised so the order starts at `init`.
    pub fn grid(
        store: &mut ParamStore,
        name: &str,
        t0: f64,
        t1: f64,
        n_knots: usize,
        init: f64,
    ) -> Result<Self> {
        if n_knots < 2 || !(t1 > t0) {
            return Err(Error::domain("grid order needs at least two knots on t0 < t1"));
        }
        let raw = raw_for_order(init, DEFAULT_FLOOR)?;
        let knots = (0..n_knots)
            .map(|k| t0 + (t1 - t0) * k as f64 / (n_knots - 1) as f64)
            .collect();
        let values = store.add(name, &[n_knots], vec![raw; n_knots])?;
        Ok(OrderModel {
            kind: OrderKind::GridInterp { knots, values },
            floor: DEFAULT_FLOOR,
        })
    }

    /// `sigmoid(MLP(embed(t)))`, hidden layer of `hidden` tanh units.
    pub fn time_net(
        store: &mut ParamStore,
        name: &str,
        embed_dim: usize,
        t_max: f64,
        hidden: usize,
        init: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        sinusoidal_embed(0.0, embed_dim, t_max)?;
        let net = Mlp::new(store, name, &[embed_dim, hidden, 1], Activation::Tanh, Activation::Identity, rng)?;
        let model = OrderModel {
            kind: OrderKind::TimeNet { embed_dim, t_max, net },
            floor: DEFAULT_FLOOR,
        };
        model.shift_output(store, init)?;
        Ok(model)
    }

    /// `sigmoid(MLP([embed(t), features(x)]))`.
    #[allow(clippy::too_many_arguments)]
    pub fn state_net(
        store: &mut ParamStore,
        name: &str,
        embed_dim: usize,
        t_max: f64,
        input: StateInput,
        hidden: usize,
        init: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        sinusoidal_embed(0.0, embed_dim, t_max)?;
        let width = embed_dim + input.feature_width();
        let net = Mlp::new(store, name, &[width, hidden, 1], Activation::Tanh, Activation::Identity, rng)?;
        let model = OrderModel {
            kind: OrderKind::StateNet { embed_dim, t_max, input, net },
            floor: DEFAULT_FLOOR,
        };
        model.shift_output(store, init)?;
        Ok(model)
    }

    fn shift_output(&self, store: &mut ParamStore, init: f64) -> Result<()> {
        let raw = raw_for_order(init, self.floor)?;
        let net = match &self.kind {
            OrderKind::TimeNet { net, .. } | OrderKind::StateNet { net, .. } => net,
            _ => return Ok(()),
        };
        let bias = net.output_bias();
        store.values_mut()[bias.range()].fill(raw);
        Ok(())
    }

    pub fn kind(&self) -> &OrderKind {
        &self.kind
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, OrderKind::Constant(_))
    }

    /// The block of the parameter vector this model reads, if any.
    pub fn param_range(&self) -> Option<std::ops::Range<usize>> {
        match &self.kind {
            OrderKind::Constant(_) => None,
            OrderKind::GridInterp { values, .. } => Some(values.range()),
            OrderKind::TimeNet { net, .. } | OrderKind::StateNet { net, .. } => Some(net.param_range()),
        }
    }

    /// Number of state entries expected, if the model reads the state.
    pub fn state_len(&self) -> Option<usize> {
        match &self.kind {
            OrderKind::StateNet { input, .. } => Some(input.state_len()),
            _ => None,
        }
    }

    /// `α(t, x)`.
    pub fn eval_order<T: Real>(&self, params: &[T], t: f64, x: &[T]) -> Result<T> {
        match &self.kind {
            OrderKind::Constant(a) => Ok(T::cst(*a)),
            OrderKind::GridInterp { knots, values } => {
                let v = values.view(params);
                let last = knots.len() - 1;
                let (k, w) = if t <= knots[0] {
                    (0, 0.0)
                } else if t >= knots[last] {
                    (last - 1, 1.0)
                } else {
                    let k = knots.partition_point(|&kt| kt <= t) - 1;
                    (k, (t - knots[k]) / (knots[k + 1] - knots[k]))
                };
                let a = squash(v[k], self.floor);
                let b = squash(v[k + 1], self.floor);
                if w == 0.0 {
                    Ok(a)
                } else if w == 1.0 {
                    Ok(b)
                } else {
                    Ok(a * T::cst(1.0 - w) + b * T::cst(w))
                }
            }
            OrderKind::TimeNet { embed_dim, t_max, net } => {
                let feats: Vec<T> = sinusoidal_embed(t, *embed_dim, *t_max)?
                    .into_iter()
                    .map(T::cst)
                    .collect();
                Ok(squash(net.forward(params, &feats)?[0], self.floor))
            }
            OrderKind::StateNet { embed_dim, t_max, input, net } => {
                if x.len() != input.state_len() {
                    return Err(Error::shape(format!(
                        "state-dependent order expects {} state entries, got {}",
                        input.state_len(),
                        x.len()
                    )));
                }
                let mut feats: Vec<T> = sinusoidal_embed(t, *embed_dim, *t_max)?
                    .into_iter()
                    .map(T::cst)
                    .collect();
                feats.extend(input.features(x));
                Ok(squash(net.forward(params, &feats)?[0], self.floor))
            }
        }
    }

    pub fn bind<'a, T>(&'a self, params: &'a [T]) -> BoundOrder<'a, T> {
        BoundOrder { model: self, params }
    }

    /// `(t_n, α(t_n, x_n))` at every grid point of a trajectory.
    pub fn order_trace(&self, params: &[f64], trajectory: &Trajectory<f64>) -> Result<Vec<(f64, f64)>> {
        if trajectory.times.is_empty() {
            return Err(Error::domain("order trace of an empty trajectory"));
        }
        trajectory
            .times
            .iter()
            .zip(&trajectory.states)
            .map(|(&t, x)| Ok((t, self.eval_order(params, t, x)?)))
            .collect()
    }

    /// Self-contained JSON description: kind tag, layout, and the raw
    /// parameters this model reads.
    pub fn to_json(&self, params: &[f64]) -> Value {
        let raw: Vec<Value> = self
            .param_range()
            .map(|r| params[r].iter().map(|&x| real_value(x)).collect())
            .unwrap_or_default();
        match &self.kind {
            OrderKind::Constant(a) => json!({"kind": "constant", "value": real_value(*a)}),
            OrderKind::GridInterp { knots, .. } => json!({
                "kind": "grid",
                "floor": self.floor,
                "knots": knots.iter().map(|&k| real_value(k)).collect::<Vec<_>>(),
                "params": raw,
            }),
            OrderKind::TimeNet { embed_dim, t_max, net } => json!({
                "kind": "timenet",
                "floor": self.floor,
                "embed_dim": embed_dim,
                "t_max": real_value(*t_max),
                "hidden": hidden_width(net),
                "params": raw,
            }),
            OrderKind::StateNet { embed_dim, t_max, input, net } => {
                let input = match input {
                    StateInput::Full { width } => json!({"full": width}),
                    StateInput::RowMean { rows, cols } => json!({"row_mean": [rows, cols]}),
                };
                json!({
                    "kind": "statenet",
                    "floor": self.floor,
                    "embed_dim": embed_dim,
                    "t_max": real_value(*t_max),
                    "input": input,
                    "hidden": hidden_width(net),
                    "params": raw,
                })
            }
        }
    }

    /// Rebuilds a model from [`OrderModel::to_json`] output together with
    /// a store holding exactly its parameters.
    pub fn from_json(json: &Value) -> Result<(OrderModel, ParamStore)> {
        let bad = |what: &str| Error::Format(format!("order checkpoint: {what}"));
        let kind = json.get("kind").and_then(Value::as_str).ok_or_else(|| bad("missing kind"))?;
        let num = |key: &str| json.get(key).and_then(Value::as_f64).ok_or_else(|| bad(key));
        let int = |key: &str| json.get(key).and_then(Value::as_u64).map(|v| v as usize).ok_or_else(|| bad(key));
        let raw: Vec<f64> = match json.get("params") {
            Some(Value::Array(a)) => a.iter().map(|v| v.as_f64().ok_or_else(|| bad("params"))).collect::<Result<_>>()?,
            _ => Vec::new(),
        };
        let mut store = ParamStore::new();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let model = match kind {
            "constant" => OrderModel::constant(num("value")?)?,
            "grid" => {
                let knots: Vec<f64> = json
                    .get("knots")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("knots"))?
                    .iter()
                    .map(|v| v.as_f64().ok_or_else(|| bad("knots")))
                    .collect::<Result<_>>()?;
                if knots.len() < 2 || knots.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(bad("knots must be strictly increasing"));
                }
                let values = store.add("order", &[knots.len()], vec![0.0; knots.len()])?;
                OrderModel {
                    kind: OrderKind::GridInterp { knots, values },
                    floor: num("floor")?,
                }
            }
            "timenet" => {
                let (embed_dim, t_max, hidden) = (int("embed_dim")?, num("t_max")?, int("hidden")?);
                let mut m = OrderModel::time_net(&mut store, "order", embed_dim, t_max, hidden, 0.5, &mut rng)?;
                m.floor = num("floor")?;
                m
            }
            "statenet" => {
                let (embed_dim, t_max, hidden) = (int("embed_dim")?, num("t_max")?, int("hidden")?);
                let spec = json.get("input").ok_or_else(|| bad("input"))?;
                let input = if let Some(w) = spec.get("full").and_then(Value::as_u64) {
                    StateInput::Full { width: w as usize }
                } else {
                    let rc = spec.get("row_mean").and_then(Value::as_array).ok_or_else(|| bad("input"))?;
                    let dims: Vec<usize> = rc.iter().filter_map(Value::as_u64).map(|v| v as usize).collect();
                    if dims.len() != 2 {
                        return Err(bad("input"));
                    }
                    StateInput::RowMean { rows: dims[0], cols: dims[1] }
                };
                let mut m = OrderModel::state_net(&mut store, "order", embed_dim, t_max, input, hidden, 0.5, &mut rng)?;
                m.floor = num("floor")?;
                m
            }
            other => return Err(bad(&format!("unknown kind {other}"))),
        };
        if raw.len() != store.len() {
            return Err(bad("parameter count does not match layout"));
        }
        store.set_values(&raw)?;
        Ok((model, store))
    }
}

fn hidden_width(net: &Mlp) -> usize {
    // [in, hidden, 1] has (in + 2) * hidden + 1 parameters.
    (net.param_range().len() - 1) / (net.input_width() + 2)
}

/// Anything that yields the order for a step.
pub trait OrderFn<T> {
    fn order_at(&self, t: f64, x: &[T]) -> Result<T>;
}

/// An [`OrderModel`] paired with the parameter slice it reads.
#[derive(Debug, Clone, Copy)]
pub struct BoundOrder<'a, T> {
    pub model: &'a OrderModel,
    pub params: &'a [T],
}

impl<T: Real> OrderFn<T> for BoundOrder<'_, T> {
    fn order_at(&self, t: f64, x: &[T]) -> Result<T> {
        self.model.eval_order(self.params, t, x)
    }
}

impl<T, F: Fn(f64, &[T]) -> T> OrderFn<T> for F {
    fn order_at(&self, t: f64, x: &[T]) -> Result<T> {
        Ok(self(t, x))
    }
}
