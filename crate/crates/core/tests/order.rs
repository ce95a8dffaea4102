use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use vofde::autodiff::{grad_check, Objective};
use vofde::order::{raw_for_order, StateInput, DEFAULT_EMBED_DIM, DEFAULT_FLOOR, DEFAULT_HIDDEN};
use vofde::solvers::solve;
use vofde::{OrderModel, ParamStore, Real, Scheme, SolverConfig};

fn models(rng: &mut ChaCha8Rng) -> Vec<(OrderModel, ParamStore)> {
    let mut out = Vec::new();
    let mut store = ParamStore::new();
    out.push((OrderModel::grid(&mut store, "g", 0.0, 2.0, 11, 0.8).unwrap(), store));
    let mut store = ParamStore::new();
    out.push((OrderModel::time_net(&mut store, "tn", DEFAULT_EMBED_DIM, 2.0, DEFAULT_HIDDEN, 0.5, rng).unwrap(), store));
    let mut store = ParamStore::new();
    let input = StateInput::Full { width: 3 };
    out.push((OrderModel::state_net(&mut store, "sn", DEFAULT_EMBED_DIM, 2.0, input, DEFAULT_HIDDEN, 0.3, rng).unwrap(), store));
    out
}

#[test]
fn orders_stay_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let wide = Normal::new(0.0, 8.0).unwrap();
    for (model, store) in models(&mut rng) {
        for _ in 0..10_000 {
            let params: Vec<f64> = store.values().iter().map(|p| p + wide.sample(&mut rng)).collect();
            let t = rng.random_range(-1.0..3.0);
            let x: Vec<f64> = (0..3).map(|_| wide.sample(&mut rng) * 10.0).collect();
            let a = model.eval_order(&params, t, &x).unwrap();
            assert!((DEFAULT_FLOOR..=1.0).contains(&a), "{:?} gave {a}", model.kind());
        }
    }
}

struct OrderObjective<'a> {
    model: &'a OrderModel,
    points: Vec<(f64, Vec<f64>)>,
}

impl Objective for OrderObjective<'_> {
    fn eval<T: Real>(&self, params: &[T]) -> T {
        let vals: Vec<T> = self
            .points
            .iter()
            .map(|(t, x)| {
                let x: Vec<T> = x.iter().map(|&v| T::cst(v)).collect();
                self.model.eval_order(params, *t, &x).unwrap()
            })
            .collect();
        T::sum(&vals)
    }
}

#[test]
fn order_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (model, store) in models(&mut rng) {
        let points = (0..5).map(|k| (0.13 + 0.37 * k as f64, vec![0.2, -0.4, 0.9 - 0.1 * k as f64])).collect();
        let report = grad_check(&OrderObjective { model: &model, points }, store.values(), 1e-4);
        assert!(report.passed(), "{:?}: {report:?}", model.kind());
    }
}

#[test]
fn checkpoint_restores_identical_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut store = ParamStore::new();
    let input = StateInput::Full { width: 1 };
    let model = OrderModel::state_net(&mut store, "sn", DEFAULT_EMBED_DIM, 1.0, input, DEFAULT_HIDDEN, 0.7, &mut rng).unwrap();
    let cfg = SolverConfig::new(0.0, 1.0, 40, Scheme::AbmPredictor).unwrap();
    let traj = solve(|_, x: &[f64]| Ok(vec![0.3 * x[0] * (1.0 - x[0])]), &model.bind(store.values()), &[0.1], &cfg).unwrap();
    let trace = model.order_trace(store.values(), &traj).unwrap();

    let text = serde_json::to_string(&model.to_json(store.values())).unwrap();
    let (restored, restored_store) = OrderModel::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(restored.order_trace(restored_store.values(), &traj).unwrap(), trace);
    let again = serde_json::to_string(&restored.to_json(restored_store.values())).unwrap();
    assert_eq!(again, text);
}

proptest! {
    #[test]
    fn monotone_knots_give_monotone_trace(
        mut knots in prop::collection::vec(0.01f64..0.99, 2..12),
        rising in any::<bool>(),
        samples in prop::collection::vec(0.0f64..1.0, 2..50),
    ) {
        knots.sort_by(f64::total_cmp);
        if !rising {
            knots.reverse();
        }
        let mut store = ParamStore::new();
        let model = OrderModel::grid(&mut store, "g", 0.0, 1.0, knots.len(), 0.5).unwrap();
        let slot = model.param_range().unwrap();
        for (i, k) in knots.iter().enumerate() {
            store.values_mut()[slot.start + i] = raw_for_order(*k, DEFAULT_FLOOR).unwrap();
        }
        let mut ts = samples;
        ts.sort_by(f64::total_cmp);
        let trace: Vec<f64> = ts.iter().map(|&t| model.eval_order(store.values(), t, &[0.0]).unwrap()).collect();
        for w in trace.windows(2) {
            if rising {
                prop_assert!(w[1] >= w[0] - 1e-15);
            } else {
                prop_assert!(w[1] <= w[0] + 1e-15);
            }
        }
    }

    #[test]
    fn equal_knots_give_flat_trace(v in 0.01f64..=1.0, t in -1.0f64..2.0) {
        let mut store = ParamStore::new();
        let model = OrderModel::grid(&mut store, "g", 0.0, 1.0, 2, v).unwrap();
        prop_assert!((model.eval_order(store.values(), t, &[0.0]).unwrap() - v).abs() <= 1e-12);
    }

    #[test]
    fn constant_order_ignores_everything(a in 0.001f64..=1.0, t in -5.0f64..5.0, x in -1e3f64..1e3) {
        let model = OrderModel::constant(a).unwrap();
        prop_assert_eq!(model.eval_order::<f64>(&[], t, &[x]).unwrap(), a);
    }
}
