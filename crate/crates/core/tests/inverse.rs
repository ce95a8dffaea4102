use proptest::prelude::*;

use vofde::frac_core::caputo_power_term;
use vofde::inverse::{equation_residual, train_vp, LossReport, MultiTermProblem, OrderChoice, PowerSeriesModel, ScalarRhs, Term, VpConfig};
use vofde::{OrderModel, ParamStore, Real};

/// `h(t) = a · D^α t^k`, the forcing that makes `u = u0 + a t^k` exact.
struct PowerForcing {
    k: u32,
    a: f64,
    alpha: f64,
}

impl ScalarRhs for PowerForcing {
    fn eval<T: Real>(&self, t: f64, _u: T) -> T {
        T::cst(self.a * caputo_power_term::<f64>(self.k, self.alpha, t).unwrap())
    }
}

proptest! {
    #[test]
    fn manufactured_power_series_has_zero_residual(
        k in 1u32..=5,
        a in -3.0f64..3.0,
        alpha in 0.01f64..=1.0,
        u0 in -1.0f64..1.0,
        mut grid in prop::collection::vec(0.01f64..1.0, 1..20),
    ) {
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut store = ParamStore::new();
        let series = PowerSeriesModel::new(&mut store, "a", u0, 5).unwrap();
        store.values_mut()[series.coeffs.range().start + k as usize] = a;
        let terms = vec![Term { coefficient: Box::new(|_| 1.0), order: OrderModel::constant(alpha).unwrap() }];
        let problem = MultiTermProblem::new(terms, PowerForcing { k, a, alpha }, grid).unwrap();
        let r: f64 = equation_residual(&problem, &series, store.values()).unwrap();
        prop_assert!(r <= 1e-24, "residual {}", r);
    }

    #[test]
    fn total_loss_decomposes_exactly(l_eqn in 0.0f64..1e3, l_ini in 0.0f64..1e3, l1 in 0.0f64..10.0, l2 in 0.0f64..10.0) {
        let r = LossReport::new(3, l_eqn, l_ini, l1, l2);
        prop_assert_eq!(r.l_total, l1 * l_eqn + l2 * l_ini);
    }
}

#[test]
fn training_is_deterministic_and_decomposes() {
    let cfg = VpConfig { iterations: 60, j_points: 12, lambda1: 0.7, lambda2: 1.3, seed: 4, checkpoints: vec![30, 60], ..VpConfig::default() };
    let a = train_vp(&cfg).unwrap();
    let b = train_vp(&cfg).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.store, b.store);
    for r in a.history.iter().chain(a.checkpoints.iter().flat_map(|c| [&c.train, &c.test])) {
        assert_eq!(r.l_total, 0.7 * r.l_eqn + 1.3 * r.l_ini);
    }
}

#[test]
fn random_test_points_generalise() {
    let cfg = VpConfig { iterations: 400, j_points: 40, checkpoints: vec![400], ..VpConfig::default() };
    let run = train_vp(&cfg).unwrap();
    let c = run.checkpoint(400).unwrap();
    assert!(c.test.l_total <= 10.0 * c.train.l_total, "test {} vs train {}", c.test.l_total, c.train.l_total);
}

#[test]
fn every_order_kind_trains() {
    for kind in [OrderChoice::Constant, OrderChoice::Grid, OrderChoice::TimeNet, OrderChoice::StateNet] {
        let cfg = VpConfig { iterations: 200, j_points: 10, order_kind: kind, checkpoints: vec![200], ..VpConfig::default() };
        let run = train_vp(&cfg).unwrap();
        let first = run.history[0].l_total;
        assert!(run.final_test.l_total < first, "{kind:?}: {} !< {first}", run.final_test.l_total);
        assert!(run.final_test.learned_alpha_trace.iter().all(|&(_, a)| a > 0.0 && a <= 1.0));
    }
}
