//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{MANUFACTURED_COEFFS, MANUFACTURED_FORCING, MANUFACTURED_U0, MITTAG_LEFFLER_AT_MINUS_ONE, POWER_TERM_CASES};
use vofde::checks::{run_suite, SuiteConfig};
use vofde::frac_core::{abm_weights, caputo_power_term, l1_weights};
use vofde::graph::{generate_sbm, train_node_classifier, GnnConfig, SbmConfig};
use vofde::inverse::{equation_residual, train_vp, MultiTermProblem, OrderChoice, PowerSeriesModel, ScalarRhs, Term, VpConfig};
use vofde::io::RealTable;
use vofde::order::{raw_for_order, DEFAULT_FLOOR};
use vofde::solvers::solve;
use vofde::{OrderModel, ParamStore, Real, Scheme, SolverConfig};

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg.into()) }
}

fn err(e: vofde::Error) -> String {
    e.to_string()
}

fn euler_degeneracy() -> Outcome {
    let cfg = |scheme| SolverConfig::new(0.0, 1.0, 100, scheme).map_err(err);
    let one = OrderModel::constant(1.0).map_err(err)?;
    let f = |_: f64, x: &[f64]| Ok(x.to_vec());
    let h = 0.01;
    let (mut euler, mut heun) = (vec![1.0f64], vec![1.0f64]);
    for n in 0..100 {
        let e = euler[n];
        euler.push(e + h * e);
        let x = heun[n];
        let pred = x + h * x;
        heun.push(x + 0.5 * h * (x + pred));
    }
    let mut worst = 0.0f64;
    for (scheme, reference) in [(Scheme::AbmPredictor, &euler), (Scheme::L1, &euler), (Scheme::AbmPredictorCorrector, &heun)] {
        let traj = solve(f, &one.bind::<f64>(&[]), &[1.0], &cfg(scheme)?).map_err(err)?;
        let dev = traj.states.iter().zip(reference.iter()).map(|(s, r)| (s[0] - r).abs()).fold(0.0, f64::max);
        ensure(dev <= 1e-12, format!("{scheme} deviates by {dev:e}"))?;
        worst = worst.max(dev);
    }
    Ok(format!("max deviation {worst:.1e}"))
}

fn coefficient_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let alpha: f64 = 1.0 - rng.random::<f64>();
        for n in 0..=200 {
            let a: f64 = l1_weights(n, alpha, 1.0).map_err(err)?.weights.iter().sum();
            let b: f64 = abm_weights(n, alpha, 1.0).map_err(err)?.weights.iter().sum();
            let expected = ((n + 1) as f64).powf(alpha);
            let dev = (a - 1.0).abs().max((b - expected).abs());
            ensure(dev <= 1e-10, format!("alpha={alpha} n={n}: deviation {dev:e}"))?;
            worst = worst.max(dev);
        }
    }
    Ok(format!("max deviation {worst:.1e}"))
}

fn analytic_oracle() -> Outcome {
    let mut summary = Vec::new();
    for &(alpha, exact) in &MITTAG_LEFFLER_AT_MINUS_ONE {
        let order = OrderModel::constant(alpha).map_err(err)?;
        let mut errors = Vec::new();
        for n in [250, 500, 1000, 2000] {
            let cfg = SolverConfig::new(0.0, 1.0, n, Scheme::AbmPredictor).map_err(err)?;
            let traj = solve(|_, x: &[f64]| Ok(vec![-x[0]]), &order.bind::<f64>(&[]), &[1.0], &cfg).map_err(err)?;
            errors.push((traj.last()[0] - exact).abs());
        }
        ensure(errors.windows(2).all(|w| w[1] < w[0]), format!("alpha={alpha}: errors not decreasing {errors:?}"))?;
        ensure(errors[3] <= 5e-2, format!("alpha={alpha}: error {:e} at N=2000", errors[3]))?;
        summary.push(format!("a={alpha}:{:.1e}", errors[3]));
    }
    Ok(format!("N=2000 errors {}", summary.join(" ")))
}

struct Forcing;

impl ScalarRhs for Forcing {
    fn eval<T: Real>(&self, t: f64, u: T) -> T {
        let g = MANUFACTURED_FORCING.iter().find(|(s, _)| (s - t).abs() < 1e-12).expect("grid point has forcing").1;
        T::cst(g) - u
    }
}

fn power_term_rule() -> Outcome {
    let mut worst = 0.0f64;
    for &(n, alpha, t, reference) in &POWER_TERM_CASES {
        let v: f64 = caputo_power_term(n, alpha, t).map_err(err)?;
        let dev = (v - reference).abs() / reference.abs().max(1.0);
        ensure(dev <= 1e-6, format!("n={n} alpha={alpha} t={t}: {v} vs {reference}"))?;
        worst = worst.max(dev);
    }

    let mut store = ParamStore::new();
    let varying = OrderModel::grid(&mut store, "alpha", 0.0, 1.0, 2, 0.5).map_err(err)?;
    let knots = varying.param_range().expect("grid has parameters");
    store.values_mut()[knots.start] = raw_for_order(0.3, DEFAULT_FLOOR).map_err(err)?;
    store.values_mut()[knots.start + 1] = raw_for_order(0.7, DEFAULT_FLOOR).map_err(err)?;
    let series = PowerSeriesModel::new(&mut store, "a", MANUFACTURED_U0, 3).map_err(err)?;
    store.values_mut()[series.coeffs.range()].copy_from_slice(&MANUFACTURED_COEFFS);
    let terms = vec![
        Term { coefficient: Box::new(|_| 1.0), order: varying },
        Term { coefficient: Box::new(|t| 1.0 + t), order: OrderModel::constant(0.6).map_err(err)? },
    ];
    let grid = MANUFACTURED_FORCING.iter().map(|p| p.0).collect();
    let problem = MultiTermProblem::new(terms, Forcing, grid).map_err(err)?;
    let residual: f64 = equation_residual(&problem, &series, store.values()).map_err(err)?;
    ensure(residual <= 1e-12, format!("manufactured residual {residual:e}"))?;
    Ok(format!("max quadrature deviation {worst:.1e}, manufactured residual {residual:.1e}"))
}

fn gradient_integrity() -> Outcome {
    let cfg = SuiteConfig::default();
    let entries = run_suite(&cfg).map_err(err)?;
    let checked: usize = entries.iter().map(|e| e.report.checked).sum();
    let worst = entries.iter().map(|e| e.report.max_rel).fold(0.0, f64::max);
    if let Some(bad) = entries.iter().find(|e| !e.passed()) {
        return Err(format!("{} failed with max_rel {:e}", bad.name, bad.report.max_rel));
    }
    ensure(entries.iter().any(|e| e.name.contains("statenet")), "suite lacks a StateNet solver check")?;
    Ok(format!("{} checks, {checked} parameters, max_rel {worst:.1e}", entries.len()))
}

fn vp_cells(cells: Vec<VpConfig>) -> Result<Vec<vofde::inverse::VpOutcome>, String> {
    std::thread::scope(|s| {
        let handles: Vec<_> = cells.iter().map(|c| s.spawn(move || train_vp(c))).collect();
        handles.into_iter().map(|h| h.join().expect("training thread panicked").map_err(err)).collect()
    })
}

fn vp_loss_targets() -> Outcome {
    let seeds = [0u64, 1, 2];
    let js = [10usize, 20, 30, 40, 50];
    let base = VpConfig { iterations: 2000, checkpoints: vec![200, 2000], ..VpConfig::default() };
    let cells: Vec<VpConfig> = js
        .iter()
        .flat_map(|&j| seeds.iter().map(move |&seed| (j, seed)))
        .map(|(j_points, seed)| VpConfig { j_points, seed, ..base.clone() })
        .collect();
    let runs = vp_cells(cells.clone())?;
    let mean_at = |j: usize, it: usize| -> f64 {
        let v: Vec<f64> = cells
            .iter()
            .zip(&runs)
            .filter(|(c, _)| c.j_points == j)
            .map(|(_, r)| r.checkpoint(it).expect("checkpoint recorded").test.l_total)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    for &j in &js {
        let (early, late) = (mean_at(j, 200), mean_at(j, 2000));
        ensure(late <= early, format!("j={j}: loss at 2000 ({late:e}) exceeds loss at 200 ({early:e})"))?;
    }
    let full = mean_at(40, 2000);
    ensure(full <= 1e-4, format!("(2000, 40) mean test loss {full:e} > 1e-4"))?;

    let short = seeds.iter().map(|&seed| VpConfig { iterations: 200, j_points: 10, seed, checkpoints: vec![200], ..VpConfig::default() });
    let short_runs = vp_cells(short.collect())?;
    let quick = short_runs.iter().map(|r| r.final_test.l_total).sum::<f64>() / seeds.len() as f64;
    ensure(quick <= 1e-2, format!("(200, 10) mean test loss {quick:e} > 1e-2"))?;
    Ok(format!("(2000,40) {full:.2e}  (200,10) {quick:.2e}"))
}

fn gnn_desk_scale() -> Outcome {
    let seeds = [0u64, 1, 2, 3, 4];
    let run = |choice: OrderChoice, init: f64| -> Result<f64, String> {
        let accs = std::thread::scope(|s| {
            let handles: Vec<_> = seeds
                .iter()
                .map(|&seed| {
                    s.spawn(move || -> vofde::Result<f64> {
                        let graph = generate_sbm(&SbmConfig { seed, ..SbmConfig::default() })?;
                        let cfg = GnnConfig { order_kind: choice, order_init: init, seed, ..GnnConfig::default() };
                        Ok(train_node_classifier(&graph, &cfg)?.test_accuracy)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("training thread panicked").map_err(err)).collect::<Result<Vec<_>, _>>()
        })?;
        Ok(accs.iter().sum::<f64>() / accs.len() as f64)
    };
    let learned = run(OrderChoice::Grid, 0.8)?;
    let constant = run(OrderChoice::Constant, 1.0)?;
    ensure(learned >= 0.85, format!("learnable-order mean accuracy {learned} < 0.85"))?;
    ensure(learned >= constant - 0.01, format!("learnable {learned} below constant baseline {constant} - 0.01"))?;
    Ok(format!("grid {learned:.3}, constant(1.0) {constant:.3}"))
}

fn trace_column(trace: &[(f64, f64)]) -> Result<Vec<f64>, String> {
    let mut table = RealTable::new(vec!["t".into(), "alpha".into()]);
    for &(t, a) in trace {
        table.push(vec![t, a]).map_err(err)?;
    }
    let parsed = RealTable::parse_csv(&table.to_csv()).map_err(err)?;
    Ok(parsed.rows.iter().map(|r| r[1]).collect())
}

fn order_trace_export() -> Outcome {
    let cfg = VpConfig { iterations: 500, order_kind: OrderChoice::Grid, order_init: 0.8, checkpoints: vec![500], ..VpConfig::default() };
    let run = train_vp(&cfg).map_err(err)?;
    let before = trace_column(&run.initial_alpha_trace)?;
    let after = trace_column(&run.final_test.learned_alpha_trace)?;
    ensure((before[0] - 0.8).abs() <= 1e-9, format!("initial trace starts at {}", before[0]))?;
    let flat = before.iter().map(|a| (a - 0.8).abs()).fold(0.0, f64::max);
    ensure(flat <= 1e-9, format!("initial trace is not flat ({flat:e})"))?;
    let moved = after.iter().map(|a| (a - 0.8).abs()).fold(0.0, f64::max);
    ensure(moved > 1e-3, format!("trained trace stays flat (max shift {moved:e})"))?;
    Ok(format!("first entry {:.12}, max shift after training {moved:.3}", before[0]))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "euler-degeneracy", budget: Duration::from_secs(1), run: euler_degeneracy },
        Criterion { name: "coefficient-identities", budget: Duration::from_secs(5), run: coefficient_identities },
        Criterion { name: "analytic-oracle", budget: Duration::from_secs(30), run: analytic_oracle },
        Criterion { name: "power-term-rule", budget: Duration::from_secs(10), run: power_term_rule },
        Criterion { name: "gradient-integrity", budget: Duration::from_secs(60), run: gradient_integrity },
        Criterion { name: "vp-loss-targets", budget: Duration::from_secs(600), run: vp_loss_targets },
        Criterion { name: "gnn-desk-scale", budget: Duration::from_secs(300), run: gnn_desk_scale },
        Criterion { name: "order-trace-export", budget: Duration::from_secs(60), run: order_trace_export },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let mut result = (c.run)();
        let elapsed = start.elapsed();
        if result.is_ok() && elapsed > c.budget {
            result = Err(format!("took {elapsed:.1?}, budget {:?}", c.budget));
        }
        match result {
            Ok(detail) => println!("PASS {:<24} {elapsed:>8.2?}  {detail}", c.name),
            Err(reason) => {
                failed += 1;
                println!("FAIL {:<24} {elapsed:>8.2?}  {reason}", c.name);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
