use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use vofde::checks::{run_suite, SuiteConfig};
use vofde::frac_core::{abm_weights, corrector_weights, l1_weights};
use vofde::graph::{generate_sbm, load_graph_dir, train_node_classifier, Dynamics, GnnConfig, GnnReport, GraphSpec, SbmConfig};
use vofde::inverse::{train_vp, vp_rhs, OrderChoice, VpConfig, VpOutcome};
use vofde::io::{format_real, json_real, RealTable};
use vofde::solvers;
use vofde::{OrderModel, ParamStore, Scheme, SolverConfig};

use crate::config::{finish, load, take};
use crate::{CliError, ConfigArgs};

type CliResult<T = ()> = Result<T, CliError>;

fn read_config(args: &ConfigArgs) -> CliResult<Map<String, Value>> {
    load(args.config.as_deref(), &args.overrides)
}

fn write(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &Value) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    write(path, &text)
}

fn trace_table(trace: &[(f64, f64)]) -> CliResult<RealTable> {
    let mut table = RealTable::new(vec!["t".into(), "alpha".into()]);
    for &(t, a) in trace {
        table.push(vec![t, a])?;
    }
    Ok(table)
}

fn trace_json(trace: &[(f64, f64)]) -> Value {
    Value::Array(trace.iter().map(|&(t, a)| json!([json_real(t), json_real(a)])).collect())
}

/// Runs `cells` on up to `jobs` threads, keeping results in input order.
fn run_cells<C: Sync, R: Send>(jobs: usize, cells: &[C], f: impl Fn(&C) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, cells.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..cells.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cells.len() {
                    break;
                }
                let r = f(&cells[i]);
                results.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    results.into_inner().expect("worker panicked").into_iter().map(|r| r.expect("every cell ran")).collect()
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SolveConfig {
    scheme: String,
    rhs: String,
    lambda: f64,
    alpha: f64,
    order_checkpoint: Option<PathBuf>,
    x0: OneOrMany,
    t0: f64,
    t1: f64,
    steps: usize,
    memory_window: Option<usize>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            scheme: "abm_p".into(),
            rhs: "linear".into(),
            lambda: -1.0,
            alpha: 0.5,
            order_checkpoint: None,
            x0: OneOrMany::One(1.0),
            t0: 0.0,
            t1: 1.0,
            steps: 100,
            memory_window: None,
        }
    }
}

fn load_order(path: &Path) -> CliResult<(OrderModel, ParamStore)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read order checkpoint {}: {e}", path.display())))?;
    let json: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let order_json = json.get("order").unwrap_or(&json);
    Ok(OrderModel::from_json(order_json)?)
}

pub fn solve(args: &ConfigArgs, out: &Path) -> CliResult {
    let cfg: SolveConfig = finish(read_config(args)?)?;
    let scheme: Scheme = cfg.scheme.parse()?;
    let mut solver = SolverConfig::new(cfg.t0, cfg.t1, cfg.steps, scheme)?;
    if let Some(w) = cfg.memory_window {
        solver = solver.with_memory_window(w)?;
    }
    let x0 = match cfg.x0 {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    };
    let (order, store) = match &cfg.order_checkpoint {
        Some(p) => load_order(p)?,
        None => (OrderModel::constant(cfg.alpha)?, ParamStore::new()),
    };
    let lambda = cfg.lambda;
    let rhs = move |kind: &str, x: &[f64]| -> Vec<f64> {
        match kind {
            "linear" => x.iter().map(|v| lambda * v).collect(),
            "logistic" | "vp" => x.iter().map(|&v| vp_rhs(v)).collect(),
            _ => vec![0.0; x.len()],
        }
    };
    let kind = match cfg.rhs.as_str() {
        k @ ("linear" | "logistic" | "vp" | "zero") => k.to_string(),
        other => return Err(CliError::Config(format!("unknown rhs '{other}' (expected linear, logistic or zero)"))),
    };
    let traj = solvers::solve(|_, x: &[f64]| Ok(rhs(&kind, x)), &order.bind(store.values()), &x0, &solver)?;
    let table = traj.to_table()?;
    write(&out.join("trajectory.csv"), &table.to_csv())?;
    let trace: Vec<(f64, f64)> = traj.times.iter().copied().zip(traj.orders.iter().copied()).collect();
    write(&out.join("alpha_trace.csv"), &trace_table(&trace)?.to_csv())?;
    let last = table.rows.last().expect("trajectory has at least two points");
    println!("{}", table.header.join(","));
    println!("{}", last.iter().map(|&v| format_real(v)).collect::<Vec<_>>().join(","));
    Ok(())
}

pub fn weights(n: usize, alpha: f64, scheme: &str, h: f64) -> CliResult {
    let scheme: Scheme = scheme.parse()?;
    let (row, expected) = match scheme {
        Scheme::L1 => (l1_weights(n, alpha, h)?, 1.0),
        Scheme::AbmPredictor => (abm_weights(n, alpha, h)?, ((n + 1) as f64).powf(alpha)),
        Scheme::AbmPredictorCorrector => (corrector_weights(n, alpha, h)?, (alpha + 1.0) * ((n + 1) as f64).powf(alpha)),
    };
    let mut header: Vec<String> = (0..=n).map(|j| format!("w_{j}")).collect();
    let mut values = row.weights.clone();
    if let Some(w) = row.implicit_weight {
        header.push("implicit".into());
        values.push(w);
    }
    let sum: f64 = values.iter().sum();
    header.extend(["scale".into(), "sum".into(), "expected_sum".into()]);
    values.extend([row.scale, sum, expected]);
    println!("{}", header.join(","));
    println!("{}", values.iter().map(|&v| format_real(v)).collect::<Vec<_>>().join(","));
    if (sum - expected).abs() > 1e-10 * expected.abs().max(1.0) {
        return Err(CliError::Check(format!("weight sum {sum} differs from {expected}")));
    }
    Ok(())
}

fn loss_rows<'a>(reports: impl Iterator<Item = &'a vofde::inverse::LossReport>) -> CliResult<RealTable> {
    let mut t = RealTable::new(vec!["iter".into(), "l_eqn".into(), "l_ini".into(), "l_total".into()]);
    for r in reports {
        t.push(vec![r.iteration as f64, r.l_eqn, r.l_ini, r.l_total])?;
    }
    Ok(t)
}

fn write_vp_outputs(dir: &Path, cfg: &VpConfig, run: &VpOutcome) -> CliResult {
    write(&dir.join("loss_history.csv"), &loss_rows(run.history.iter())?.to_csv())?;
    write(&dir.join("test_loss.csv"), &loss_rows(run.checkpoints.iter().map(|c| &c.test))?.to_csv())?;
    write(&dir.join("alpha_trace.csv"), &trace_table(&run.final_test.learned_alpha_trace)?.to_csv())?;
    write(&dir.join("alpha_trace_initial.csv"), &trace_table(&run.initial_alpha_trace)?.to_csv())?;
    let config = serde_json::to_value(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    write_json(
        &dir.join("checkpoint.json"),
        &json!({
            "config": config,
            "params": run.store.to_json(),
            "order": run.order.to_json(run.store.values()),
        }),
    )?;
    let checkpoints: Vec<Value> = run
        .checkpoints
        .iter()
        .map(|c| {
            json!({
                "iteration": c.iteration,
                "train_l_total": json_real(c.train.l_total),
                "test_l_eqn": json_real(c.test.l_eqn),
                "test_l_ini": json_real(c.test.l_ini),
                "test_l_total": json_real(c.test.l_total),
            })
        })
        .collect();
    write_json(
        &dir.join("metrics.json"),
        &json!({
            "j_points": cfg.j_points,
            "seed": cfg.seed,
            "iterations": cfg.iterations,
            "final_test_loss": json_real(run.final_test.l_total),
            "checkpoints": checkpoints,
        }),
    )
}

pub fn vp_train(args: &ConfigArgs, out: &Path, jobs: usize) -> CliResult {
    let mut map = read_config(args)?;
    let seeds: Option<Vec<u64>> = take(&mut map, "seeds")?;
    let j_grid: Option<Vec<usize>> = take(&mut map, "j_grid")?;
    let base: VpConfig = finish(map)?;
    base.validate()?;
    let seeds = seeds.unwrap_or_else(|| vec![base.seed]);
    let j_grid = j_grid.unwrap_or_else(|| vec![base.j_points]);
    let cells: Vec<VpConfig> = j_grid
        .iter()
        .flat_map(|&j| seeds.iter().map(move |&seed| (j, seed)))
        .map(|(j_points, seed)| VpConfig { j_points, seed, ..base.clone() })
        .collect();
    for c in &cells {
        c.validate()?;
    }
    let single = cells.len() == 1;
    let results = run_cells(jobs, &cells, |c| -> CliResult<VpOutcome> {
        let run = train_vp(c)?;
        let dir = if single { out.to_path_buf() } else { out.join(format!("j{}_seed{}", c.j_points, c.seed)) };
        write_vp_outputs(&dir, c, &run)?;
        Ok(run)
    });
    let mut summary = RealTable::new(vec![
        "j".into(),
        "seed".into(),
        "iter".into(),
        "test_l_eqn".into(),
        "test_l_ini".into(),
        "test_l_total".into(),
    ]);
    for (c, r) in cells.iter().zip(results) {
        let run = r?;
        println!("j={} seed={} final_test_loss={}", c.j_points, c.seed, format_real(run.final_test.l_total));
        for cp in &run.checkpoints {
            summary.push(vec![c.j_points as f64, c.seed as f64, cp.iteration as f64, cp.test.l_eqn, cp.test.l_ini, cp.test.l_total])?;
        }
    }
    if !single {
        write(&out.join("summary.csv"), &summary.to_csv())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GnnCmdConfig {
    dataset: String,
    order: String,
    order_init: f64,
    dynamics: Dynamics,
    t_end: f64,
    steps: usize,
    hidden: usize,
    epochs: usize,
    lr: f64,
    patience: usize,
    seed: u64,
    seeds: Option<Vec<u64>>,
    compare_constant: bool,
    nodes: usize,
    classes: usize,
    p_in: f64,
    p_out: f64,
    feature_dim: usize,
    signal: f64,
}

impl Default for GnnCmdConfig {
    fn default() -> Self {
        let g = GnnConfig::default();
        let s = SbmConfig::default();
        GnnCmdConfig {
            dataset: "sbm".into(),
            order: "grid".into(),
            order_init: g.order_init,
            dynamics: g.dynamics,
            t_end: g.t_end,
            steps: g.steps,
            hidden: g.hidden,
            epochs: g.epochs,
            lr: g.lr,
            patience: g.patience,
            seed: 0,
            seeds: None,
            compare_constant: false,
            nodes: s.nodes,
            classes: s.classes,
            p_in: s.p_in,
            p_out: s.p_out,
            feature_dim: s.feature_dim,
            signal: s.signal,
        }
    }
}

/// `const[:value]`, `constant[:value]`, `grid`, `timenet`, `statenet`.
fn parse_order(spec: &str, default_init: f64) -> CliResult<(OrderChoice, f64)> {
    let (kind, value) = match spec.split_once(':') {
        Some((k, v)) => (k, Some(v)),
        None => (spec, None),
    };
    let init = match value {
        Some(v) => v.parse::<f64>().map_err(|_| CliError::Config(format!("order value '{v}' is not a number")))?,
        None => default_init,
    };
    let choice = match kind {
        "const" => OrderChoice::Constant,
        other => other.parse()?,
    };
    Ok((choice, init))
}

fn run_json(seed: u64, r: &GnnReport) -> Value {
    json!({
        "seed": seed,
        "train_accuracy": json_real(r.train_accuracy),
        "val_accuracy": json_real(r.val_accuracy),
        "test_accuracy": json_real(r.test_accuracy),
        "best_epoch": r.best_epoch,
        "epochs_run": r.epochs_run,
    })
}

fn mean_test(runs: &[(u64, GnnReport)]) -> f64 {
    runs.iter().map(|(_, r)| r.test_accuracy).sum::<f64>() / runs.len() as f64
}

pub fn gnn_train(args: &ConfigArgs, out: &Path, jobs: usize) -> CliResult {
    let cfg: GnnCmdConfig = finish(read_config(args)?)?;
    let (kind, init) = parse_order(&cfg.order, cfg.order_init)?;
    let base = GnnConfig {
        dynamics: cfg.dynamics,
        order_kind: kind,
        order_init: init,
        t_end: cfg.t_end,
        steps: cfg.steps,
        hidden: cfg.hidden,
        epochs: cfg.epochs,
        lr: cfg.lr,
        patience: cfg.patience,
        seed: cfg.seed,
    };
    base.validate()?;
    let seeds = cfg.seeds.clone().unwrap_or_else(|| vec![cfg.seed]);
    if seeds.is_empty() {
        return Err(CliError::Config("seeds must not be empty".into()));
    }
    let fixed_graph: Option<GraphSpec> = match cfg.dataset.as_str() {
        "sbm" => None,
        d => match d.strip_prefix("csv:") {
            Some(dir) => Some(load_graph_dir(Path::new(dir))?),
            None => return Err(CliError::Config(format!("unknown dataset '{d}' (expected sbm or csv:<dir>)"))),
        },
    };
    let sbm = |seed: u64| SbmConfig {
        nodes: cfg.nodes,
        classes: cfg.classes,
        p_in: cfg.p_in,
        p_out: cfg.p_out,
        feature_dim: cfg.feature_dim,
        signal: cfg.signal,
        seed,
    };
    let baseline = GnnConfig { order_kind: OrderChoice::Constant, order_init: 1.0, ..base.clone() };
    let mut cells: Vec<(u64, bool)> = seeds.iter().map(|&s| (s, false)).collect();
    if cfg.compare_constant {
        cells.extend(seeds.iter().map(|&s| (s, true)));
    }
    let results = run_cells(jobs, &cells, |&(seed, is_baseline)| -> CliResult<GnnReport> {
        let graph = match &fixed_graph {
            Some(g) => g.clone(),
            None => generate_sbm(&sbm(seed))?,
        };
        let run_cfg = GnnConfig { seed, ..if is_baseline { baseline.clone() } else { base.clone() } };
        Ok(train_node_classifier(&graph, &run_cfg)?)
    });
    let mut main_runs = Vec::new();
    let mut base_runs = Vec::new();
    for (&(seed, is_baseline), r) in cells.iter().zip(results) {
        let r = r?;
        println!(
            "{} seed={seed} test_accuracy={}",
            if is_baseline { "const:1.0" } else { cfg.order.as_str() },
            format_real(r.test_accuracy)
        );
        if is_baseline { base_runs.push((seed, r)) } else { main_runs.push((seed, r)) }
    }
    let first = &main_runs[0].1;
    write(&out.join("alpha_trace.csv"), &trace_table(&first.order_trace)?.to_csv())?;
    write(&out.join("alpha_trace_initial.csv"), &trace_table(&first.initial_order_trace)?.to_csv())?;
    let mut metrics = json!({
        "dataset": cfg.dataset,
        "dynamics": cfg.dynamics,
        "order": cfg.order,
        "seeds": seeds,
        "runs": main_runs.iter().map(|(s, r)| run_json(*s, r)).collect::<Vec<_>>(),
        "mean_test_accuracy": json_real(mean_test(&main_runs)),
        "order_trace": trace_json(&first.order_trace),
    });
    if !base_runs.is_empty() {
        metrics["baseline"] = json!({
            "order": "const:1.0",
            "runs": base_runs.iter().map(|(s, r)| run_json(*s, r)).collect::<Vec<_>>(),
            "mean_test_accuracy": json_real(mean_test(&base_runs)),
        });
    }
    write_json(&out.join("metrics.json"), &metrics)?;
    println!("mean_test_accuracy={}", format_real(mean_test(&main_runs)));
    Ok(())
}

pub fn sbm_gen(args: &ConfigArgs, out: &Path) -> CliResult {
    let cfg: SbmConfig = finish(read_config(args)?)?;
    let g = generate_sbm(&cfg)?;
    g.write_csv(out)?;
    println!(
        "nodes={} edges={} homophily={} connected={}",
        g.n_nodes,
        g.undirected_edge_count(),
        format_real(g.edge_homophily()),
        g.is_connected()
    );
    Ok(())
}

pub fn grad_check(args: &ConfigArgs) -> CliResult {
    let cfg: SuiteConfig = finish(read_config(args)?)?;
    let results = run_suite(&cfg)?;
    let mut failures = Vec::new();
    let mut total = 0;
    for e in &results {
        total += e.report.checked;
        println!(
            "{:<36} {:>5} params  max_rel={:.3e}  {}",
            e.name,
            e.report.checked,
            e.report.max_rel,
            if e.passed() { "PASS" } else { "FAIL" }
        );
        if !e.passed() {
            let i = e.report.worst_index.unwrap_or(0);
            failures.push(format!(
                "{}: parameter {i} autodiff={} finite-difference={}",
                e.name,
                format_real(e.report.autodiff.get(i).copied().unwrap_or(f64::NAN)),
                format_real(e.report.finite_difference.get(i).copied().unwrap_or(f64::NAN)),
            ));
        }
    }
    println!("{total} parameters checked");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!("gradient check failed; worst parameter {}", failures.join("; "))))
    }
}
