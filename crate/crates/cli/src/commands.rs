//! Subcommand implementations.

use crate::{GenerateArgs, PredictArgs, ReportArgs, SimulateArgs, TrainArgs};
use anyhow::Context;
use ndarray::{Array2, Array3};
use std::fmt::Write as _;
use std::path::Path;
use xhaul_core::eval::{error_percentile, gain_metrics, rmse_metrics};
use xhaul_core::forecast::{train as train_model, ArPredictor, Dataset, ForecastModel, LstmPredictor, NaivePredictor, TrainConfig};
use xhaul_core::maxmin::{self, RoutingMode, SolveOptions, Subdivision};
use xhaul_core::net::{self, CapacitySnapshot, NetworkTopology};
use xhaul_core::phy::{am_step, capacity_of, ModulationTable, StepMode};
use xhaul_core::planner::{run_simulation, Algorithm, OraclePredictor, Predictor, SimParams, SimulationTrace};
use xhaul_core::scenario::{load_scenario, write_trace, GapPolicy};

pub enum CliError {
    /// Bad flags or malformed input files.
    Validation(String),
    /// Failures after inputs validated.
    Runtime(anyhow::Error),
}

impl CliError {
    fn validation(e: impl std::fmt::Display) -> Self {
        CliError::Validation(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn runtime<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Runtime(e.into()))
}

fn validated<T, E: std::fmt::Display>(r: Result<T, E>, what: &str) -> Result<T, CliError> {
    r.map_err(|e| CliError::Validation(format!("{}: {}", what, e)))
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .map_err(CliError::Runtime)
}

/// Atomic text write: temp file in the same directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    runtime(std::fs::write(&tmp, contents))?;
    runtime(std::fs::rename(&tmp, path))?;
    Ok(())
}

pub fn generate(args: GenerateArgs) -> CliResult {
    let mut scenario =
        validated(load_scenario(&args.scenario), "loading scenario")?;
    if let Some(seed) = args.seed {
        // Regenerate under the override by rewriting the descriptor seed in
        // memory: reload through the same path for exactness.
        let text = validated(std::fs::read_to_string(&args.scenario), "reading scenario")?;
        let mut doc: serde_json::Value =
            validated(serde_json::from_str(&text), "parsing scenario")?;
        doc["seed"] = serde_json::Value::from(seed);
        let dir = std::env::temp_dir().join(format!("xhaul-generate-{}", std::process::id()));
        runtime(std::fs::create_dir_all(&dir))?;
        // Keep relative paths working: resolve against the original parent.
        if let Some(topology) = doc.get("topology").and_then(|v| v.as_str()) {
            let base = args.scenario.parent().unwrap_or_else(|| Path::new("."));
            let resolved = base.join(topology);
            doc["topology"] = serde_json::Value::from(resolved.to_string_lossy().to_string());
        }
        let tmp = dir.join("scenario.json");
        runtime(std::fs::write(&tmp, doc.to_string()))?;
        scenario = validated(load_scenario(&tmp), "loading scenario with seed override")?;
    }
    ensure_out_dir(&args.out)?;
    let path = args.out.join("trace.csv");
    runtime(write_trace(&path, &scenario.trace))?;
    println!(
        "wrote {} ({} steps, {} links, seed {:?})",
        path.display(),
        scenario.trace.len(),
        scenario.trace.num_links(),
        scenario.trace.seed
    );
    Ok(())
}

pub fn train(args: TrainArgs) -> CliResult {
    let (topology, _) = validated(net::load_topology(&args.topology), "loading topology")?;
    let trace = validated(
        xhaul_core::scenario::import_trace(&args.trace, &topology, GapPolicy::Reject),
        "importing trace",
    )?;
    let dataset =
        validated(Dataset::from_trace(&trace, args.window, args.horizon), "building dataset")?;
    let config = TrainConfig {
        window: args.window,
        horizon: args.horizon,
        hidden: args.hidden,
        max_epochs: args.epochs,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let (model, log) = runtime(train_model(&dataset, &config))?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_out_dir(parent)?;
        }
    }
    runtime(model.save(&args.out))?;
    println!(
        "trained {} epochs (best epoch {}, validation loss {:.6}); wrote {}",
        log.val_losses.len(),
        log.best_epoch,
        log.val_losses[log.best_epoch],
        args.out.display()
    );
    Ok(())
}

/// Slides the model over the trace; returns (origins, predictions) where
/// each prediction block is (horizon, links).
fn predict_series(
    model: &ForecastModel,
    trace: &xhaul_core::scenario::AttenuationTrace,
) -> Result<Vec<(usize, Array2<f64>)>, CliError> {
    let links = trace.num_links();
    if links != model.input_dim {
        return Err(CliError::validation(format!(
            "model expects {} links, trace has {}",
            model.input_dim, links
        )));
    }
    let mut out = Vec::new();
    for t in (model.window - 1)..trace.len() {
        let window = Array2::from_shape_fn((model.window, links), |(i, l)| {
            trace.attenuation(t + 1 - model.window + i, l)
        });
        let prediction = runtime(model.predict(&window))?;
        out.push((t, prediction));
    }
    Ok(out)
}

fn prediction_metrics_csv(
    errors: &Array3<f64>,
) -> Result<String, CliError> {
    let (rmse_avg, rmse_max) = runtime(rmse_metrics(errors))?;
    let mut text = String::from("h,rmse_avg_db,rmse_max_db,p50_db,p90_db,p95_db,p99_db\n");
    for h in 0..rmse_avg.len() {
        let p = |eta: f64| error_percentile(errors, eta, h).unwrap_or(f64::NAN);
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            h + 1,
            rmse_avg[h],
            rmse_max[h],
            p(50.0),
            p(90.0),
            p(95.0),
            p(99.0)
        );
    }
    Ok(text)
}

pub fn predict(args: PredictArgs) -> CliResult {
    let (topology, _) = validated(net::load_topology(&args.topology), "loading topology")?;
    let trace = validated(
        xhaul_core::scenario::import_trace(&args.trace, &topology, GapPolicy::Reject),
        "importing trace",
    )?;
    let model = validated(ForecastModel::load(&args.model), "loading model")?;
    let series = predict_series(&model, &trace)?;
    ensure_out_dir(&args.out)?;

    let mut csv = String::from("t,link_id,h,xhat_db\n");
    for (t, prediction) in &series {
        for h in 0..model.horizon {
            for (l, label) in trace.link_labels().iter().enumerate() {
                let _ = writeln!(csv, "{},{},{},{}", t, label, h + 1, prediction[[h, l]]);
            }
        }
    }
    let pred_path = args.out.join("predictions.csv");
    write_atomic(&pred_path, &csv)?;

    // Metrics over the origins whose full target window lies in the trace.
    let usable: Vec<&(usize, Array2<f64>)> =
        series.iter().filter(|(t, _)| t + model.horizon < trace.len()).collect();
    if usable.is_empty() {
        return Err(CliError::validation(
            "trace too short to score any prediction window".to_string(),
        ));
    }
    let links = trace.num_links();
    let mut errors = Array3::zeros((usable.len(), model.horizon, links));
    for (row, (t, prediction)) in usable.iter().enumerate() {
        for h in 0..model.horizon {
            for l in 0..links {
                errors[[row, h, l]] =
                    trace.attenuation(t + h + 1, l) - prediction[[h, l]];
            }
        }
    }
    let metrics_path = args.out.join("prediction-metrics.csv");
    write_atomic(&metrics_path, &prediction_metrics_csv(&errors)?)?;
    println!("wrote {} and {}", pred_path.display(), metrics_path.display());
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> CliResult {
    let scenario = validated(load_scenario(&args.scenario), "loading scenario")?;
    let algorithm = match args.algorithm.as_str() {
        "msnr" => Algorithm::Msnr,
        "never" => Algorithm::NeverReroute,
        "always" => Algorithm::AlwaysReroute,
        other => return Err(CliError::validation(format!("unknown algorithm {}", other))),
    };
    if args.horizon < 1 {
        return Err(CliError::validation("--horizon must be at least 1".to_string()));
    }
    if !(args.smin > 0.0 && args.smin < 1.0) {
        return Err(CliError::validation(format!("--smin {} outside (0, 1)", args.smin)));
    }

    let mut params = SimParams {
        horizon: args.horizon,
        s_min: args.smin,
        history_window: args.window,
        opportunistic_never: args.opportunistic,
        max_steps: args.steps,
        ..SimParams::default()
    };
    params.opts = SolveOptions::default();

    let lstm_model = if args.predictor == "lstm" {
        let path = args
            .model
            .as_ref()
            .ok_or_else(|| CliError::validation("--predictor lstm requires --model".to_string()))?;
        Some(validated(ForecastModel::load(path), "loading model")?)
    } else {
        None
    };

    let mut naive = NaivePredictor;
    let mut ar;
    let mut oracle;
    let mut lstm;
    let predictor: &mut dyn Predictor = match args.predictor.as_str() {
        "naive" => &mut naive,
        "ar" => {
            ar = ArPredictor { order: args.ar_order };
            &mut ar
        }
        "lstm" => {
            lstm = LstmPredictor { model: lstm_model.expect("loaded above") };
            &mut lstm
        }
        other => {
            let sigma2 = other
                .strip_prefix("oracle:")
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| *v >= 0.0)
                .ok_or_else(|| {
                    CliError::validation(format!(
                        "unknown predictor {} (expected lstm, naive, ar, or oracle:SIGMA2)",
                        other
                    ))
                })?;
            oracle = OraclePredictor::new(&scenario.trace, sigma2, args.seed);
            &mut oracle
        }
    };

    let trace = runtime(run_simulation(&scenario, algorithm, predictor, &params))?;
    ensure_out_dir(&args.out)?;
    let path = args.out.join(format!("simulation-{}.csv", trace.algorithm));
    runtime(trace.write_csv(&path))?;
    let reroutes = trace.records.iter().filter(|r| r.rerouted).count();
    println!(
        "wrote {} ({} steps, predictor {} seed {}, time-average admission {:.4}, {} re-routes)",
        path.display(),
        trace.len(),
        args.predictor,
        args.seed,
        trace.time_average_admission(),
        reroutes
    );
    Ok(())
}

pub fn report(args: ReportArgs) -> CliResult {
    ensure_out_dir(&args.out)?;
    let mut produced = Vec::new();

    if let Some(pred_path) = &args.predictions {
        let topology_path = args
            .topology
            .as_ref()
            .ok_or_else(|| CliError::validation("--predictions requires --topology".to_string()))?;
        let trace_path = args
            .trace
            .as_ref()
            .ok_or_else(|| CliError::validation("--predictions requires --trace".to_string()))?;
        let (topology, _) = validated(net::load_topology(topology_path), "loading topology")?;
        let trace = validated(
            xhaul_core::scenario::import_trace(trace_path, &topology, GapPolicy::Reject),
            "importing trace",
        )?;
        let errors = read_prediction_errors(pred_path, &topology, &trace)?;
        let path = args.out.join("prediction-metrics.csv");
        write_atomic(&path, &prediction_metrics_csv(&errors)?)?;
        produced.push(path);
    }

    if let Some(candidate_path) = &args.candidate {
        let reference_path = args
            .reference
            .as_ref()
            .ok_or_else(|| CliError::validation("--candidate requires --reference".to_string()))?;
        let candidate = validated(SimulationTrace::read_csv(candidate_path), "reading candidate")?;
        let reference = validated(SimulationTrace::read_csv(reference_path), "reading reference")?;
        let steps = candidate.len().min(reference.len());
        let z = |t: &SimulationTrace| -> Vec<Vec<f64>> {
            t.records[..steps].iter().map(|r| r.admission.clone()).collect()
        };
        let gains = runtime(gain_metrics(&z(&candidate), &z(&reference)))?;
        let mut text = String::from(
            "candidate,reference,time_average_gain,max_node_average_gain,max_instantaneous_gain,skipped_zero_entries\n",
        );
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            candidate.algorithm,
            reference.algorithm,
            gains.time_average,
            gains.max_node_average,
            gains.max_instantaneous,
            gains.skipped
        );
        let path = args.out.join("gain-metrics.csv");
        write_atomic(&path, &text)?;
        produced.push(path);
    }

    if produced.is_empty() {
        return Err(CliError::validation(
            "nothing to report: pass --predictions or --candidate/--reference".to_string(),
        ));
    }
    for path in produced {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Reads a predictions CSV and aligns it with the trace's true values.
fn read_prediction_errors(
    path: &Path,
    topology: &NetworkTopology,
    trace: &xhaul_core::scenario::AttenuationTrace,
) -> Result<Array3<f64>, CliError> {
    let text = validated(std::fs::read_to_string(path), "reading predictions")?;
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, l)| l)
        .ok_or_else(|| CliError::validation("empty predictions file".to_string()))?;
    if header.trim() != "t,link_id,h,xhat_db" {
        return Err(CliError::validation(format!("unexpected header {:?}", header)));
    }
    // (t, h, link) -> xhat
    let mut rows: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut max_h = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad =
            |m: String| CliError::Validation(format!("line {}: {}", idx + 1, m));
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 columns, found {}", fields.len())));
        }
        let t: usize = fields[0].parse().map_err(|_| bad(format!("bad t {:?}", fields[0])))?;
        let link = topology
            .edge_by_label(fields[1])
            .ok_or_else(|| bad(format!("unknown link {:?}", fields[1])))?;
        let h: usize = fields[2].parse().map_err(|_| bad(format!("bad h {:?}", fields[2])))?;
        let xhat: f64 =
            fields[3].parse().map_err(|_| bad(format!("bad value {:?}", fields[3])))?;
        if h == 0 {
            return Err(bad("horizon index must start at 1".to_string()));
        }
        max_h = max_h.max(h);
        rows.push((t, h - 1, link, xhat));
    }
    if rows.is_empty() {
        return Err(CliError::validation("no prediction rows".to_string()));
    }
    let mut origins: Vec<usize> = rows
        .iter()
        .map(|&(t, ..)| t)
        .filter(|&t| t + max_h < trace.len())
        .collect();
    origins.sort_unstable();
    origins.dedup();
    let origin_index = |t: usize| origins.binary_search(&t).ok();
    let mut errors = Array3::zeros((origins.len(), max_h, trace.num_links()));
    for (t, h, link, xhat) in rows {
        if let Some(row) = origin_index(t) {
            errors[[row, h, link]] = trace.attenuation(t + h + 1, link) - xhat;
        }
    }
    Ok(errors)
}

pub fn selftest() -> CliResult {
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool, detail: String| {
        if ok {
            println!("selftest {}: PASS", name);
        } else {
            println!("selftest {}: FAIL ({})", name, detail);
            failures += 1;
        }
    };

    let (topo, d) = net::examples::toy_triangle();
    let opts = SolveOptions::default();

    let solve_uniform = |cap: f64| -> Result<Vec<f64>, maxmin::MaxMinError> {
        let sub = Subdivision::new(
            0,
            0,
            vec![CapacitySnapshot::uniform(&topo, cap)],
            RoutingMode::Free,
        )
        .expect("static segment");
        Ok(maxmin::solve(&topo, &d, &sub, &opts)?.saturation[0].clone())
    };

    match solve_uniform(0.5) {
        Ok(rates) => {
            let expected = 2.0 / 3.0;
            let ok = rates.iter().all(|z| (z - expected).abs() <= 1e-4);
            check("max-min rates 2/3 at full capacity", ok, format!("{:?}", rates));
        }
        Err(e) => check("max-min rates 2/3 at full capacity", false, e.to_string()),
    }
    match solve_uniform(0.475) {
        Ok(rates) => {
            let expected = 2.0 / 3.0 * 0.95;
            let ok = rates.iter().all(|z| (z - expected).abs() <= 1e-4);
            check("max-min rates 2/3*0.95 with scratch reserved", ok, format!("{:?}", rates));
        }
        Err(e) => check("max-min rates 2/3*0.95 with scratch reserved", false, e.to_string()),
    }

    let table = ModulationTable::standard();
    let s4 = table.state_for_constellation(4).expect("table row");
    let s1024 = table.state_for_constellation(1024).expect("table row");
    let up = am_step(&table, s4, -60.0, StepMode::FixedPoint);
    check(
        "modulation climbs 4 -> 256 at -60 dBm",
        table.constellation(up) == 256,
        format!("got {}", table.constellation(up)),
    );
    let down = am_step(&table, s1024, -55.0, StepMode::FixedPoint);
    check(
        "modulation steps 1024 -> 512 at -55 dBm",
        table.constellation(down) == 512,
        format!("got {}", table.constellation(down)),
    );
    check(
        "capacity of qam-128 is 157/225",
        (capacity_of(&table, table.state_for_constellation(128).unwrap()) - 157.0 / 225.0).abs()
            < 1e-12,
        String::new(),
    );
    match net::swan_stage_bound(0.05) {
        Ok(stages) => check("stage bound at s=0.05 is 19", stages == 19, format!("got {}", stages)),
        Err(e) => check("stage bound at s=0.05 is 19", false, e.to_string()),
    }

    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::Runtime(anyhow::anyhow!("{} selftest checks failed", failures)))
    }
}
