use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use fdmac::analysis::{normalized_throughput, ThroughputReport};
use fdmac::config_file::{kind_of, parse_duration, Scenario};
use fdmac::model::linear_to_db;
use fdmac::optimizer::{optimize, power_of_two_windows, OptimizerOptions};
use fdmac::sim::{self, SimStats};

use crate::args::*;
use crate::output::{num, opt_num, Table};

pub struct RunContext {
    pub wall_time: bool,
}

fn load(args: &ScenarioArgs) -> Result<Scenario> {
    let mut s = match &args.config {
        Some(p) => Scenario::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => Scenario::default(),
    };
    for o in &args.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {o:?}"))?;
        s.set(k.trim(), v).map_err(|m| anyhow!("--set {}: {m}", k.trim()))?;
    }
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    let issues = s.violations();
    if !issues.is_empty() {
        return Err(fdmac::Error::Config(issues).into());
    }
    Ok(s)
}

/// Plain seconds or a duration with unit.
fn parse_time(raw: &str) -> Result<f64> {
    parse_duration(raw)
        .or_else(|| raw.trim().parse().ok())
        .filter(|t: &f64| *t > 0.0 && t.is_finite())
        .ok_or_else(|| anyhow!("expected a positive duration, got {raw:?}"))
}

fn wall_header(t: &mut Table, ctx: &RunContext) {
    if ctx.wall_time {
        t.header.push("wall_time_s".into());
    }
}

fn with_wall(mut row: Vec<String>, ctx: &RunContext, started: Instant) -> Vec<String> {
    if ctx.wall_time {
        row.push(num(started.elapsed().as_secs_f64()));
    }
    row
}

fn column_names() -> Vec<String> {
    Scenario::default().columns().into_iter().map(|(k, _)| k).collect()
}

fn column_values(s: &Scenario) -> Vec<String> {
    s.columns().into_iter().map(|(_, v)| v).collect()
}

pub fn validate(args: &ScenarioArgs) -> Result<()> {
    let s = load(args)?;
    let n = &s.network;
    let i = n.radio.self_interference();
    let p = n.radio.pu_received_power;
    println!("status = ok");
    println!("self_interference = {} ({} dB)", num(i), num(linear_to_db(i)));
    let g_fd = p / (n.radio.noise_power + i);
    let g_hd = p / n.radio.noise_power;
    println!("gamma_ps_fd = {} ({} dB)", num(g_fd), num(linear_to_db(g_fd)));
    println!("gamma_ps_hd = {} ({} dB)", num(g_hd), num(linear_to_db(g_hd)));
    println!("prob_idle = {}", num(n.prob_idle()));
    println!("packet_length_ms = {}", num(n.mac.packet_length() * 1e3));
    let c = n.calibrate().context("threshold calibration")?;
    println!(
        "threshold_fd = {} (avg detection {})",
        num(c.threshold_fd),
        num(c.achieved_avg_detection_fd)
    );
    println!(
        "threshold_hd = {} (avg detection {})",
        num(c.threshold_hd),
        num(c.achieved_avg_detection_hd)
    );
    Ok(())
}

const ANALYSIS_COLUMNS: [&str; 9] = [
    "backend",
    "normalized_throughput",
    "standard_error",
    "integration_error_estimate",
    "prob_idle",
    "threshold_fd",
    "threshold_hd",
    "avg_detection_fd",
    "avg_detection_hd",
];

fn analysis_values(s: &Scenario, r: &ThroughputReport<f64>) -> Vec<String> {
    let c = r.calibration.as_ref();
    vec![
        s.backend().label().to_string(),
        num(r.normalized_throughput),
        opt_num(r.standard_error),
        num(r.integration_error_estimate),
        num(s.network.prob_idle()),
        opt_num(c.map(|c| c.threshold_fd)),
        opt_num(c.map(|c| c.threshold_hd)),
        opt_num(c.map(|c| c.achieved_avg_detection_fd)),
        opt_num(c.map(|c| c.achieved_avg_detection_hd)),
    ]
}

pub fn analyze(args: &AnalyzeArgs, ctx: &RunContext) -> Result<()> {
    let s = load(&args.scenario)?;
    let started = Instant::now();
    let r = normalized_throughput(&s.network, &s.backend())?;
    let mut t = Table::new(column_names());
    t.header.extend(ANALYSIS_COLUMNS.iter().map(|c| c.to_string()));
    wall_header(&mut t, ctx);
    let mut row = column_values(&s);
    row.extend(analysis_values(&s, &r));
    t.push(with_wall(row, ctx, started));
    t.write_to(args.output.out.as_deref())?;
    if let Some(path) = &args.terms {
        let mut terms = Table::new(["i0", "success_prob", "overhead_ms", "conditional_throughput"]);
        for b in &r.per_backoff_terms {
            terms.push(vec![
                b.i0.to_string(),
                num(b.success_prob),
                num(b.overhead * 1e3),
                num(b.conditional_throughput),
            ]);
        }
        terms.write_to(Some(path))?;
    }
    Ok(())
}

/// One protocol's replications, with the sensing time used (HD only).
struct SimBatch {
    protocol: &'static str,
    sensing_time: Option<f64>,
    runs: Vec<SimStats>,
}

fn simulate_batches(s: &Scenario, a: &SimArgs) -> Result<Vec<SimBatch>> {
    let horizon = parse_time(&a.horizon)?;
    if a.replications == 0 {
        bail!("at least one replication required");
    }
    let cfg = &s.network;
    let mut out = Vec::new();
    if matches!(a.protocol, ProtocolArg::Fd | ProtocolArg::Both) {
        let calib = cfg.calibrate()?;
        let runs = sim::replicate(a.replications, s.seed, |seed| sim::run_fd(cfg, &calib, horizon, seed))?;
        out.push(SimBatch {
            protocol: "fd",
            sensing_time: None,
            runs,
        });
    }
    if matches!(a.protocol, ProtocolArg::Hd | ProtocolArg::Both) {
        let (ts, runs) = match &a.sensing_time {
            Some(raw) => {
                let ts = parse_time(raw)?;
                let calib = sim::calibrate_hd(cfg, ts)?;
                let runs = sim::replicate(a.replications, s.seed, |seed| sim::run_hd(cfg, &calib, ts, horizon, seed))?;
                (ts, runs)
            }
            None => {
                let n = a.sensing_grid.max(1);
                let t = cfg.mac.fragment_time;
                let grid: Vec<f64> = (1..=n).map(|i| t * i as f64 / (n + 1) as f64).collect();
                sim::optimize_sensing_time(cfg, &grid, horizon, a.replications, s.seed)?
            }
        };
        out.push(SimBatch {
            protocol: "hd",
            sensing_time: Some(ts),
            runs,
        });
    }
    Ok(out)
}

const STATS_COLUMNS: [&str; 11] = [
    "bits_delivered",
    "elapsed_s",
    "cycles",
    "collisions",
    "missed_detections",
    "pu_interference_time_s",
    "false_alarm_stalls",
    "activations",
    "max_activation_interference_s",
    "pu_idle_time_s",
    "normalized_throughput",
];

fn stats_values(st: &SimStats) -> Vec<String> {
    vec![
        num(st.bits_delivered),
        num(st.elapsed),
        st.cycles.to_string(),
        st.collisions.to_string(),
        st.missed_detections.to_string(),
        num(st.pu_interference_time),
        st.false_alarm_stalls.to_string(),
        st.activations.to_string(),
        num(st.max_activation_interference),
        num(st.pu_idle_time),
        num(st.normalized_throughput()),
    ]
}

pub fn simulate(args: &SimulateArgs, ctx: &RunContext) -> Result<()> {
    let s = load(&args.scenario)?;
    let started = Instant::now();
    let batches = simulate_batches(&s, &args.sim)?;
    let mut t = Table::new(["replication", "seed", "protocol", "sensing_time_ms"]);
    t.header.extend(column_names());
    t.header.extend(STATS_COLUMNS.iter().map(|c| c.to_string()));
    wall_header(&mut t, ctx);
    let cols = column_values(&s);
    for b in &batches {
        let (mean, se) = sim::summarize(&b.runs);
        eprintln!(
            "{}: normalized throughput {} ± {} over {} replications",
            b.protocol,
            num(mean),
            num(se),
            b.runs.len()
        );
        for (r, st) in b.runs.iter().enumerate() {
            let mut row = vec![
                r.to_string(),
                sim::replication_seed(s.seed, r as u64).to_string(),
                b.protocol.to_string(),
                opt_num(b.sensing_time.map(|x| x * 1e3)),
            ];
            row.extend(cols.iter().cloned());
            row.extend(stats_values(st));
            t.push(with_wall(row, ctx, started));
        }
    }
    t.write_to(args.output.out.as_deref())
}

fn windows_for(s: &Scenario, a: &OptimizerArgs) -> Vec<usize> {
    a.windows
        .clone()
        .unwrap_or_else(|| power_of_two_windows(s.network.mac.max_contention_window))
}

/// The scenario moved to its optimum, and the optimum's throughput.
fn optimize_scenario(s: &Scenario, a: &OptimizerArgs) -> Result<(Scenario, fdmac::optimizer::OptimizationResult)> {
    let res = optimize(
        &s.network,
        &windows_for(s, a),
        parse_time(&a.t_resolution)?,
        &OptimizerOptions::default(),
    )?;
    let mut best = s.clone();
    best.network = best
        .network
        .with_contention_window(res.best_w)
        .with_fragment_time(res.best_fragment_time)
        .with_tx_power(res.best_tx_power);
    Ok((best, res))
}

pub fn run_optimize(args: &OptimizeArgs, ctx: &RunContext) -> Result<()> {
    let s = load(&args.scenario)?;
    let started = Instant::now();
    let (best, res) = optimize_scenario(&s, &args.search)?;
    let mut t = Table::new(column_names());
    t.header.push("normalized_throughput".into());
    wall_header(&mut t, ctx);
    let mut row = column_values(&best);
    row.push(num(res.best_throughput));
    t.push(with_wall(row, ctx, started));
    t.write_to(args.output.out.as_deref())?;
    if let Some(path) = &args.trace {
        let mut tr = Table::new([
            "contention_window",
            "fragment_time_ms",
            "tx_power_db",
            "normalized_throughput",
            "feasible",
        ]);
        for p in &res.search_trace {
            tr.push(vec![
                p.contention_window.to_string(),
                num(p.fragment_time * 1e3),
                num(linear_to_db(p.tx_power)),
                num(p.throughput),
                p.feasible().to_string(),
            ]);
        }
        tr.write_to(Some(path))?;
    }
    Ok(())
}

/// A sweep point: the swept `(key, value)` if any, and the scenario.
type Point = (Option<(String, String)>, Scenario);

fn grid_points(base: &Scenario, g: &GridArgs) -> Result<Vec<Point>> {
    let values: Vec<&str> = g
        .values
        .split([',', ';'])
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .collect();
    let Some(param) = &g.param else {
        if !values.is_empty() {
            bail!("--values given without --param");
        }
        return Ok(vec![(None, base.clone())]);
    };
    if kind_of(param).is_none() {
        bail!("unknown sweep parameter {param:?}");
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let mut s = base.clone();
            s.set(param, v)
                .map_err(|m| anyhow!("sweep point {i} ({param} = {v}): {m}"))?;
            let issues = s.violations();
            if !issues.is_empty() {
                return Err(anyhow!(fdmac::Error::Config(issues)).context(format!("sweep point {i} ({param} = {v})")));
            }
            Ok((Some((param.clone(), v.to_string())), s))
        })
        .collect()
}

fn point_label(p: &Point) -> (String, String) {
    p.0.clone().unwrap_or_default()
}

pub fn sweep(args: &SweepArgs, ctx: &RunContext) -> Result<()> {
    let base = load(&args.scenario)?;
    let points = grid_points(&base, &args.grid)?;
    let mut t = Table::new(["point", "mode", "protocol", "param", "value"]);
    t.header.extend(column_names());
    t.header.extend(
        ["sensing_time_ms", "normalized_throughput", "standard_error"]
            .iter()
            .map(|c| c.to_string()),
    );
    wall_header(&mut t, ctx);

    let per_point: Vec<Result<Vec<Vec<String>>>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let (param, value) = point_label(p);
            let head = |mode: &str, protocol: &str| vec![i.to_string(), mode.into(), protocol.into(), param.clone(), value.clone()];
            let s = &p.1;
            let mut rows = Vec::new();
            let mut run = || -> Result<()> {
                if matches!(args.mode, SweepMode::Analysis | SweepMode::Both) {
                    let started = Instant::now();
                    let r = normalized_throughput(&s.network, &s.backend())?;
                    let mut row = head("analysis", "fd");
                    row.extend(column_values(s));
                    row.extend([String::new(), num(r.normalized_throughput), opt_num(r.standard_error)]);
                    rows.push(with_wall(row, ctx, started));
                }
                if matches!(args.mode, SweepMode::Simulation | SweepMode::Both) {
                    let started = Instant::now();
                    for b in simulate_batches(s, &args.sim)? {
                        let (mean, se) = sim::summarize(&b.runs);
                        let mut row = head("simulation", b.protocol);
                        row.extend(column_values(s));
                        row.extend([opt_num(b.sensing_time.map(|x| x * 1e3)), num(mean), num(se)]);
                        rows.push(with_wall(row, ctx, started));
                    }
                }
                if args.mode == SweepMode::Optimize {
                    let started = Instant::now();
                    let (best, res) = optimize_scenario(s, &args.search)?;
                    let mut row = head("optimize", "fd");
                    row.extend(column_values(&best));
                    row.extend([String::new(), num(res.best_throughput), String::new()]);
                    rows.push(with_wall(row, ctx, started));
                }
                Ok(())
            };
            run().with_context(|| match &p.0 {
                Some((k, v)) => format!("sweep point {i} ({k} = {v})"),
                None => format!("sweep point {i}"),
            })?;
            Ok(rows)
        })
        .collect();
    for rows in per_point {
        for r in rows? {
            t.push(r);
        }
    }
    t.write_to(args.output.out.as_deref())
}

pub fn crossval(args: &CrossvalArgs, ctx: &RunContext) -> Result<()> {
    if args.sim.protocol != ProtocolArg::Fd {
        bail!("cross-validation needs the full-duplex protocol; the half-duplex variant has no analytical model here");
    }
    let base = load(&args.scenario)?;
    let points = grid_points(&base, &args.grid)?;
    let mut t = Table::new(["point", "param", "value"]);
    t.header.extend(column_names());
    t.header.extend(
        [
            "analysis_nt",
            "analysis_se",
            "sim_nt",
            "sim_se",
            "rel_diff",
            "combined_sigma",
            "agree",
        ]
        .iter()
        .map(|c| c.to_string()),
    );
    wall_header(&mut t, ctx);
    let results: Vec<Result<(bool, Vec<String>)>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let started = Instant::now();
            let s = &p.1;
            let (param, value) = point_label(p);
            let a = normalized_throughput(&s.network, &s.backend())
                .with_context(|| format!("crossval point {i}: analysis"))?;
            let batches = simulate_batches(s, &args.sim).with_context(|| format!("crossval point {i}: simulation"))?;
            let (sim_nt, sim_se) = sim::summarize(&batches[0].runs);
            let a_nt = a.normalized_throughput;
            let a_se = a.standard_error.unwrap_or(0.0);
            let rel = if a_nt != 0.0 { sim_nt / a_nt - 1.0 } else { f64::NAN };
            let sigma = (a_se * a_se + sim_se * sim_se).sqrt();
            let agree = rel.abs() <= args.tolerance || (sim_nt - a_nt).abs() <= 3.0 * sigma;
            let mut row = vec![i.to_string(), param, value];
            row.extend(column_values(s));
            row.extend([
                num(a_nt),
                opt_num(a.standard_error),
                num(sim_nt),
                num(sim_se),
                num(rel),
                num(sigma),
                agree.to_string(),
            ]);
            Ok((agree, with_wall(row, ctx, started)))
        })
        .collect();
    let mut disagreements = 0;
    for r in results {
        let (agree, row) = r?;
        disagreements += usize::from(!agree);
        t.push(row);
    }
    let total = t.rows.len();
    t.write_to(args.output.out.as_deref())?;
    if disagreements > 0 {
        bail!("{disagreements} of {total} points disagree beyond tolerance");
    }
    Ok(())
}
