//! Search over contention window, fragment time and transmit power for the
//! configuration with the largest normalized throughput.

use rayon::prelude::*;

use crate::analysis::{normalized_throughput, Backend, QuadratureOptions};
use crate::error::{Error, Result};
use crate::model::{db_to_linear, linear_to_db, NetworkConfig};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    pub backend: Backend,
    /// Lowest power searched, dB. Defaults to 40 dB below the maximum.
    pub min_power_db: Option<f64>,
    pub power_tolerance_db: f64,
    /// Points of the local grid polishing the golden-section result.
    pub final_grid_points: usize,
    /// Points of the coarse fragment-time grid over `(0, T_eva]`.
    pub t_grid_points: usize,
    /// Evaluate only these fragment times instead of searching.
    pub fixed_fragment_times: Option<Vec<f64>>,
    /// Evaluate only these powers (linear) instead of searching.
    pub fixed_powers: Option<Vec<f64>>,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Quadrature(QuadratureOptions {
                estimate_error: false,
                ..QuadratureOptions::default()
            }),
            min_power_db: None,
            power_tolerance_db: 0.05,
            final_grid_points: 9,
            t_grid_points: 21,
            fixed_fragment_times: None,
            fixed_powers: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub contention_window: usize,
    pub fragment_time: f64,
    pub tx_power: f64,
    /// `-inf` when the threshold cannot be calibrated.
    pub throughput: f64,
}

impl TracePoint {
    pub fn feasible(&self) -> bool {
        self.throughput.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerOptimum {
    pub tx_power: f64,
    pub throughput: f64,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_w: usize,
    pub best_fragment_time: f64,
    pub best_tx_power: f64,
    pub best_throughput: f64,
    pub search_trace: Vec<TracePoint>,
}

/// `{1, 2, 4, …}` up to and including `w_max` (which is appended when it is
/// not a power of two).
pub fn power_of_two_windows(w_max: usize) -> Vec<usize> {
    let mut v: Vec<usize> = std::iter::successors(Some(1usize), |&w| w.checked_mul(2))
        .take_while(|&w| w <= w_max)
        .collect();
    if v.last() != Some(&w_max) && w_max > 0 {
        v.push(w_max);
    }
    v
}

/// Normalized throughput at one point, or `-inf` if sensing cannot meet the
/// detection target there.
pub fn evaluate(cfg: &NetworkConfig<f64>, w: usize, fragment_time: f64, tx_power: f64, backend: &Backend) -> Result<f64> {
    let point = cfg
        .with_contention_window(w)
        .with_fragment_time(fragment_time)
        .with_tx_power(tx_power);
    match normalized_throughput(&point, backend) {
        Ok(r) => Ok(r.normalized_throughput),
        Err(Error::Calibration(_)) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

pub fn optimize_power(
    cfg: &NetworkConfig<f64>,
    fragment_time: f64,
    w: usize,
    options: &OptimizerOptions,
) -> Result<PowerOptimum> {
    let mut trace = Vec::new();
    let eval = |p: f64, trace: &mut Vec<TracePoint>| -> Result<f64> {
        let nt = evaluate(cfg, w, fragment_time, p, &options.backend)?;
        trace.push(TracePoint {
            contention_window: w,
            fragment_time,
            tx_power: p,
            throughput: nt,
        });
        Ok(nt)
    };

    if let Some(powers) = &options.fixed_powers {
        for &p in powers {
            eval(p, &mut trace)?;
        }
    } else {
        let hi = linear_to_db(cfg.radio.max_tx_power);
        let lo = options.min_power_db.unwrap_or(hi - 40.0).min(hi);
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut f1 = eval(db_to_linear(x1), &mut trace)?;
        let mut f2 = eval(db_to_linear(x2), &mut trace)?;
        while b - a > options.power_tolerance_db {
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INV_PHI * (b - a);
                f1 = eval(db_to_linear(x1), &mut trace)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INV_PHI * (b - a);
                f2 = eval(db_to_linear(x2), &mut trace)?;
            }
        }
        let centre = if f1 >= f2 { x1 } else { x2 };
        let half = (hi - lo) / 20.0;
        let n = options.final_grid_points.max(1);
        for i in 0..n {
            let x = if n == 1 {
                centre
            } else {
                centre - half + 2.0 * half * i as f64 / (n - 1) as f64
            };
            if x >= lo && x <= hi {
                eval(db_to_linear(x), &mut trace)?;
            }
        }
        eval(cfg.radio.max_tx_power, &mut trace)?;
    }

    let best = best_point(&trace).ok_or_else(|| {
        Error::Optimization(format!(
            "no transmit power meets the detection target at T = {fragment_time} s, W = {w}"
        ))
    })?;
    Ok(PowerOptimum {
        tx_power: best.tx_power,
        throughput: best.throughput,
        trace,
    })
}

fn best_point(trace: &[TracePoint]) -> Option<TracePoint> {
    trace
        .iter()
        .filter(|p| p.feasible())
        .copied()
        .reduce(|best, p| if p.throughput > best.throughput { p } else { best })
}

fn power_search_at(
    cfg: &NetworkConfig<f64>,
    t: f64,
    w: usize,
    options: &OptimizerOptions,
) -> Result<(f64, Vec<TracePoint>)> {
    match optimize_power(cfg, t, w, options) {
        Ok(p) => Ok((p.throughput, p.trace)),
        Err(Error::Optimization(_)) => Ok((f64::NEG_INFINITY, Vec::new())),
        Err(e) => Err(e),
    }
}

fn optimize_window(
    cfg: &NetworkConfig<f64>,
    w: usize,
    t_resolution: f64,
    options: &OptimizerOptions,
) -> Result<Vec<TracePoint>> {
    let t_eva = cfg.pu.evacuation_time;
    let grid: Vec<f64> = match &options.fixed_fragment_times {
        Some(ts) => ts.clone(),
        None => {
            let n = options.t_grid_points.max(1);
            (1..=n).map(|k| t_eva * k as f64 / n as f64).collect()
        }
    };
    let scored: Vec<(f64, Vec<TracePoint>)> = grid
        .par_iter()
        .map(|&t| power_search_at(cfg, t, w, options))
        .collect::<Result<_>>()?;
    let mut trace: Vec<TracePoint> = scored.iter().flat_map(|(_, tr)| tr.iter().copied()).collect();
    if options.fixed_fragment_times.is_some() || grid.len() < 2 {
        return Ok(trace);
    }
    let (k_best, _) = scored
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, (v, _))| if *v > acc.1 { (k, *v) } else { acc });
    if !scored[k_best].0.is_finite() {
        return Ok(trace);
    }
    let mut a = if k_best == 0 { grid[0] * 0.05 } else { grid[k_best - 1] };
    let mut b = if k_best + 1 < grid.len() { grid[k_best + 1] } else { grid[k_best] };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let run = |t: f64, trace: &mut Vec<TracePoint>| -> Result<f64> {
        let (v, tr) = power_search_at(cfg, t, w, options)?;
        trace.extend(tr);
        Ok(v)
    };
    let mut f1 = run(x1, &mut trace)?;
    let mut f2 = run(x2, &mut trace)?;
    while b - a > t_resolution {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = run(x1, &mut trace)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = run(x2, &mut trace)?;
        }
    }
    Ok(trace)
}

/// Nested search: every window candidate, a fragment-time grid refined by
/// golden section to `t_resolution`, and a power search at each time.
pub fn optimize(
    cfg: &NetworkConfig<f64>,
    w_candidates: &[usize],
    t_resolution: f64,
    options: &OptimizerOptions,
) -> Result<OptimizationResult> {
    if w_candidates.is_empty() {
        return Err(Error::Optimization("no contention-window candidates".into()));
    }
    if !(t_resolution > 0.0) {
        return Err(Error::Optimization(format!(
            "fragment-time resolution must be positive, got {t_resolution}"
        )));
    }
    let mut search_trace = Vec::new();
    for &w in w_candidates {
        if w == 0 || w > cfg.mac.max_contention_window {
            return Err(Error::Optimization(format!(
                "window {w} outside [1, {}]",
                cfg.mac.max_contention_window
            )));
        }
        search_trace.extend(optimize_window(cfg, w, t_resolution, options)?);
    }
    let best = best_point(&search_trace)
        .ok_or_else(|| Error::Optimization("no feasible configuration in the search space".into()))?;
    Ok(OptimizationResult {
        best_w: best.contention_window,
        best_fragment_time: best.fragment_time,
        best_tx_power: best.tx_power,
        best_throughput: best.throughput,
        search_trace,
    })
}
