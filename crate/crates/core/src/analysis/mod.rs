//! Saturation throughput of the fragment-sensing MAC.

pub mod contention;
pub mod montecarlo;
pub mod nested;
pub mod packet;
pub mod pattern;

pub use contention::{base_overhead, contention_success_prob, reservation_overhead};
pub use montecarlo::{MonteCarloEstimate, SlotGrid};
pub use nested::{QuadratureEngine, QuadratureOptions};
pub use packet::{Affine2, PacketModel};
pub use pattern::{
    enumerate_outcomes, enumerate_patterns, outcome_probability_and_bits, ChangeInstantVector, PuPattern,
    SensingOutcomeSet,
};

use crate::error::{Error, Result};
use crate::model::NetworkConfig;
use crate::scalar::Scalar;
use crate::sensing::{SensingCalibration, VerdictModel};

/// How the expectation over PU holding times is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    MonteCarlo { samples: usize, seed: u64 },
    Quadrature(QuadratureOptions),
}

impl Default for Backend {
    fn default() -> Self {
        Self::MonteCarlo {
            samples: 200_000,
            seed: 1,
        }
    }
}

impl Backend {
    pub fn label(&self) -> &'static str {
        match self {
            Self::MonteCarlo { .. } => "montecarlo",
            Self::Quadrature(_) => "quadrature",
        }
    }
}

/// One backoff-slot term of the normalized throughput sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackoffTerm<S> {
    pub i0: usize,
    pub success_prob: S,
    pub overhead: S,
    pub conditional_throughput: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport<S> {
    /// Bits/s/Hz.
    pub normalized_throughput: S,
    pub per_backoff_terms: Vec<BackoffTerm<S>>,
    /// Relative.
    pub integration_error_estimate: S,
    /// Monte Carlo only.
    pub standard_error: Option<S>,
    pub calibration: Option<SensingCalibration<S>>,
}

fn slot_grid<S: Scalar>(cfg: &NetworkConfig<S>) -> Result<SlotGrid<S>> {
    let w = cfg.mac.contention_window;
    let packet = cfg.mac.packet_length();
    let weights = (0..w)
        .map(|i0| {
            let p = contention_success_prob::<S>(i0, cfg.num_su_pairs, w)?;
            Ok(p / (reservation_overhead(i0, &cfg.mac) + packet))
        })
        .collect::<Result<Vec<S>>>()?;
    Ok(SlotGrid {
        base: base_overhead(&cfg.mac),
        slot: cfg.mac.mini_slot,
        weights,
    })
}

fn report<S: Scalar>(
    cfg: &NetworkConfig<S>,
    conditional: Vec<S>,
    nt: S,
    error: S,
    standard_error: Option<S>,
) -> Result<ThroughputReport<S>> {
    let w = cfg.mac.contention_window;
    let per_backoff_terms = (0..w)
        .zip(conditional)
        .map(|(i0, c)| {
            Ok(BackoffTerm {
                i0,
                success_prob: contention_success_prob(i0, cfg.num_su_pairs, w)?,
                overhead: reservation_overhead(i0, &cfg.mac),
                conditional_throughput: c,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThroughputReport {
        normalized_throughput: nt,
        per_backoff_terms,
        integration_error_estimate: error,
        standard_error,
        calibration: None,
    })
}

/// Normalized throughput for an arbitrary verdict model.
pub fn normalized_throughput_with<S: Scalar, V: VerdictModel<S>>(
    cfg: &NetworkConfig<S>,
    verdicts: &V,
    backend: &Backend,
) -> Result<ThroughputReport<S>> {
    cfg.validate()?;
    let model = PacketModel::new(cfg, verdicts);
    let grid = slot_grid(cfg)?;
    let p0 = cfg.prob_idle();
    match *backend {
        Backend::MonteCarlo { samples, seed } => {
            let est = montecarlo::estimate(&model, &cfg.pu, p0, &grid, samples, seed)?;
            let nt = est.weighted_total;
            let rel = if nt > S::zero() {
                est.standard_error / nt
            } else {
                S::zero()
            };
            report(cfg, est.per_slot, nt, rel, Some(est.standard_error))
        }
        Backend::Quadrature(opts) => {
            let weighted = |engine: &QuadratureEngine<S>| -> (Vec<S>, S) {
                let cond: Vec<S> = (0..grid.len()).map(|i| engine.conditional(grid.start(i))).collect();
                let nt = cond.iter().zip(&grid.weights).map(|(&c, &w)| c * w).sum();
                (cond, nt)
            };
            let engine = QuadratureEngine::build(&model, &cfg.pu, p0, &opts)?;
            let (cond, nt) = weighted(&engine);
            let rel = if opts.estimate_error {
                let coarse_opts = QuadratureOptions {
                    nodes: (opts.nodes / 2).max(2),
                    ..opts
                };
                let coarse = QuadratureEngine::build(&model, &cfg.pu, p0, &coarse_opts)?;
                let (_, nt_coarse) = weighted(&coarse);
                if nt > S::zero() {
                    ((nt - nt_coarse) / nt).abs()
                } else {
                    S::zero()
                }
            } else {
                S::zero()
            };
            report(cfg, cond, nt, rel, None)
        }
    }
}

/// Calibrates sensing at the configured `(T, P_s)` and evaluates the
/// normalized throughput.
pub fn normalized_throughput<S: Scalar>(cfg: &NetworkConfig<S>, backend: &Backend) -> Result<ThroughputReport<S>> {
    cfg.validate()?;
    let cal = cfg.calibrate()?;
    let mut r = normalized_throughput_with(cfg, &cal, backend)?;
    r.calibration = Some(cal);
    Ok(r)
}

/// Conditional throughput `T^{i0}` for one backoff slot.
pub fn conditional_throughput<S: Scalar, V: VerdictModel<S>>(
    i0: usize,
    cfg: &NetworkConfig<S>,
    verdicts: &V,
    backend: &Backend,
) -> Result<(S, Option<S>)> {
    cfg.validate()?;
    if i0 >= cfg.mac.contention_window {
        return Err(Error::OutOfRange {
            what: "backoff slot",
            detail: format!("slot {i0} outside the window of {}", cfg.mac.contention_window),
        });
    }
    let model = PacketModel::new(cfg, verdicts);
    let p0 = cfg.prob_idle();
    let start = reservation_overhead(i0, &cfg.mac);
    match *backend {
        Backend::MonteCarlo { samples, seed } => {
            let grid = SlotGrid {
                base: start,
                slot: S::zero(),
                weights: vec![S::one()],
            };
            let est = montecarlo::estimate(&model, &cfg.pu, p0, &grid, samples, seed)?;
            Ok((est.weighted_total, Some(est.standard_error)))
        }
        Backend::Quadrature(opts) => {
            let engine = QuadratureEngine::build(&model, &cfg.pu, p0, &opts)?;
            Ok((engine.conditional(start), None))
        }
    }
}
