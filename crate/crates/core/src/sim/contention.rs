//! Per-SU DCF state and resolution of one backoff countdown.

use rand::Rng;

use crate::analysis::contention::contention_success_prob;
use crate::error::{Error, Result};
use crate::model::NetworkConfig;
use crate::sensing::SensingMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuState {
    pub backoff_counter: usize,
    /// Always 0: a single backoff stage.
    pub backoff_stage: u8,
    pub frozen: bool,
    pub transmitting: bool,
    pub sensing_mode: SensingMode,
}

impl SuState {
    pub fn new<R: Rng + ?Sized>(w: usize, rng: &mut R) -> Self {
        Self {
            backoff_counter: rng.gen_range(0..w),
            backoff_stage: 0,
            frozen: false,
            transmitting: false,
            sensing_mode: SensingMode::FullDuplex,
        }
    }

    pub fn redraw<R: Rng + ?Sized>(&mut self, w: usize, rng: &mut R) {
        self.backoff_counter = rng.gen_range(0..w);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoundOutcome {
    Success { slot: usize, winner: usize },
    Collision { slot: usize, contenders: Vec<usize> },
}

/// Smallest counter among the SUs.
pub fn min_counter(sus: &[SuState]) -> usize {
    sus.iter().map(|s| s.backoff_counter).min().unwrap_or(0)
}

/// Counts every SU down by `slots` idle mini-slots.
pub fn count_down(sus: &mut [SuState], slots: usize) {
    for s in sus {
        debug_assert!(!s.frozen, "counter decremented while frozen");
        s.backoff_counter = s.backoff_counter.saturating_sub(slots);
    }
}

pub fn set_frozen(sus: &mut [SuState], frozen: bool) {
    for s in sus {
        s.frozen = frozen;
    }
}

/// Counts down to the current minimum and reports who transmits an RTS.
pub fn resolve(sus: &mut [SuState]) -> RoundOutcome {
    let slot = min_counter(sus);
    count_down(sus, slot);
    let zero: Vec<usize> = sus
        .iter()
        .enumerate()
        .filter(|(_, s)| s.backoff_counter == 0)
        .map(|(i, _)| i)
        .collect();
    if zero.len() == 1 {
        RoundOutcome::Success { slot, winner: zero[0] }
    } else {
        RoundOutcome::Collision { slot, contenders: zero }
    }
}

/// Slot-by-slot tally of independent contention rounds with fresh draws.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionHistogram {
    pub num_su_pairs: usize,
    pub contention_window: usize,
    pub rounds: u64,
    pub wins: Vec<u64>,
    pub collisions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramCheck {
    /// `(first slot, last slot, observed, expected, sigma)` per merged bin.
    pub bins: Vec<(usize, usize, u64, f64, f64)>,
    pub collision_observed: u64,
    pub collision_expected: f64,
    pub collision_sigma: f64,
}

impl HistogramCheck {
    pub fn worst_z(&self) -> f64 {
        let mut worst = z(self.collision_observed, self.collision_expected, self.collision_sigma);
        for &(_, _, o, e, s) in &self.bins {
            worst = worst.max(z(o, e, s));
        }
        worst
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.worst_z() <= sigmas
    }
}

fn z(observed: u64, expected: f64, sigma: f64) -> f64 {
    let d = (observed as f64 - expected).abs();
    if sigma > 0.0 {
        d / sigma
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

impl CollisionHistogram {
    pub fn frequency(&self, i0: usize) -> f64 {
        self.wins.get(i0).map_or(0.0, |&c| c as f64 / self.rounds as f64)
    }

    pub fn collision_frequency(&self) -> f64 {
        self.collisions as f64 / self.rounds as f64
    }

    /// Binomial comparison against the closed form. Adjacent slots are merged
    /// until each bin expects at least `min_expected` wins.
    pub fn check(&self, min_expected: f64) -> Result<HistogramCheck> {
        let n = self.rounds as f64;
        let mut bins = Vec::new();
        let mut total_p = 0.0;
        let (mut start, mut obs, mut p) = (0usize, 0u64, 0.0f64);
        for i0 in 0..self.contention_window {
            let pi: f64 = contention_success_prob(i0, self.num_su_pairs, self.contention_window)?;
            total_p += pi;
            obs += self.wins[i0];
            p += pi;
            let last = i0 + 1 == self.contention_window;
            if n * p >= min_expected || last {
                bins.push((start, i0, obs, n * p, (n * p * (1.0 - p)).sqrt()));
                start = i0 + 1;
                obs = 0;
                p = 0.0;
            }
        }
        let pc = (1.0 - total_p).max(0.0);
        Ok(HistogramCheck {
            bins,
            collision_observed: self.collisions,
            collision_expected: n * pc,
            collision_sigma: (n * pc * (1.0 - pc)).sqrt(),
        })
    }
}

/// Independent contention rounds: every SU draws a fresh counter, and the
/// smallest counter wins if it is unique.
pub fn measure_collision_model(cfg: &NetworkConfig<f64>, rounds: u64, seed: u64) -> Result<CollisionHistogram> {
    if rounds == 0 {
        return Err(Error::Simulation("at least one contention round required".into()));
    }
    cfg.validate()?;
    let w = cfg.mac.contention_window;
    let mut rng = super::stream_rng(seed, super::STREAM_BACKOFF);
    let mut sus: Vec<SuState> = (0..cfg.num_su_pairs).map(|_| SuState::new(w, &mut rng)).collect();
    let mut wins = vec![0u64; w];
    let mut collisions = 0;
    for _ in 0..rounds {
        for s in sus.iter_mut() {
            s.redraw(w, &mut rng);
        }
        match resolve(&mut sus) {
            RoundOutcome::Success { slot, .. } => wins[slot] += 1,
            RoundOutcome::Collision { .. } => collisions += 1,
        }
    }
    Ok(CollisionHistogram {
        num_su_pairs: cfg.num_su_pairs,
        contention_window: w,
        rounds,
        wins,
        collisions,
    })
}
