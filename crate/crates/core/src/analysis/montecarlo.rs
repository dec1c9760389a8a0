//! Monte Carlo integration over PU holding times with common random numbers
//! across backoff slots.
//!
//! Sample `n` draws its PU path from its own ChaCha stream, so results do
//! not depend on how samples are spread over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::packet::PacketModel;
use crate::error::{Error, Result};
use crate::model::{shifted_exp_sample, FragmentEvent, PuActivityModel};
use crate::scalar::Scalar;
use crate::sensing::VerdictModel;

const BLOCK: usize = 2048;

/// Backoff-slot geometry: data start `base + i0·slot` for `i0 < weights.len()`,
/// with per-slot weights applied to the conditional throughput.
#[derive(Debug, Clone)]
pub struct SlotGrid<S> {
    pub base: S,
    pub slot: S,
    pub weights: Vec<S>,
}

impl<S: Scalar> SlotGrid<S> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn start(&self, i0: usize) -> S {
        self.base + S::from_usize_lossy(i0) * self.slot
    }

    /// Largest slot whose data start satisfies `start ≤ x`, if any.
    fn last_at_or_before(&self, x: S) -> Option<usize> {
        if x < self.base {
            return None;
        }
        let last = self.len() - 1;
        if self.slot <= S::zero() {
            return Some(last);
        }
        let raw = ((x - self.base) / self.slot).floor();
        let i = raw.to_usize().unwrap_or(last).min(last);
        // Guard the floor against rounding at slot edges.
        if self.start(i) > x {
            return i.checked_sub(1);
        }
        Some(i)
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarloEstimate<S> {
    /// Conditional throughput per backoff slot.
    pub per_slot: Vec<S>,
    /// Weighted sum over slots.
    pub weighted_total: S,
    pub standard_error: S,
    pub samples: usize,
}

struct Partial {
    sums: Vec<f64>,
    idle_counts: Vec<f64>,
    y: f64,
    y2: f64,
}

pub fn estimate<S: Scalar, V: VerdictModel<S>>(
    model: &PacketModel<'_, S, V>,
    pu: &PuActivityModel<S>,
    prob_idle: S,
    grid: &SlotGrid<S>,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate<S>> {
    if samples == 0 {
        return Err(Error::OutOfRange {
            what: "mc_samples",
            detail: "at least one sample required".into(),
        });
    }
    if grid.is_empty() {
        return Err(Error::OutOfRange {
            what: "contention_window",
            detail: "no backoff slots".into(),
        });
    }
    let w = grid.len();
    let k = model.fragments;
    let ft = model.fragment_time;
    let packet = S::from_usize_lossy(k) * ft;
    let all_idle = model.all_idle_value().as_f64();
    let p0 = prob_idle.as_f64();
    let wf: Vec<f64> = grid.weights.iter().map(|x| x.as_f64()).collect();
    let mut wprefix = Vec::with_capacity(w);
    let mut acc = 0.0;
    for &x in &wf {
        acc += x;
        wprefix.push(acc);
    }
    let base_rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = samples.div_ceil(BLOCK);

    let partials: Vec<Partial> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut part = Partial {
                sums: vec![0.0; w],
                idle_counts: vec![0.0; w + 1],
                y: 0.0,
                y2: 0.0,
            };
            let mut changes: Vec<S> = Vec::with_capacity(2 * k + 4);
            let mut path = vec![(FragmentEvent::H00, S::zero()); k];
            for n in b * BLOCK..((b + 1) * BLOCK).min(samples) {
                let mut rng = base_rng.clone();
                rng.set_stream(n as u64);
                let c1 = shifted_exp_sample(pu.mean_idle, pu.min_idle, &mut rng);
                let nonzero_end = grid.last_at_or_before(c1);
                let all_idle_end = grid.last_at_or_before(c1 - packet);
                let mut y = 0.0;
                if let Some(ia) = all_idle_end {
                    part.idle_counts[0] += 1.0;
                    part.idle_counts[ia + 1] -= 1.0;
                    y += all_idle * wprefix[ia];
                }
                let first_mixed = all_idle_end.map_or(0, |i| i + 1);
                if let Some(iz) = nonzero_end.filter(|&iz| iz >= first_mixed) {
                    let horizon = grid.start(iz) + packet;
                    changes.clear();
                    changes.push(c1);
                    let mut idle = false;
                    while *changes.last().expect("nonempty") < horizon {
                        let d = if idle {
                            shifted_exp_sample(pu.mean_idle, pu.min_idle, &mut rng)
                        } else {
                            shifted_exp_sample(pu.mean_active, pu.min_active, &mut rng)
                        };
                        idle = !idle;
                        let last = *changes.last().expect("nonempty");
                        changes.push(last + d);
                    }
                    for i0 in first_mixed..=iz {
                        let s = grid.start(i0);
                        fill_path(&mut path, &changes, s, ft);
                        let v = model.value(&path).as_f64();
                        part.sums[i0] += v;
                        y += wf[i0] * v;
                    }
                }
                y *= p0;
                part.y += y;
                part.y2 += y * y;
            }
            part
        })
        .collect();

    let mut sums = vec![0.0; w];
    let mut idle_counts = vec![0.0; w + 1];
    let (mut y, mut y2) = (0.0, 0.0);
    for p in &partials {
        for (a, b) in sums.iter_mut().zip(&p.sums) {
            *a += b;
        }
        for (a, b) in idle_counts.iter_mut().zip(&p.idle_counts) {
            *a += b;
        }
        y += p.y;
        y2 += p.y2;
    }
    let nf = samples as f64;
    let mut running = 0.0;
    let per_slot = (0..w)
        .map(|i| {
            running += idle_counts[i];
            S::lit(p0 * (all_idle * running + sums[i]) / nf)
        })
        .collect();
    let mean = y / nf;
    let var = (y2 / nf - mean * mean).max(0.0);
    Ok(MonteCarloEstimate {
        per_slot,
        weighted_total: S::lit(mean),
        standard_error: S::lit((var / nf).sqrt()),
        samples,
    })
}

/// Per-fragment events for a data phase starting at `start`, given absolute
/// change times that all lie at or after `start`.
fn fill_path<S: Scalar>(path: &mut [(FragmentEvent, S)], changes: &[S], start: S, ft: S) {
    let mut idx = 0;
    let mut idle = true;
    for (j, slot) in path.iter_mut().enumerate() {
        let lo = start + S::from_usize_lossy(j) * ft;
        let hi = lo + ft;
        if idx < changes.len() && changes[idx] < hi {
            let t = (changes[idx] - lo).max(S::zero()).min(ft);
            *slot = (FragmentEvent::from_states(idle, !idle), t);
            idle = !idle;
            idx += 1;
        } else {
            *slot = (FragmentEvent::from_states(idle, idle), S::zero());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::pattern::ChangeInstantVector;

    #[test]
    fn slot_lookup_edges() {
        let g = SlotGrid {
            base: 1.0,
            slot: 0.5,
            weights: vec![1.0; 4],
        };
        assert_eq!(g.last_at_or_before(0.99), None);
        assert_eq!(g.last_at_or_before(1.0), Some(0));
        assert_eq!(g.last_at_or_before(1.74), Some(1));
        assert_eq!(g.last_at_or_before(100.0), Some(3));
    }

    #[test]
    fn path_matches_interval_view() {
        let ft = 0.01;
        let changes = [0.0155, 0.0355, 1.0];
        let mut path = vec![(FragmentEvent::H00, 0.0_f64); 4];
        fill_path(&mut path, &changes, 0.001, ft);
        let tv = ChangeInstantVector::new(vec![0.0155, 0.02, 0.9645]);
        let pat = tv.pattern(0.001, ft, 4).unwrap();
        let want = tv.local_path(&pat, 0.001, ft).unwrap();
        for (a, b) in path.iter().zip(&want) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }
}
