//! PU activity patterns over a packet, joint sensing outcomes, and the
//! explicit per-outcome probability and credited bits.

use crate::error::{Error, Result};
use crate::fragment::FragmentRates;
use crate::model::{FragmentCredit, FragmentEvent, ModelOptions};
use crate::scalar::Scalar;
use crate::sensing::{SensingMode, VerdictModel};

/// Largest packet for which pattern/outcome enumeration is allowed.
pub const MAX_ENUMERATED_FRAGMENTS: usize = 12;

fn check_fragments(k: usize) -> Result<()> {
    if k == 0 || k > MAX_ENUMERATED_FRAGMENTS {
        return Err(Error::OutOfRange {
            what: "fragments_per_packet",
            detail: format!(
                "enumeration supports 1..={MAX_ENUMERATED_FRAGMENTS} fragments, got {k} (cost grows as 4^K)"
            ),
        });
    }
    Ok(())
}

/// One idle/active path of the PU across the fragments of a packet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PuPattern {
    events: Vec<FragmentEvent>,
}

impl PuPattern {
    /// Pattern with a state change in each fragment flagged in `changes`.
    pub fn from_changes(changes: &[bool]) -> Self {
        let mut idle = true;
        let events = changes
            .iter()
            .map(|&c| {
                let start = idle;
                if c {
                    idle = !idle;
                }
                FragmentEvent::from_states(start, idle)
            })
            .collect();
        Self { events }
    }

    pub fn from_events(events: Vec<FragmentEvent>) -> Result<Self> {
        let Some(first) = events.first() else {
            return Err(Error::OutOfRange {
                what: "pattern",
                detail: "empty event list".into(),
            });
        };
        if !first.starts_idle() {
            return Err(Error::OutOfRange {
                what: "pattern",
                detail: "data phase must start idle".into(),
            });
        }
        if let Some(j) = events.windows(2).position(|w| w[0].ends_idle() != w[1].starts_idle()) {
            return Err(Error::OutOfRange {
                what: "pattern",
                detail: format!("fragments {} and {} are inconsistent", j + 1, j + 2),
            });
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[FragmentEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// 1-based indices of fragments containing a state change.
    pub fn change_fragments(&self) -> Vec<usize> {
        self.events
            .iter()
            .enumerate()
            .filter(|(_, e)| e.has_change())
            .map(|(j, _)| j + 1)
            .collect()
    }

    pub fn num_changes(&self) -> usize {
        self.events.iter().filter(|e| e.has_change()).count()
    }

    /// 1-based fragment indices carrying `event`.
    pub fn fragments_with(&self, event: FragmentEvent) -> Vec<usize> {
        self.events
            .iter()
            .enumerate()
            .filter(|(_, &e)| e == event)
            .map(|(j, _)| j + 1)
            .collect()
    }
}

/// All `2^K` patterns; pattern `i` changes in fragment `j` when bit `K−j`
/// of `i` is set, so the all-idle pattern comes first.
pub fn enumerate_patterns(k: usize) -> Result<Vec<PuPattern>> {
    check_fragments(k)?;
    Ok((0..1usize << k)
        .map(|i| {
            let changes: Vec<bool> = (0..k).map(|j| (i >> (k - 1 - j)) & 1 == 1).collect();
            PuPattern::from_changes(&changes)
        })
        .collect())
}

/// Joint end-of-fragment verdicts for one packet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SensingOutcomeSet {
    busy: Vec<bool>,
}

impl SensingOutcomeSet {
    pub fn new(busy: Vec<bool>) -> Self {
        Self { busy }
    }

    pub fn len(&self) -> usize {
        self.busy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.busy.is_empty()
    }

    pub fn is_busy(&self, j: usize) -> bool {
        self.busy[j - 1]
    }

    pub fn idle_verdict_fragments(&self) -> Vec<usize> {
        (1..=self.len()).filter(|&j| !self.is_busy(j)).collect()
    }

    pub fn busy_verdict_fragments(&self) -> Vec<usize> {
        (1..=self.len()).filter(|&j| self.is_busy(j)).collect()
    }

    /// Fragments in which the SU transmits: successors of idle verdicts that
    /// fall inside the packet, plus fragment 1.
    pub fn transmit_fragments(&self) -> Vec<usize> {
        (1..=self.len()).filter(|&j| self.transmits(j)).collect()
    }

    pub fn transmits(&self, j: usize) -> bool {
        j == 1 || !self.is_busy(j - 1)
    }

    pub fn mode(&self, j: usize) -> SensingMode {
        if self.transmits(j) {
            SensingMode::FullDuplex
        } else {
            SensingMode::HalfDuplex
        }
    }
}

/// All `2^K` verdict combinations.
pub fn enumerate_outcomes(k: usize) -> Result<Vec<SensingOutcomeSet>> {
    check_fragments(k)?;
    Ok((0..1usize << k)
        .map(|i| SensingOutcomeSet::new((0..k).map(|j| (i >> (k - 1 - j)) & 1 == 1).collect()))
        .collect())
}

/// Consecutive PU holding times, the first measured from the start of the
/// reservation (beginning of the contention overhead).
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeInstantVector<S> {
    pub intervals: Vec<S>,
}

impl<S: Scalar> ChangeInstantVector<S> {
    pub fn new(intervals: Vec<S>) -> Self {
        Self { intervals }
    }

    fn change_times(&self) -> impl Iterator<Item = S> + '_ {
        self.intervals.iter().scan(S::zero(), |acc, &x| {
            *acc += x;
            Some(*acc)
        })
    }

    /// Pattern realized by these intervals for a data phase starting at
    /// `overhead`; `None` when the PU is active at the data start or changes
    /// twice inside a fragment.
    pub fn pattern(&self, overhead: S, fragment_time: S, k: usize) -> Option<PuPattern> {
        let end = overhead + S::from_usize_lossy(k) * fragment_time;
        let times: Vec<S> = self.change_times().take_while(|&c| c < end).collect();
        if times.first().is_some_and(|&c| c < overhead) {
            return None;
        }
        let mut changes = vec![false; k];
        for c in times {
            let j = ((c - overhead) / fragment_time).floor().to_usize()?.min(k - 1);
            if changes[j] {
                return None;
            }
            changes[j] = true;
        }
        Some(PuPattern::from_changes(&changes))
    }

    /// Per-fragment `(event, local change instant)` for `pattern`, checking
    /// each interval against its admissible range.
    pub fn local_path(&self, pattern: &PuPattern, overhead: S, fragment_time: S) -> Result<Vec<(FragmentEvent, S)>> {
        let changes = pattern.change_fragments();
        if self.intervals.len() != changes.len() + 1 {
            return Err(Error::OutOfRange {
                what: "change instants",
                detail: format!(
                    "pattern has {} changes, so {} intervals are needed, got {}",
                    changes.len(),
                    changes.len() + 1,
                    self.intervals.len()
                ),
            });
        }
        let times: Vec<S> = self.change_times().collect();
        let mut local = vec![S::zero(); pattern.len()];
        for (n, (&l, &c)) in changes.iter().zip(&times).enumerate() {
            let start = overhead + S::from_usize_lossy(l - 1) * fragment_time;
            let t = c - start;
            if !(t >= S::zero() && t <= fragment_time) {
                return Err(Error::OutOfRange {
                    what: "change instants",
                    detail: format!("change {} at {c} falls outside fragment {l}", n + 1),
                });
            }
            local[l - 1] = t;
        }
        let end = overhead + S::from_usize_lossy(pattern.len()) * fragment_time;
        if times[changes.len()] < end {
            return Err(Error::OutOfRange {
                what: "change instants",
                detail: format!("final interval ends at {} before the packet end {end}", times[changes.len()]),
            });
        }
        Ok(pattern.events().iter().copied().zip(local).collect())
    }
}

/// Probability of `outcome` and the bits it credits, for a fixed PU path.
pub fn outcome_probability_and_bits<S: Scalar, V: VerdictModel<S>>(
    pattern: &PuPattern,
    outcome: &SensingOutcomeSet,
    t_vec: &ChangeInstantVector<S>,
    overhead: S,
    verdicts: &V,
    rates: &FragmentRates<S>,
    fragment_time: S,
    options: &ModelOptions,
) -> Result<(S, S)> {
    if pattern.len() != outcome.len() {
        return Err(Error::OutOfRange {
            what: "sensing outcome",
            detail: format!("pattern has {} fragments, outcome has {}", pattern.len(), outcome.len()),
        });
    }
    let path = t_vec.local_path(pattern, overhead, fragment_time)?;
    let mut prob = S::one();
    let mut bits = S::zero();
    for (j, &(event, t)) in (1..).zip(&path) {
        let q = verdicts.busy_probability(outcome.mode(j), event, t);
        let busy = outcome.is_busy(j);
        prob *= if busy { q } else { S::one() - q };
        let credited = outcome.transmits(j)
            && (j > 1 || options.count_first_fragment)
            && match options.fragment_credit {
                FragmentCredit::OnTransmission => true,
                FragmentCredit::OnIdleVerdict => !busy,
            };
        if credited {
            bits += rates.bits(event, t, fragment_time);
        }
    }
    Ok((prob, bits))
}
