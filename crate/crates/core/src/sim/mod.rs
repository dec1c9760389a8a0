//! Discrete-event simulation of the reservation protocol against an
//! alternating-renewal PU.
//!
//! Verdicts are Bernoulli draws from a [`VerdictModel`], not sampled energy,
//! so agreement with the analysis checks the timing and combinatorics.
//! One run is single threaded. Replications can run in parallel.

pub mod contention;
pub mod queue;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fragment::FragmentRates;
use crate::model::{shifted_exp_sample, FragmentEvent, NetworkConfig};
use crate::sensing::{calibrate, SensingCalibration, SensingMode, VerdictModel};

pub use contention::{measure_collision_model, CollisionHistogram, HistogramCheck, RoundOutcome, SuState};
pub use queue::{EventQueue, Priority};

pub(crate) const STREAM_PU: u64 = 0;
pub(crate) const STREAM_BACKOFF: u64 = 1;
pub(crate) const STREAM_VERDICT: u64 = 2;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    /// Append `SIFS + ACK` after every data phase.
    pub include_ack: bool,
    /// ACK duration; the CTS duration when unset.
    pub ack_duration: Option<f64>,
    /// Completed packets discarded before statistics start.
    pub warmup_cycles: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            include_ack: false,
            ack_duration: None,
            warmup_cycles: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    /// Transmit while sensing after idle verdicts.
    FullDuplex,
    /// Sense silently for `sensing_time` at the head of every fragment.
    HalfDuplex { sensing_time: f64 },
}

impl Protocol {
    pub fn label(&self) -> &'static str {
        match self {
            Protocol::FullDuplex => "fd",
            Protocol::HalfDuplex { .. } => "hd",
        }
    }
}

/// Counters over the measurement window, which closes at the end of the last
/// packet completed within the horizon.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimStats {
    pub bits_delivered: f64,
    pub elapsed: f64,
    /// Completed packets.
    pub cycles: u64,
    pub collisions: u64,
    /// Idle verdicts with the PU active at the end of the sensing window.
    pub missed_detections: u64,
    pub pu_interference_time: f64,
    /// Busy verdicts with the PU idle at the end of the sensing window.
    pub false_alarm_stalls: u64,
    /// PU idle-to-active transitions.
    pub activations: u64,
    /// Longest SU transmission time overlapping a single PU activation.
    pub max_activation_interference: f64,
    pub pu_idle_time: f64,
}

impl SimStats {
    pub fn normalized_throughput(&self) -> f64 {
        if self.elapsed > 0.0 {
            self.bits_delivered / self.elapsed
        } else {
            0.0
        }
    }

    pub fn pu_idle_fraction(&self) -> f64 {
        if self.elapsed > 0.0 {
            self.pu_idle_time / self.elapsed
        } else {
            0.0
        }
    }
}

pub fn run_fd<V: VerdictModel<f64>>(cfg: &NetworkConfig<f64>, calib: &V, horizon: f64, seed: u64) -> Result<SimStats> {
    run(cfg, calib, Protocol::FullDuplex, horizon, seed, &SimOptions::default())
}

/// `calib_hd` must be calibrated for a sensing window of `sensing_time`.
pub fn run_hd<V: VerdictModel<f64>>(
    cfg: &NetworkConfig<f64>,
    calib_hd: &V,
    sensing_time: f64,
    horizon: f64,
    seed: u64,
) -> Result<SimStats> {
    run(
        cfg,
        calib_hd,
        Protocol::HalfDuplex { sensing_time },
        horizon,
        seed,
        &SimOptions::default(),
    )
}

pub fn run<V: VerdictModel<f64>>(
    cfg: &NetworkConfig<f64>,
    verdicts: &V,
    protocol: Protocol,
    horizon: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<SimStats> {
    cfg.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::OutOfRange {
            what: "horizon",
            detail: format!("{horizon} is not a positive finite duration"),
        });
    }
    if let Protocol::HalfDuplex { sensing_time } = protocol {
        if !(sensing_time > 0.0 && sensing_time < cfg.mac.fragment_time) {
            return Err(Error::OutOfRange {
                what: "sensing_time",
                detail: format!(
                    "{sensing_time} s outside (0, {}) s",
                    cfg.mac.fragment_time
                ),
            });
        }
    }
    Engine::new(cfg, verdicts, protocol, seed, opts).run(horizon)
}

/// Half-duplex calibration for a sensing window of `sensing_time`.
pub fn calibrate_hd(cfg: &NetworkConfig<f64>, sensing_time: f64) -> Result<SensingCalibration<f64>> {
    calibrate(cfg, sensing_time, cfg.radio.tx_power)
}

/// Best half-duplex sensing time among `candidates`, judged by mean simulated
/// throughput over `replications` runs (the same seeds for every candidate).
/// Candidates whose threshold cannot be calibrated are skipped.
pub fn optimize_sensing_time(
    cfg: &NetworkConfig<f64>,
    candidates: &[f64],
    horizon: f64,
    replications: usize,
    seed: u64,
) -> Result<(f64, Vec<SimStats>)> {
    let mut best: Option<(f64, f64, Vec<SimStats>)> = None;
    for &ts in candidates {
        let calib = match calibrate_hd(cfg, ts) {
            Ok(c) => c,
            Err(Error::Calibration(_)) => continue,
            Err(e) => return Err(e),
        };
        let runs = replicate(replications, seed, |s| run_hd(cfg, &calib, ts, horizon, s))?;
        let (nt, _) = summarize(&runs);
        if best.as_ref().map_or(true, |b| nt > b.1) {
            best = Some((ts, nt, runs));
        }
    }
    best.map(|(ts, _, runs)| (ts, runs))
        .ok_or_else(|| Error::Simulation("no sensing time could be calibrated".into()))
}

/// Seed of replication `r`, decorrelated from neighbouring base seeds.
pub fn replication_seed(seed: u64, r: u64) -> u64 {
    let mut z = seed ^ r.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent replications in parallel, returned in replication order.
pub fn replicate<F>(replications: usize, seed: u64, f: F) -> Result<Vec<SimStats>>
where
    F: Fn(u64) -> Result<SimStats> + Sync,
{
    (0..replications as u64)
        .into_par_iter()
        .map(|r| f(replication_seed(seed, r)))
        .collect()
}

/// Mean normalized throughput over replications and its standard error.
pub fn summarize(runs: &[SimStats]) -> (f64, f64) {
    let n = runs.len() as f64;
    if runs.is_empty() {
        return (0.0, 0.0);
    }
    let nts: Vec<f64> = runs.iter().map(SimStats::normalized_throughput).collect();
    let mean = nts.iter().sum::<f64>() / n;
    if runs.len() < 2 {
        return (mean, 0.0);
    }
    let var = nts.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    PuChange,
    DifsDone { epoch: u64 },
    BackoffExpiry { epoch: u64 },
    CollisionEnd,
    HandshakeDone,
    SenseEnd(usize),
    FragmentEnd(usize),
    CycleEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    WaitIdle,
    Difs,
    Backoff,
    Busy,
}

/// PU occupancy of a window.
#[derive(Debug, Clone, Copy)]
struct Window {
    event: FragmentEvent,
    /// First change instant relative to the window start.
    t: f64,
    idle_time: f64,
    active_time: f64,
}

struct Engine<'a, V> {
    cfg: &'a NetworkConfig<f64>,
    verdicts: &'a V,
    protocol: Protocol,
    opts: &'a SimOptions,
    rates: FragmentRates<f64>,
    queue: EventQueue<Event>,
    pu_rng: ChaCha8Rng,
    su_rng: ChaCha8Rng,
    verdict_rng: ChaCha8Rng,
    /// `(time, idle after the change)`, oldest first; the front entry is the
    /// state in force at the oldest time still of interest.
    pu_log: VecDeque<(f64, bool)>,
    sus: Vec<SuState>,
    phase: Phase,
    epoch: u64,
    backoff_start: f64,
    winner: usize,
    data_start: f64,
    mode: SensingMode,
    hd_transmit: bool,
    cycles_total: u64,
    stats_start: Option<f64>,
    acc: SimStats,
    activation_interference: f64,
    snapshot: Option<SimStats>,
}

impl<'a, V: VerdictModel<f64>> Engine<'a, V> {
    fn new(cfg: &'a NetworkConfig<f64>, verdicts: &'a V, protocol: Protocol, seed: u64, opts: &'a SimOptions) -> Self {
        let rates = match protocol {
            Protocol::FullDuplex => FragmentRates::new(&cfg.radio, &cfg.options),
            Protocol::HalfDuplex { .. } => FragmentRates::with_interference(&cfg.radio, 0.0),
        };
        let mut su_rng = stream_rng(seed, STREAM_BACKOFF);
        let w = cfg.mac.contention_window;
        let sus = (0..cfg.num_su_pairs).map(|_| SuState::new(w, &mut su_rng)).collect();
        Self {
            cfg,
            verdicts,
            protocol,
            opts,
            rates,
            queue: EventQueue::new(),
            pu_rng: stream_rng(seed, STREAM_PU),
            su_rng,
            verdict_rng: stream_rng(seed, STREAM_VERDICT),
            pu_log: VecDeque::from([(0.0, true)]),
            sus,
            phase: Phase::WaitIdle,
            epoch: 0,
            backoff_start: 0.0,
            winner: 0,
            data_start: 0.0,
            mode: SensingMode::FullDuplex,
            hd_transmit: false,
            cycles_total: 0,
            stats_start: None,
            acc: SimStats::default(),
            activation_interference: 0.0,
            snapshot: None,
        }
    }

    fn pu_idle(&self) -> bool {
        self.pu_log.back().map_or(true, |e| e.1)
    }

    fn last_change(&self) -> f64 {
        self.pu_log.back().map_or(0.0, |e| e.0)
    }

    fn schedule_pu_change(&mut self, now: f64) {
        let pu = &self.cfg.pu;
        let d = if self.pu_idle() {
            shifted_exp_sample(pu.mean_idle, pu.min_idle, &mut self.pu_rng)
        } else {
            shifted_exp_sample(pu.mean_active, pu.min_active, &mut self.pu_rng)
        };
        let at = now + d;
        if at.is_finite() {
            self.queue.push(at, Priority::PuChange, Event::PuChange);
        }
    }

    fn run(mut self, horizon: f64) -> Result<SimStats> {
        self.schedule_pu_change(0.0);
        self.enter_contention(0.0);
        loop {
            let limit = self.stats_start.map_or(horizon, |s| s + horizon);
            match self.queue.peek_time() {
                Some(t) if t <= limit => {}
                _ => break,
            }
            let ev = self.queue.pop().expect("peeked");
            self.handle(ev.time, ev.event);
        }
        if self.stats_start.is_none() {
            return Err(Error::Simulation(format!(
                "horizon too short: {} of {} warm-up packets completed",
                self.cycles_total, self.opts.warmup_cycles
            )));
        }
        match self.snapshot {
            Some(s) if s.cycles > 0 => Ok(s),
            _ => Err(Error::Simulation("horizon too short to complete one cycle".into())),
        }
    }

    fn handle(&mut self, now: f64, event: Event) {
        match event {
            Event::PuChange => self.on_pu_change(now),
            Event::DifsDone { epoch } if epoch == self.epoch => self.start_backoff(now),
            Event::BackoffExpiry { epoch } if epoch == self.epoch => self.on_backoff_expiry(now),
            Event::DifsDone { .. } | Event::BackoffExpiry { .. } => {}
            Event::CollisionEnd => {
                for s in self.sus.iter_mut() {
                    s.transmitting = false;
                }
                self.enter_contention(now);
            }
            Event::HandshakeDone => self.start_data(now),
            Event::SenseEnd(j) => self.on_sense_end(now, j),
            Event::FragmentEnd(j) => self.on_fragment_end(now, j),
            Event::CycleEnd => self.on_cycle_end(now),
        }
    }

    fn on_pu_change(&mut self, now: f64) {
        let was_idle = self.pu_idle();
        if let Some(start) = self.stats_start {
            if was_idle {
                self.acc.pu_idle_time += now - self.last_change().max(start);
            } else {
                self.acc.activations += 1;
            }
        }
        if was_idle {
            self.activation_interference = 0.0;
        }
        self.pu_log.push_back((now, !was_idle));
        self.schedule_pu_change(now);
        match (self.phase, was_idle) {
            (Phase::Difs, true) => {
                self.epoch += 1;
                self.phase = Phase::WaitIdle;
                contention::set_frozen(&mut self.sus, true);
            }
            (Phase::Backoff, true) => {
                // Whole idle mini-slots elapsed before the PU returned.
                self.epoch += 1;
                let elapsed = ((now - self.backoff_start) / self.cfg.mac.mini_slot + 1e-9).floor();
                let m = contention::min_counter(&self.sus);
                contention::count_down(&mut self.sus, (elapsed as usize).min(m));
                contention::set_frozen(&mut self.sus, true);
                self.phase = Phase::WaitIdle;
            }
            (Phase::WaitIdle, false) => self.start_difs(now),
            _ => {}
        }
    }

    fn enter_contention(&mut self, now: f64) {
        contention::set_frozen(&mut self.sus, true);
        if self.pu_idle() {
            self.start_difs(now);
        } else {
            self.phase = Phase::WaitIdle;
        }
    }

    fn start_difs(&mut self, now: f64) {
        self.phase = Phase::Difs;
        self.epoch += 1;
        self.queue
            .push(now + self.cfg.mac.difs, Priority::Su, Event::DifsDone { epoch: self.epoch });
    }

    fn start_backoff(&mut self, now: f64) {
        self.phase = Phase::Backoff;
        self.backoff_start = now;
        contention::set_frozen(&mut self.sus, false);
        let m = contention::min_counter(&self.sus) as f64;
        self.queue.push(
            now + m * self.cfg.mac.mini_slot,
            Priority::Su,
            Event::BackoffExpiry { epoch: self.epoch },
        );
    }

    fn on_backoff_expiry(&mut self, now: f64) {
        let w = self.cfg.mac.contention_window;
        let outcome = contention::resolve(&mut self.sus);
        contention::set_frozen(&mut self.sus, true);
        self.phase = Phase::Busy;
        let mac = &self.cfg.mac;
        match outcome {
            RoundOutcome::Success { winner, .. } => {
                self.winner = winner;
                let su = &mut self.sus[winner];
                su.frozen = false;
                su.transmitting = true;
                su.redraw(w, &mut self.su_rng);
                let handshake = mac.rts + mac.sifs + mac.cts + mac.sifs;
                self.queue.push(now + handshake, Priority::Su, Event::HandshakeDone);
            }
            RoundOutcome::Collision { contenders, .. } => {
                if self.stats_start.is_some() {
                    self.acc.collisions += 1;
                }
                for i in contenders {
                    let su = &mut self.sus[i];
                    su.frozen = false;
                    su.transmitting = true;
                    su.redraw(w, &mut self.su_rng);
                }
                self.queue.push(now + mac.rts, Priority::Su, Event::CollisionEnd);
            }
        }
    }

    fn start_data(&mut self, now: f64) {
        self.data_start = now;
        self.mode = SensingMode::FullDuplex;
        // Keep the entry in force at the data start and everything after.
        while self.pu_log.len() > 1 && self.pu_log[1].0 <= now {
            self.pu_log.pop_front();
        }
        self.schedule_fragment(1);
    }

    fn fragment_start(&self, j: usize) -> f64 {
        self.data_start + (j - 1) as f64 * self.cfg.mac.fragment_time
    }

    fn schedule_fragment(&mut self, j: usize) {
        let s = self.fragment_start(j);
        let ft = self.cfg.mac.fragment_time;
        if let Protocol::HalfDuplex { sensing_time } = self.protocol {
            self.queue.push(s + sensing_time, Priority::Su, Event::SenseEnd(j));
        }
        self.queue.push(s + ft, Priority::Su, Event::FragmentEnd(j));
    }

    fn window(&self, a: f64, b: f64) -> Window {
        let mut idle = true;
        let mut iter = self.pu_log.iter().peekable();
        while let Some(&(t, st)) = iter.next() {
            if t <= a {
                idle = st;
            } else {
                break;
            }
        }
        let start_idle = idle;
        let (mut idle_time, mut active_time) = (0.0, 0.0);
        let mut first = None;
        let mut cursor = a;
        for &(t, st) in self.pu_log.iter().filter(|e| e.0 > a && e.0 <= b) {
            first.get_or_insert(t - a);
            if idle {
                idle_time += t - cursor;
            } else {
                active_time += t - cursor;
            }
            cursor = t;
            idle = st;
        }
        if idle {
            idle_time += b - cursor;
        } else {
            active_time += b - cursor;
        }
        let event = FragmentEvent::from_states(start_idle, idle);
        let t = if event.has_change() { first.unwrap_or(0.0) } else { 0.0 };
        Window {
            event,
            t,
            idle_time,
            active_time,
        }
    }

    fn deliver(&mut self, w: &Window) {
        let bits = w.idle_time * self.rates.idle_rate() + w.active_time * self.rates.busy_rate();
        self.activation_interference += w.active_time;
        if self.stats_start.is_some() {
            self.acc.bits_delivered += bits;
            self.acc.pu_interference_time += w.active_time;
            self.acc.max_activation_interference = self.acc.max_activation_interference.max(self.activation_interference);
        }
    }

    /// Draws the verdict for a sensing window and returns whether it is busy.
    fn verdict(&mut self, w: &Window, mode: SensingMode) -> bool {
        let q = self.verdicts.busy_probability(mode, w.event, w.t);
        let busy = self.verdict_rng.gen::<f64>() < q;
        if self.stats_start.is_some() {
            let ends_idle = w.event.ends_idle();
            if !busy && !ends_idle {
                self.acc.missed_detections += 1;
            }
            if busy && ends_idle {
                self.acc.false_alarm_stalls += 1;
            }
        }
        busy
    }

    fn on_sense_end(&mut self, now: f64, j: usize) {
        let w = self.window(self.fragment_start(j), now);
        let busy = self.verdict(&w, SensingMode::HalfDuplex);
        self.hd_transmit = !busy;
        self.sus[self.winner].sensing_mode = SensingMode::HalfDuplex;
    }

    fn on_fragment_end(&mut self, now: f64, j: usize) {
        let s = self.fragment_start(j);
        match self.protocol {
            Protocol::FullDuplex => {
                let w = self.window(s, now);
                let mode = self.mode;
                self.sus[self.winner].sensing_mode = mode;
                if mode == SensingMode::FullDuplex {
                    self.deliver(&w);
                }
                let busy = self.verdict(&w, mode);
                self.mode = if busy {
                    SensingMode::HalfDuplex
                } else {
                    SensingMode::FullDuplex
                };
            }
            Protocol::HalfDuplex { sensing_time } => {
                if self.hd_transmit {
                    let w = self.window(s + sensing_time, now);
                    self.deliver(&w);
                }
            }
        }
        if j < self.cfg.mac.fragments_per_packet {
            self.schedule_fragment(j + 1);
        } else {
            let su = &mut self.sus[self.winner];
            su.transmitting = false;
            su.sensing_mode = SensingMode::FullDuplex;
            let tail = if self.opts.include_ack {
                self.cfg.mac.sifs + self.opts.ack_duration.unwrap_or(self.cfg.mac.cts)
            } else {
                0.0
            };
            if tail > 0.0 {
                self.queue.push(now + tail, Priority::Su, Event::CycleEnd);
            } else {
                self.on_cycle_end(now);
            }
        }
    }

    fn on_cycle_end(&mut self, now: f64) {
        self.cycles_total += 1;
        match self.stats_start {
            None if self.cycles_total >= self.opts.warmup_cycles => {
                self.stats_start = Some(now);
                self.acc = SimStats::default();
            }
            None => {}
            Some(start) => {
                self.acc.cycles += 1;
                let mut snap = self.acc.clone();
                snap.elapsed = now - start;
                if self.pu_idle() {
                    snap.pu_idle_time += now - self.last_change().max(start);
                }
                self.snapshot = Some(snap);
            }
        }
        self.enter_contention(now);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::contention::base_overhead;
    use crate::sensing::PerfectSensing;
    use proptest::prelude::*;

    fn quiet_pu(mut cfg: NetworkConfig<f64>) -> NetworkConfig<f64> {
        cfg.pu.mean_idle = 1e12;
        cfg
    }

    fn single(mut cfg: NetworkConfig<f64>) -> NetworkConfig<f64> {
        cfg.num_su_pairs = 1;
        cfg.with_contention_window(1)
    }

    #[test]
    fn deterministic_cycle_fd() {
        let cfg = single(quiet_pu(NetworkConfig::reference()));
        let s = run_fd(&cfg, &PerfectSensing, 20.0, 1).unwrap();
        let rates = FragmentRates::new(&cfg.radio, &cfg.options);
        let kt = cfg.mac.packet_length();
        let want = kt * rates.idle_rate() / (base_overhead(&cfg.mac) + kt);
        assert!((s.normalized_throughput() - want).abs() < 1e-9 * want, "{} vs {want}", s.normalized_throughput());
        assert_eq!(s.collisions, 0);
        assert_eq!(s.pu_interference_time, 0.0);
    }

    #[test]
    fn deterministic_cycle_hd() {
        let cfg = single(quiet_pu(NetworkConfig::reference()));
        let ts = 0.004;
        let s = run_hd(&cfg, &PerfectSensing, ts, 20.0, 1).unwrap();
        let rates = FragmentRates::with_interference(&cfg.radio, 0.0);
        let k = cfg.mac.fragments_per_packet as f64;
        let t = cfg.mac.fragment_time;
        let want = k * (t - ts) * rates.idle_rate() / (base_overhead(&cfg.mac) + k * t);
        assert!((s.normalized_throughput() - want).abs() < 1e-9 * want);
    }

    #[test]
    fn ack_lengthens_the_cycle() {
        let cfg = single(quiet_pu(NetworkConfig::reference()));
        let opts = SimOptions {
            include_ack: true,
            ..SimOptions::default()
        };
        let a = run(&cfg, &PerfectSensing, Protocol::FullDuplex, 20.0, 1, &opts).unwrap();
        let b = run_fd(&cfg, &PerfectSensing, 20.0, 1).unwrap();
        assert!(a.normalized_throughput() < b.normalized_throughput());
    }

    #[test]
    fn short_horizon_is_an_error() {
        let cfg = NetworkConfig::reference();
        assert!(matches!(run_fd(&cfg, &PerfectSensing, 0.05, 1), Err(Error::Simulation(_))));
    }

    #[test]
    fn hd_sensing_time_range() {
        let cfg = NetworkConfig::reference();
        let t = cfg.mac.fragment_time;
        assert!(run_hd(&cfg, &PerfectSensing, t, 10.0, 1).is_err());
        assert!(run_hd(&cfg, &PerfectSensing, 0.0, 10.0, 1).is_err());
    }

    #[test]
    fn hd_near_full_sensing_delivers_almost_nothing() {
        let cfg = NetworkConfig::reference();
        let t = cfg.mac.fragment_time;
        let s = run_hd(&cfg, &PerfectSensing, t * (1.0 - 1e-9), 20.0, 2).unwrap();
        assert!(s.normalized_throughput() < 1e-6);
    }

    #[test]
    fn tiny_power_delivers_nothing() {
        let cfg = NetworkConfig::reference().with_tx_power(1e-30);
        let s = run_fd(&cfg, &PerfectSensing, 20.0, 3).unwrap();
        assert!(s.bits_delivered < 1e-20);
        assert!(s.cycles > 0);
    }

    #[test]
    fn perfect_sensing_protects_the_pu() {
        let mut cfg = NetworkConfig::reference();
        cfg.num_su_pairs = 5;
        cfg.pu.mean_active = 0.05;
        cfg.pu.mean_idle = 0.1;
        let s = run_fd(&cfg, &PerfectSensing, 200.0, 4).unwrap();
        assert!(s.activations > 100);
        assert!(s.pu_interference_time > 0.0);
        assert!(s.max_activation_interference <= cfg.mac.fragment_time + 1e-12);
        assert_eq!(s.missed_detections, 0);
        assert_eq!(s.false_alarm_stalls, 0);
    }

    #[test]
    fn idle_fraction_tracks_renewal_ratio() {
        let mut cfg = NetworkConfig::reference();
        cfg.pu.mean_active = 0.05;
        cfg.pu.mean_idle = 0.1;
        let s = run_fd(&cfg, &PerfectSensing, 2000.0, 6).unwrap();
        let p = cfg.prob_idle();
        // Renewal-reward variance of the idle fraction over `n` PU cycles.
        let (mi, ma) = (cfg.pu.mean_idle_total(), cfg.pu.mean_active_total());
        let var_cycle = (1.0 - p).powi(2) * cfg.pu.mean_idle.powi(2) + p.powi(2) * cfg.pu.mean_active.powi(2);
        let n = s.activations as f64;
        let sigma = (var_cycle / n).sqrt() / (mi + ma);
        assert!((s.pu_idle_fraction() - p).abs() < 3.0 * sigma, "{} vs {p}", s.pu_idle_fraction());
    }

    #[test]
    fn collisions_occur_with_many_contenders() {
        let mut cfg = NetworkConfig::reference().with_contention_window(8);
        cfg.num_su_pairs = 10;
        let s = run_fd(&cfg, &PerfectSensing, 50.0, 7).unwrap();
        assert!(s.collisions > 0);
    }

    #[test]
    fn replications_are_ordered_and_reproducible() {
        let cfg = NetworkConfig::reference();
        let f = |seed| run_fd(&cfg, &PerfectSensing, 20.0, seed);
        let a = replicate(3, 11, f).unwrap();
        let b = replicate(3, 11, f).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        let (mean, se) = summarize(&a);
        assert!(mean > 0.0 && se >= 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn identical_seeds_identical_stats(seed in any::<u64>(), n0 in 1usize..6) {
            let mut cfg = NetworkConfig::reference().with_contention_window(16);
            cfg.num_su_pairs = n0;
            cfg.pu.mean_idle = 0.1;
            let calib = cfg.calibrate().unwrap();
            let a = run_fd(&cfg, &calib, 40.0, seed).unwrap();
            let b = run_fd(&cfg, &calib, 40.0, seed).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn counters_stay_in_window(seed in any::<u64>(), w in 1usize..64, n0 in 1usize..8) {
            let mut cfg = NetworkConfig::reference().with_contention_window(w);
            cfg.num_su_pairs = n0;
            cfg.pu.mean_idle = 0.05;
            let opts = SimOptions { warmup_cycles: 0, ..SimOptions::default() };
            let mut e = Engine::new(&cfg, &PerfectSensing, Protocol::FullDuplex, seed, &opts);
            e.schedule_pu_change(0.0);
            e.enter_contention(0.0);
            let mut steps = 0;
            while let Some(ev) = e.queue.pop() {
                // Counters only move while the medium is idle.
                let before: Vec<usize> = e.sus.iter().map(|s| s.backoff_counter).collect();
                let phase = e.phase;
                let idle_before = e.pu_idle();
                e.handle(ev.time, ev.event);
                for (su, b) in e.sus.iter().zip(&before) {
                    prop_assert!(su.backoff_counter < w);
                    prop_assert!(!(su.frozen && su.transmitting));
                    if su.backoff_counter < *b {
                        prop_assert!(phase == Phase::Backoff && idle_before);
                    }
                }
                steps += 1;
                if steps > 20_000 { break; }
            }
        }
    }
}
