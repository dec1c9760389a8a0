//! Scenario parameters and the probability primitives shared by every other
//! module: the Gaussian tail, the shifted-exponential holding times of the
//! primary user, and the stationary idle probability.
//!
//! All durations are seconds, all powers are linear and normalized to the
//! noise floor.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result, Violation};
use crate::scalar::Scalar;

/// Primary-user behaviour over one fragment: the state at its start and end.
///
/// At most one state change happens inside a fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FragmentEvent {
    /// Idle throughout.
    H00,
    /// Active at the start, idle from the change onwards.
    H10,
    /// Idle at the start, active from the change onwards.
    H01,
    /// Active throughout.
    H11,
}

impl FragmentEvent {
    pub const ALL: [FragmentEvent; 4] = [Self::H00, Self::H10, Self::H01, Self::H11];

    pub fn from_states(starts_idle: bool, ends_idle: bool) -> Self {
        match (starts_idle, ends_idle) {
            (true, true) => Self::H00,
            (false, true) => Self::H10,
            (true, false) => Self::H01,
            (false, false) => Self::H11,
        }
    }

    pub fn starts_idle(self) -> bool {
        matches!(self, Self::H00 | Self::H01)
    }

    pub fn ends_idle(self) -> bool {
        matches!(self, Self::H00 | Self::H10)
    }

    pub fn has_change(self) -> bool {
        matches!(self, Self::H10 | Self::H01)
    }
}

/// Idle/busy holding-time statistics of the primary user.
///
/// Each holding time is `min + Exp(mean)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuActivityModel<S> {
    /// Mean of the exponential part of an idle period.
    pub mean_idle: S,
    /// Mean of the exponential part of an active period.
    pub mean_active: S,
    pub min_idle: S,
    pub min_active: S,
    /// Deadline within which secondary users must vacate a reclaimed channel.
    pub evacuation_time: S,
}

impl<S: Scalar> PuActivityModel<S> {
    pub fn mean_idle_total(&self) -> S {
        self.min_idle + self.mean_idle
    }

    pub fn mean_active_total(&self) -> S {
        self.min_active + self.mean_active
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        for (field, value) in [
            ("mean_idle", self.mean_idle),
            ("mean_active", self.mean_active),
            ("min_idle", self.min_idle),
            ("min_active", self.min_active),
            ("evacuation_time", self.evacuation_time),
        ] {
            if !(value > S::zero() && value.is_finite()) {
                v.push(Violation {
                    field,
                    message: format!("must be finite and strictly positive, got {value}"),
                });
            }
        }
        if self.min_idle < self.evacuation_time {
            v.push(Violation {
                field: "min_idle",
                message: format!(
                    "must be at least evacuation_time ({} < {})",
                    self.min_idle, self.evacuation_time
                ),
            });
        }
        if self.min_active < self.evacuation_time {
            v.push(Violation {
                field: "min_active",
                message: format!(
                    "must be at least evacuation_time ({} < {})",
                    self.min_active, self.evacuation_time
                ),
            });
        }
        v
    }
}

/// Contention and framing parameters of the MAC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacTimingConfig<S> {
    /// Backoff mini-slot σ.
    pub mini_slot: S,
    pub sifs: S,
    pub difs: S,
    pub rts: S,
    pub cts: S,
    pub contention_window: usize,
    pub max_contention_window: usize,
    pub fragments_per_packet: usize,
    pub fragment_time: S,
}

impl<S: Scalar> MacTimingConfig<S> {
    /// Air-time of the data phase, `K·T`.
    pub fn packet_length(&self) -> S {
        S::from_usize_lossy(self.fragments_per_packet) * self.fragment_time
    }

    pub fn violations(&self, evacuation_time: S) -> Vec<Violation> {
        let mut v = Vec::new();
        for (field, value) in [
            ("mini_slot", self.mini_slot),
            ("sifs", self.sifs),
            ("difs", self.difs),
            ("rts", self.rts),
            ("cts", self.cts),
        ] {
            if !(value >= S::zero() && value.is_finite()) {
                v.push(Violation {
                    field,
                    message: format!("must be finite and non-negative, got {value}"),
                });
            }
        }
        if !(self.fragment_time > S::zero()) {
            v.push(Violation {
                field: "fragment_time",
                message: format!("must be strictly positive, got {}", self.fragment_time),
            });
        }
        if self.fragment_time > evacuation_time {
            v.push(Violation {
                field: "fragment_time",
                message: format!(
                    "must not exceed evacuation_time ({} > {})",
                    self.fragment_time, evacuation_time
                ),
            });
        }
        if self.contention_window < 1 {
            v.push(Violation {
                field: "contention_window",
                message: "must be at least 1".into(),
            });
        }
        if self.contention_window > self.max_contention_window {
            v.push(Violation {
                field: "contention_window",
                message: format!(
                    "must not exceed max_contention_window ({} > {})",
                    self.contention_window, self.max_contention_window
                ),
            });
        }
        if self.fragments_per_packet < 1 {
            v.push(Violation {
                field: "fragments_per_packet",
                message: "must be at least 1".into(),
            });
        }
        v
    }
}

/// Radio parameters; powers are linear and relative to the noise floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig<S> {
    pub tx_power: S,
    pub max_tx_power: S,
    pub noise_power: S,
    /// Primary-user power received at the secondary sensing antenna.
    pub pu_received_power: S,
    /// Residual self-interference scale ζ.
    pub si_scale: S,
    /// Residual self-interference exponent ξ.
    pub si_exponent: S,
    /// Energy-detector sampling rate (Hz).
    pub sampling_frequency: S,
}

impl<S: Scalar> RadioConfig<S> {
    /// Residual self-interference `ζ·P^ξ` at the configured transmit power.
    pub fn self_interference(&self) -> S {
        self.self_interference_at(self.tx_power)
    }

    pub fn self_interference_at(&self, tx_power: S) -> S {
        if tx_power <= S::zero() {
            return S::zero();
        }
        self.si_scale * tx_power.powf(self.si_exponent)
    }

    pub fn with_tx_power(mut self, tx_power: S) -> Self {
        self.tx_power = tx_power;
        self
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(self.tx_power > S::zero()) {
            v.push(Violation {
                field: "tx_power",
                message: format!("must be strictly positive, got {}", self.tx_power),
            });
        }
        if self.tx_power > self.max_tx_power {
            v.push(Violation {
                field: "tx_power",
                message: format!(
                    "must not exceed max_tx_power ({} > {})",
                    self.tx_power, self.max_tx_power
                ),
            });
        }
        if !(self.noise_power > S::zero()) {
            v.push(Violation {
                field: "noise_power",
                message: format!("must be strictly positive, got {}", self.noise_power),
            });
        }
        if !(self.pu_received_power >= S::zero()) {
            v.push(Violation {
                field: "pu_received_power",
                message: format!("must be non-negative, got {}", self.pu_received_power),
            });
        }
        if !(self.si_scale >= S::zero()) {
            v.push(Violation {
                field: "si_scale",
                message: format!("must be non-negative, got {}", self.si_scale),
            });
        }
        if !(self.si_exponent >= S::zero() && self.si_exponent <= S::one()) {
            v.push(Violation {
                field: "si_exponent",
                message: format!("must lie in [0, 1], got {}", self.si_exponent),
            });
        }
        if !(self.sampling_frequency > S::zero()) {
            v.push(Violation {
                field: "sampling_frequency",
                message: format!("must be strictly positive, got {}", self.sampling_frequency),
            });
        }
        v
    }
}

/// How the bits of a transmitted fragment are credited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FragmentCredit {
    /// Every fragment sent in full-duplex mode delivers its bits.
    #[default]
    OnTransmission,
    /// A transmitted fragment only counts when its own end-of-fragment verdict
    /// is "idle" (the reading that attaches `T_j` to fragments of the idle
    /// verdict set).
    OnIdleVerdict,
}

/// Modelling switches that select between readings of under-determined
/// parts of the throughput model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelOptions {
    /// Include the minimum holding times when computing P(H0).
    pub prob_idle_uses_shift: bool,
    /// The secondary receiver also suffers self-interference.
    pub receiver_self_interference: bool,
    /// Fragment 1 (always sent) contributes its bits.
    pub count_first_fragment: bool,
    pub fragment_credit: FragmentCredit,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            prob_idle_uses_shift: true,
            receiver_self_interference: true,
            count_first_fragment: true,
            fragment_credit: FragmentCredit::OnTransmission,
        }
    }
}

/// Complete description of one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig<S> {
    pub num_su_pairs: usize,
    pub pu: PuActivityModel<S>,
    pub mac: MacTimingConfig<S>,
    pub radio: RadioConfig<S>,
    /// Required average detection probability.
    pub target_detection_prob: S,
    pub options: ModelOptions,
}

impl<S: Scalar> NetworkConfig<S> {
    /// Baseline scenario of the numerical study: 802.11 DSSS control timing,
    /// 6 MHz sampling, −20 dB primary SNR, ζ = 0.4.
    pub fn reference() -> Self {
        let ms = |v: f64| S::lit(v * 1e-3);
        let us = |v: f64| S::lit(v * 1e-6);
        Self {
            num_su_pairs: 40,
            pu: PuActivityModel {
                mean_idle: ms(1000.0),
                mean_active: ms(100.0),
                min_idle: ms(45.0),
                min_active: ms(40.0),
                evacuation_time: ms(40.0),
            },
            mac: MacTimingConfig {
                mini_slot: us(20.0),
                sifs: us(10.0),
                difs: us(50.0),
                rts: us(352.0),
                cts: us(304.0),
                contention_window: 1024,
                max_contention_window: 1024,
                fragments_per_packet: 4,
                fragment_time: ms(18.0),
            },
            radio: RadioConfig {
                tx_power: db_to_linear(S::lit(15.0)),
                max_tx_power: db_to_linear(S::lit(25.0)),
                noise_power: S::one(),
                pu_received_power: db_to_linear(S::lit(-20.0)),
                si_scale: S::lit(0.4),
                si_exponent: S::lit(0.02),
                sampling_frequency: S::lit(6e6),
            },
            target_detection_prob: S::lit(0.8),
            options: ModelOptions::default(),
        }
    }

    /// Every violated invariant, not just the first.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.num_su_pairs < 1 {
            v.push(Violation {
                field: "num_su_pairs",
                message: "must be at least 1".into(),
            });
        }
        if !(self.target_detection_prob > S::zero() && self.target_detection_prob < S::one()) {
            v.push(Violation {
                field: "target_detection_prob",
                message: format!("must lie in (0, 1), got {}", self.target_detection_prob),
            });
        }
        v.extend(self.pu.violations());
        v.extend(self.mac.violations(self.pu.evacuation_time));
        v.extend(self.radio.violations());
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    pub fn prob_idle(&self) -> S {
        prob_idle(&self.pu, self.options.prob_idle_uses_shift)
    }

    pub fn with_tx_power(mut self, tx_power: S) -> Self {
        self.radio.tx_power = tx_power;
        self
    }

    pub fn with_fragment_time(mut self, fragment_time: S) -> Self {
        self.mac.fragment_time = fragment_time;
        self
    }

    pub fn with_contention_window(mut self, w: usize) -> Self {
        self.mac.contention_window = w;
        self
    }
}

pub fn db_to_linear<S: Scalar>(db: S) -> S {
    S::lit(10.0).powf(db / S::lit(10.0))
}

pub fn linear_to_db<S: Scalar>(lin: S) -> S {
    S::lit(10.0) * lin.log10()
}

/// Standard Gaussian tail `Pr{Z > x}`.
pub fn gaussian_tail<S: Scalar>(x: S) -> S {
    S::lit(0.5) * (x / S::SQRT_2()).erfc()
}

/// Density of `min + Exp(mean)` at `t`.
pub fn shifted_exp_pdf<S: Scalar>(t: S, mean: S, min: S) -> Result<S> {
    if !(mean > S::zero()) {
        return Err(Error::OutOfRange {
            what: "mean",
            detail: format!("shifted exponential mean must be positive, got {mean}"),
        });
    }
    if t < min {
        return Ok(S::zero());
    }
    Ok((-(t - min) / mean).exp() / mean)
}

/// One draw of `min + Exp(mean)`.
pub fn shifted_exp_sample<S: Scalar, R: Rng + ?Sized>(mean: S, min: S, rng: &mut R) -> S {
    let e: f64 = rng.sample(Exp1);
    min + mean * S::lit(e)
}

/// Stationary probability that the primary user is idle.
///
/// With `uses_shift` the ratio is taken over total mean holding times
/// (`min + mean`), otherwise over the exponential means alone.
pub fn prob_idle<S: Scalar>(pu: &PuActivityModel<S>, uses_shift: bool) -> S {
    let (idle, active) = if uses_shift {
        (pu.mean_idle_total(), pu.mean_active_total())
    } else {
        (pu.mean_idle, pu.mean_active)
    };
    if active.is_infinite() {
        return S::zero();
    }
    if idle.is_infinite() {
        return S::one();
    }
    idle / (idle + active)
}
