//! Energy-detector error probabilities for the four per-fragment PU events,
//! their average over a change instant, and threshold calibration.

use crate::error::{Error, Result};
use crate::model::{gaussian_tail, prob_idle, FragmentEvent, NetworkConfig, PuActivityModel, RadioConfig};
use crate::quadrature;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensingMode {
    /// Sensing while transmitting; the detector sees `N0 + I`.
    FullDuplex,
    /// Silent sensing; the detector sees `N0` only.
    HalfDuplex,
}

impl SensingMode {
    pub fn label(self) -> &'static str {
        match self {
            Self::FullDuplex => "fd",
            Self::HalfDuplex => "hd",
        }
    }
}

/// Detector statistics for one mode, radio setting, and sensing duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDetector<S> {
    /// Noise-plus-interference floor seen by the detector.
    pub noise: S,
    /// PU SNR at the detector.
    pub snr: S,
    /// Square root of the number of samples, `√(f_s·T)`.
    pub sqrt_samples: S,
    pub duration: S,
}

impl<S: Scalar> EnergyDetector<S> {
    pub fn new(radio: &RadioConfig<S>, duration: S, mode: SensingMode) -> Result<Self> {
        if !(duration > S::zero() && duration.is_finite()) {
            return Err(Error::OutOfRange {
                what: "sensing duration",
                detail: format!("must be finite and positive, got {duration}"),
            });
        }
        let noise = match mode {
            SensingMode::FullDuplex => radio.noise_power + radio.self_interference(),
            SensingMode::HalfDuplex => radio.noise_power,
        };
        Ok(Self {
            noise,
            snr: radio.pu_received_power / noise,
            sqrt_samples: (radio.sampling_frequency * duration).sqrt(),
            duration,
        })
    }

    fn check_threshold(threshold: S) -> Result<()> {
        if threshold > S::zero() && threshold.is_finite() {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "threshold",
                detail: format!("must be finite and positive, got {threshold}"),
            })
        }
    }

    fn check_instant(&self, t: S) -> Result<()> {
        if t >= S::zero() && t <= self.duration {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "change instant",
                detail: format!("must lie in [0, {}], got {t}", self.duration),
            })
        }
    }

    /// Busy-verdict probability when the PU is active for a fraction `r`
    /// of the window.
    #[inline]
    pub fn busy_given_active_fraction(&self, threshold: S, r: S) -> S {
        let g1 = self.snr + S::one();
        let num = (threshold / self.noise - r * self.snr - S::one()) * self.sqrt_samples;
        let den = (r * g1 * g1 + S::one() - r).sqrt();
        gaussian_tail(num / den)
    }

    pub fn false_alarm_00(&self, threshold: S) -> S {
        gaussian_tail((threshold / self.noise - S::one()) * self.sqrt_samples)
    }

    pub fn detection_11(&self, threshold: S) -> S {
        let g1 = self.snr + S::one();
        gaussian_tail((threshold / self.noise - self.snr - S::one()) * self.sqrt_samples / g1)
    }

    /// Active then idle, change at `t`.
    pub fn false_alarm_10(&self, threshold: S, t: S) -> S {
        self.busy_given_active_fraction(threshold, t / self.duration)
    }

    /// Idle then active, change at `t`.
    pub fn detection_01(&self, threshold: S, t: S) -> S {
        self.busy_given_active_fraction(threshold, (self.duration - t) / self.duration)
    }

    /// Busy-verdict probability for a fragment event; `t` is ignored when the
    /// event has no change.
    #[inline]
    pub fn busy_probability(&self, threshold: S, event: FragmentEvent, t: S) -> S {
        match event {
            FragmentEvent::H00 => self.false_alarm_00(threshold),
            FragmentEvent::H11 => self.detection_11(threshold),
            FragmentEvent::H10 => self.false_alarm_10(threshold, t),
            FragmentEvent::H01 => self.detection_01(threshold, t),
        }
    }
}

pub fn false_alarm_00<S: Scalar>(threshold: S, radio: &RadioConfig<S>, fragment_time: S, mode: SensingMode) -> Result<S> {
    EnergyDetector::<S>::check_threshold(threshold)?;
    Ok(EnergyDetector::new(radio, fragment_time, mode)?.false_alarm_00(threshold))
}

pub fn detection_11<S: Scalar>(threshold: S, radio: &RadioConfig<S>, fragment_time: S, mode: SensingMode) -> Result<S> {
    EnergyDetector::<S>::check_threshold(threshold)?;
    Ok(EnergyDetector::new(radio, fragment_time, mode)?.detection_11(threshold))
}

pub fn false_alarm_10<S: Scalar>(
    threshold: S,
    radio: &RadioConfig<S>,
    fragment_time: S,
    t: S,
    mode: SensingMode,
) -> Result<S> {
    EnergyDetector::<S>::check_threshold(threshold)?;
    let d = EnergyDetector::new(radio, fragment_time, mode)?;
    d.check_instant(t)?;
    Ok(d.false_alarm_10(threshold, t))
}

pub fn detection_01<S: Scalar>(
    threshold: S,
    radio: &RadioConfig<S>,
    fragment_time: S,
    t: S,
    mode: SensingMode,
) -> Result<S> {
    EnergyDetector::<S>::check_threshold(threshold)?;
    let d = EnergyDetector::new(radio, fragment_time, mode)?;
    d.check_instant(t)?;
    Ok(d.detection_01(threshold, t))
}

const AVG_ABS_TOL: f64 = 1e-9;

/// The average-detection functional for one mode and sensing duration.
#[derive(Debug, Clone, Copy)]
pub struct AverageDetection<S> {
    pub detector: EnergyDetector<S>,
    mean_idle: S,
    /// Mixture weight of the fully-active event.
    pub weight_11: S,
    /// Mixture weight of the idle-to-active event.
    pub weight_01: S,
}

impl<S: Scalar> AverageDetection<S> {
    pub fn new(
        radio: &RadioConfig<S>,
        pu: &PuActivityModel<S>,
        duration: S,
        mode: SensingMode,
        prob_idle_uses_shift: bool,
    ) -> Result<Self> {
        let detector = EnergyDetector::new(radio, duration, mode)?;
        let p0 = prob_idle(pu, prob_idle_uses_shift);
        let p1 = S::one() - p0;
        let p01 = p0 * -(-duration / pu.mean_idle).exp_m1();
        let p11 = p1 * (-duration / pu.mean_active).exp();
        let total = p01 + p11;
        if !(total > S::zero()) {
            return Err(Error::OutOfRange {
                what: "average detection",
                detail: "no probability mass on events that end active".into(),
            });
        }
        Ok(Self {
            detector,
            mean_idle: pu.mean_idle,
            weight_11: p11 / total,
            weight_01: p01 / total,
        })
    }

    /// Density of the change instant within the window, conditioned on it
    /// falling inside.
    pub fn change_density(&self, t: S) -> S {
        let tau = self.mean_idle;
        let mass = -(-self.detector.duration / tau).exp_m1();
        if mass <= S::zero() || !mass.is_finite() {
            return S::one() / self.detector.duration;
        }
        (-t / tau).exp() / (tau * mass)
    }

    pub fn avg_detection_01(&self, threshold: S) -> Result<S> {
        EnergyDetector::<S>::check_threshold(threshold)?;
        let d = self.detector;
        let (v, _) = quadrature::integrate(
            |t| d.detection_01(threshold, t) * self.change_density(t),
            S::zero(),
            d.duration,
            S::lit(AVG_ABS_TOL),
        )?;
        Ok(v)
    }

    pub fn avg_detection(&self, threshold: S) -> Result<S> {
        let d11 = self.detector.detection_11(threshold);
        let d01 = if self.weight_01 > S::zero() {
            self.avg_detection_01(threshold)?
        } else {
            S::zero()
        };
        Ok(self.weight_11 * d11 + self.weight_01 * d01)
    }

    /// Threshold meeting `avg_detection(ε) = target`.
    pub fn calibrate(&self, target: S) -> Result<(S, S)> {
        if !(target > S::zero() && target < S::one()) {
            return Err(Error::OutOfRange {
                what: "target detection probability",
                detail: format!("must lie in (0, 1), got {target}"),
            });
        }
        let tol = S::lit(1e-8).max(S::lit(64.0) * S::epsilon());
        let d = self.detector;
        let spread = S::lit(10.0) / d.sqrt_samples;
        let mut lo = d.noise * (S::one() - spread);
        if lo <= S::zero() {
            lo = d.noise * S::lit(1e-3);
        }
        let mut hi = d.noise * (S::one() + d.snr) * (S::one() + spread);
        let mut f_lo = self.avg_detection(lo)?;
        let mut expansions = 0;
        while f_lo < target {
            expansions += 1;
            if expansions > 60 {
                return Err(Error::Calibration(format!(
                    "target {target} unreachable: detection stays at {f_lo} for thresholds down to {lo}"
                )));
            }
            lo = lo * S::lit(0.5);
            f_lo = self.avg_detection(lo)?;
        }
        let mut f_hi = self.avg_detection(hi)?;
        while f_hi > target {
            expansions += 1;
            if expansions > 60 {
                return Err(Error::Calibration(format!(
                    "target {target} unreachable: detection stays at {f_hi} for thresholds up to {hi}"
                )));
            }
            hi = hi * S::lit(2.0);
            f_hi = self.avg_detection(hi)?;
        }
        let (mut best, mut best_err) = if (f_lo - target).abs() < (f_hi - target).abs() {
            (lo, (f_lo - target).abs())
        } else {
            (hi, (f_hi - target).abs())
        };
        for _ in 0..200 {
            if best_err <= tol * S::lit(0.01) {
                break;
            }
            let mid = (lo + hi) * S::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = self.avg_detection(mid)?;
            let err = (fm - target).abs();
            if err < best_err {
                best = mid;
                best_err = err;
            }
            if fm > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if best_err > tol {
            return Err(Error::Calibration(format!(
                "bisection stalled at threshold {best} with residual {best_err}"
            )));
        }
        Ok((best, self.avg_detection(best)?))
    }
}

pub fn avg_detection_01<S: Scalar>(
    threshold: S,
    cfg: &NetworkConfig<S>,
    fragment_time: S,
    mode: SensingMode,
) -> Result<S> {
    AverageDetection::new(&cfg.radio, &cfg.pu, fragment_time, mode, cfg.options.prob_idle_uses_shift)?
        .avg_detection_01(threshold)
}

pub fn avg_detection<S: Scalar>(threshold: S, cfg: &NetworkConfig<S>, fragment_time: S, mode: SensingMode) -> Result<S> {
    EnergyDetector::<S>::check_threshold(threshold)?;
    AverageDetection::new(&cfg.radio, &cfg.pu, fragment_time, mode, cfg.options.prob_idle_uses_shift)?
        .avg_detection(threshold)
}

/// Probability of a busy verdict at the end of a fragment.
pub trait VerdictModel<S>: Sync {
    /// `t` is the local change instant and is ignored for events without a change.
    fn busy_probability(&self, mode: SensingMode, event: FragmentEvent, t: S) -> S;
}

/// Calibrated thresholds for both sensing modes at one `(T, P_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingCalibration<S> {
    pub threshold_fd: S,
    pub threshold_hd: S,
    pub fragment_time: S,
    pub tx_power: S,
    pub achieved_avg_detection_fd: S,
    pub achieved_avg_detection_hd: S,
    fd: EnergyDetector<S>,
    hd: EnergyDetector<S>,
}

impl<S: Scalar> SensingCalibration<S> {
    pub fn detector(&self, mode: SensingMode) -> &EnergyDetector<S> {
        match mode {
            SensingMode::FullDuplex => &self.fd,
            SensingMode::HalfDuplex => &self.hd,
        }
    }

    pub fn threshold(&self, mode: SensingMode) -> S {
        match mode {
            SensingMode::FullDuplex => self.threshold_fd,
            SensingMode::HalfDuplex => self.threshold_hd,
        }
    }
}

impl<S: Scalar> VerdictModel<S> for SensingCalibration<S> {
    #[inline]
    fn busy_probability(&self, mode: SensingMode, event: FragmentEvent, t: S) -> S {
        self.detector(mode).busy_probability(self.threshold(mode), event, t)
    }
}

/// Error-free sensing: the verdict equals the PU state at the fragment end.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PerfectSensing;

impl<S: Scalar> VerdictModel<S> for PerfectSensing {
    #[inline]
    fn busy_probability(&self, _mode: SensingMode, event: FragmentEvent, _t: S) -> S {
        if event.ends_idle() {
            S::zero()
        } else {
            S::one()
        }
    }
}

/// Threshold for one mode meeting the target average detection probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdCalibration<S> {
    pub threshold: S,
    pub achieved_avg_detection: S,
}

pub fn calibrate_threshold<S: Scalar>(
    cfg: &NetworkConfig<S>,
    fragment_time: S,
    tx_power: S,
    target: S,
    mode: SensingMode,
) -> Result<ThresholdCalibration<S>> {
    let radio = cfg.radio.with_tx_power(tx_power);
    let avg = AverageDetection::new(&radio, &cfg.pu, fragment_time, mode, cfg.options.prob_idle_uses_shift)?;
    let (threshold, achieved) = avg.calibrate(target)?;
    Ok(ThresholdCalibration {
        threshold,
        achieved_avg_detection: achieved,
    })
}

/// Calibrates both modes at the given sensing duration and transmit power
/// against the configured target.
pub fn calibrate<S: Scalar>(cfg: &NetworkConfig<S>, fragment_time: S, tx_power: S) -> Result<SensingCalibration<S>> {
    let target = cfg.target_detection_prob;
    let fd = calibrate_threshold(cfg, fragment_time, tx_power, target, SensingMode::FullDuplex)?;
    let hd = calibrate_threshold(cfg, fragment_time, tx_power, target, SensingMode::HalfDuplex)?;
    let radio = cfg.radio.with_tx_power(tx_power);
    Ok(SensingCalibration {
        threshold_fd: fd.threshold,
        threshold_hd: hd.threshold,
        fragment_time,
        tx_power,
        achieved_avg_detection_fd: fd.achieved_avg_detection,
        achieved_avg_detection_hd: hd.achieved_avg_detection,
        fd: EnergyDetector::new(&radio, fragment_time, SensingMode::FullDuplex)?,
        hd: EnergyDetector::new(&radio, fragment_time, SensingMode::HalfDuplex)?,
    })
}

impl<S: Scalar> NetworkConfig<S> {
    /// Calibration at the configured fragment time and transmit power.
    pub fn calibrate(&self) -> Result<SensingCalibration<S>> {
        calibrate(self, self.mac.fragment_time, self.radio.tx_power)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::db_to_linear;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FD: SensingMode = SensingMode::FullDuplex;
    const HD: SensingMode = SensingMode::HalfDuplex;

    fn cfg() -> NetworkConfig<f64> {
        NetworkConfig::reference()
    }

    #[test]
    fn false_alarm_zero_argument() {
        let c = cfg();
        let t = c.mac.fragment_time;
        let n = 1.0 + c.radio.self_interference();
        assert!((false_alarm_00(n, &c.radio, t, FD).unwrap() - 0.5).abs() < 1e-15);
        assert!((false_alarm_00(1.0, &c.radio, t, HD).unwrap() - 0.5).abs() < 1e-15);
        assert!(false_alarm_00(1e6, &c.radio, t, FD).unwrap() < 1e-300);
    }

    #[test]
    fn false_alarm_at_five_percent_argument() {
        let c = cfg();
        for t in [0.005, 0.018, 0.04] {
            let d = EnergyDetector::new(&c.radio, t, FD).unwrap();
            let eps = d.noise * (1.0 + 1.6449 / d.sqrt_samples);
            let v = false_alarm_00(eps, &c.radio, t, FD).unwrap();
            assert!((v - 0.05).abs() < 1e-4);
        }
    }

    #[test]
    fn detection_zero_argument_and_dominance() {
        let c = cfg();
        let t = c.mac.fragment_time;
        let d = EnergyDetector::new(&c.radio, t, FD).unwrap();
        let eps = (d.snr + 1.0) * d.noise;
        assert!((detection_11(eps, &c.radio, t, FD).unwrap() - 0.5).abs() < 1e-12);
        for k in 1..50 {
            let e = d.noise * (0.99 + 0.0005 * k as f64);
            assert!(d.detection_11(e) >= d.false_alarm_00(e));
        }
    }

    #[test]
    fn detection_11_matches_density_oracle() {
        // I = 0: both modes coincide. Oracle integrates the normal density.
        let mut radio = cfg().radio;
        radio.si_scale = 0.0;
        let t = 0.018;
        let eps = 1.005;
        let g = 0.01;
        let x = (eps - g - 1.0) * (6e6_f64 * t).sqrt() / (g + 1.0);
        let phi = |u: f64| (-u * u / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let (oracle, _) = quadrature::integrate(phi, x, x + 40.0, 1e-13).unwrap();
        let v = detection_11(eps, &radio, t, FD).unwrap();
        assert!((v - oracle).abs() < 1e-6, "{v} vs {oracle}");
        assert_eq!(v, detection_11(eps, &radio, t, HD).unwrap());
    }

    #[test]
    fn change_instant_is_range_checked() {
        let c = cfg();
        let t = c.mac.fragment_time;
        assert!(false_alarm_10(1.0, &c.radio, t, -1e-9, FD).is_err());
        assert!(detection_01(1.0, &c.radio, t, t * 1.0001, FD).is_err());
        assert!(false_alarm_00(0.0, &c.radio, t, FD).is_err());
        assert!(false_alarm_00(1.0, &c.radio, 0.0, FD).is_err());
    }

    #[test]
    fn midpoint_between_endpoints() {
        let c = cfg();
        let t = c.mac.fragment_time;
        let d = EnergyDetector::new(&c.radio, t, FD).unwrap();
        let eps = d.noise * 1.003;
        let (f00, d11) = (d.false_alarm_00(eps), d.detection_11(eps));
        for v in [d.false_alarm_10(eps, t / 2.0), d.detection_01(eps, t / 2.0)] {
            assert!(v > f00.min(d11) && v < f00.max(d11));
        }
        // Sampled path is monotone between the endpoints.
        let mut prev = f00;
        for k in 1..=100 {
            let v = d.false_alarm_10(eps, t * k as f64 / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn change_density_normalized() {
        let c = cfg();
        let avg = AverageDetection::new(&c.radio, &c.pu, 0.018, FD, true).unwrap();
        let (m, _) = quadrature::integrate(|t| avg.change_density(t), 0.0, 0.018, 1e-12).unwrap();
        assert!((m - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shifted_density_mass_over_window() {
        let (mean, min, t) = (0.2_f64, 0.04, 0.018);
        let (m, _) = quadrature::integrate(
            |x| crate::model::shifted_exp_pdf(x, mean, min).unwrap(),
            min,
            min + t,
            1e-13,
        )
        .unwrap();
        assert!((m - (1.0 - (-t / mean).exp())).abs() < 1e-9);
        let (all, _) = quadrature::integrate(
            |x| crate::model::shifted_exp_pdf(x, mean, min).unwrap(),
            min,
            min + 60.0 * mean,
            1e-12,
        )
        .unwrap();
        assert!((all - 1.0).abs() < 1e-9);
    }

    #[test]
    fn avg_detection_01_constant_integrand() {
        let mut c = cfg();
        c.radio.pu_received_power = 0.0;
        c.pu.mean_active = 0.1;
        let t = 0.018;
        let d = EnergyDetector::new(&c.radio, t, FD).unwrap();
        let eps = d.noise * 1.001;
        let v = avg_detection_01(eps, &c, t, FD).unwrap();
        assert!((v - d.false_alarm_00(eps)).abs() < 1e-12);
    }

    #[test]
    fn avg_detection_01_matches_monte_carlo() {
        let c = cfg();
        let t = c.mac.fragment_time;
        let d = EnergyDetector::new(&c.radio, t, FD).unwrap();
        let eps = d.noise * 1.006;
        let exact = avg_detection_01(eps, &c, t, FD).unwrap();
        let tau = c.pu.mean_idle;
        let mass = 1.0 - (-t / tau).exp();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            // Inverse CDF of the truncated exponential on [0, T].
            let u: f64 = rng.gen();
            let x = -tau * (1.0 - u * mass).ln();
            let v = d.detection_01(eps, x);
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - exact).abs() < 3.0 * se + 1e-12, "{mean} vs {exact} (se {se})");
    }

    #[test]
    fn avg_detection_limits() {
        let mut c = cfg();
        let t = c.mac.fragment_time;
        let eps = 1.01;
        let v = avg_detection(1e-6, &c, t, FD).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        c.pu.mean_idle = 1e15;
        let avg = AverageDetection::new(&c.radio, &c.pu, t, FD, true).unwrap();
        assert!((avg.weight_11 + avg.weight_01 - 1.0).abs() < 1e-15);
        let v = avg.avg_detection(eps).unwrap();
        assert!((v - avg.detector.detection_11(eps)).abs() < 1e-9);
    }

    #[test]
    fn calibration_round_trip_both_modes() {
        let c = cfg();
        let t = c.mac.fragment_time;
        for target in [0.5, 0.8, 0.9, 0.99] {
            for mode in [FD, HD] {
                let cal = calibrate_threshold(&c, t, c.radio.tx_power, target, mode).unwrap();
                let v = avg_detection(cal.threshold, &c, t, mode).unwrap();
                assert!((v - target).abs() <= 1e-8, "{target} {mode:?}: {v}");
            }
        }
    }

    #[test]
    fn calibration_collapses_without_pu_signal() {
        let mut c = cfg();
        c.radio.pu_received_power = 1e-12;
        let t = c.mac.fragment_time;
        let cal = calibrate_threshold(&c, t, c.radio.tx_power, 0.5, FD).unwrap();
        let n = 1.0 + c.radio.self_interference();
        assert!((cal.threshold - n).abs() < 1e-9);
    }

    #[test]
    fn calibrated_false_alarm_below_half() {
        let mut c = cfg();
        c.radio.si_exponent = 0.04;
        c.radio.tx_power = db_to_linear(10.78);
        let cal = c.calibrate().unwrap();
        let fa = cal.busy_probability(FD, FragmentEvent::H00, 0.0);
        assert!(fa < 0.5, "{fa}");
        assert!(cal.threshold_fd > 0.0 && cal.threshold_hd > 0.0);
    }

    #[test]
    fn calibration_f32() {
        let c = NetworkConfig::<f32>::reference();
        let cal = c.calibrate().unwrap();
        assert!((cal.achieved_avg_detection_fd - 0.8).abs() < 1e-5);
        assert!((cal.achieved_avg_detection_hd - 0.8).abs() < 1e-5);
    }

    #[test]
    fn perfect_sensing_follows_end_state() {
        let p = PerfectSensing;
        for e in FragmentEvent::ALL {
            let v: f64 = p.busy_probability(FD, e, 0.001);
            assert_eq!(v, if e.ends_idle() { 0.0 } else { 1.0 });
        }
    }

    proptest! {
        #[test]
        fn endpoint_identities(ratio in 0.95f64..1.05, t in 0.001f64..0.04, ps_db in 0.0f64..30.0) {
            let mut radio = cfg().radio;
            radio.tx_power = db_to_linear(ps_db);
            radio.max_tx_power = radio.tx_power;
            for mode in [FD, HD] {
                let d = EnergyDetector::new(&radio, t, mode).unwrap();
                let eps = ratio * d.noise;
                let (f00, d11) = (d.false_alarm_00(eps), d.detection_11(eps));
                prop_assert!((d.false_alarm_10(eps, 0.0) - f00).abs() <= 1e-12);
                prop_assert!((d.false_alarm_10(eps, t) - d11).abs() <= 1e-12);
                prop_assert!((d.detection_01(eps, 0.0) - d11).abs() <= 1e-12);
                prop_assert!((d.detection_01(eps, t) - f00).abs() <= 1e-12);
            }
        }

        #[test]
        fn hd_snr_dominates(ps_db in -10.0f64..30.0, zeta in 0.0f64..1.0) {
            let mut radio = cfg().radio;
            radio.tx_power = db_to_linear(ps_db);
            radio.si_scale = zeta;
            let fd = EnergyDetector::new(&radio, 0.018, FD).unwrap();
            let hd = EnergyDetector::new(&radio, 0.018, HD).unwrap();
            prop_assert!(hd.snr >= fd.snr);
        }

        #[test]
        fn curves_decrease_in_threshold(r in 0.99f64..1.02, dr in 1e-4f64..1e-2, frac in 0.0f64..1.0) {
            let c = cfg();
            let t = c.mac.fragment_time;
            for mode in [FD, HD] {
                let d = EnergyDetector::new(&c.radio, t, mode).unwrap();
                let (a, b) = (r * d.noise, (r + dr) * d.noise);
                for e in FragmentEvent::ALL {
                    let pa = d.busy_probability(a, e, frac * t);
                    let pb = d.busy_probability(b, e, frac * t);
                    prop_assert!(pb <= pa);
                }
            }
        }

        #[test]
        fn avg_detection_is_a_mixture(r in 0.99f64..1.03) {
            let c = cfg();
            let t = c.mac.fragment_time;
            let avg = AverageDetection::new(&c.radio, &c.pu, t, FD, true).unwrap();
            let eps = r * avg.detector.noise;
            let d11 = avg.detector.detection_11(eps);
            let d01 = avg.avg_detection_01(eps).unwrap();
            let v = avg.avg_detection(eps).unwrap();
            prop_assert!(v >= d11.min(d01) - 1e-15 && v <= d11.max(d01) + 1e-15);
        }
    }
}
