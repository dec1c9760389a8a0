//! Bits per Hz delivered by one fragment under each PU event.

use crate::error::{Error, Result};
use crate::model::{FragmentEvent, ModelOptions, RadioConfig};
use crate::scalar::Scalar;

/// Secondary-link SNRs with the PU silent and active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FragmentRates<S> {
    pub snr_idle: S,
    pub snr_busy: S,
}

impl<S: Scalar> FragmentRates<S> {
    /// Rates at the configured transmit power. With `receiver_self_interference`
    /// off the receiver sees `N0` (plus PU power) only.
    pub fn new(radio: &RadioConfig<S>, options: &ModelOptions) -> Self {
        let i = if options.receiver_self_interference {
            radio.self_interference()
        } else {
            S::zero()
        };
        Self::with_interference(radio, i)
    }

    pub fn with_interference(radio: &RadioConfig<S>, interference: S) -> Self {
        let floor = radio.noise_power + interference;
        Self {
            snr_idle: radio.tx_power / floor,
            snr_busy: radio.tx_power / (floor + radio.pu_received_power),
        }
    }

    /// Spectral efficiency with the PU idle (bits/s/Hz).
    pub fn idle_rate(&self) -> S {
        self.snr_idle.ln_1p() / S::LN_2()
    }

    pub fn busy_rate(&self) -> S {
        self.snr_busy.ln_1p() / S::LN_2()
    }

    /// Bits per Hz over a window of length `duration` with a change at `t`
    /// (ignored for events without a change). No range checking.
    #[inline]
    pub fn bits(&self, event: FragmentEvent, t: S, duration: S) -> S {
        let (ri, rb) = (self.idle_rate(), self.busy_rate());
        match event {
            FragmentEvent::H00 => duration * ri,
            FragmentEvent::H11 => duration * rb,
            FragmentEvent::H10 => t * rb + (duration - t) * ri,
            FragmentEvent::H01 => t * ri + (duration - t) * rb,
        }
    }
}

/// Per-event bits for a fragment of length `fragment_time`.
pub fn fragment_bits<S: Scalar>(event: FragmentEvent, t: S, fragment_time: S, rates: &FragmentRates<S>) -> Result<S> {
    if !(fragment_time > S::zero()) {
        return Err(Error::OutOfRange {
            what: "fragment_time",
            detail: format!("must be positive, got {fragment_time}"),
        });
    }
    if event.has_change() && !(t >= S::zero() && t <= fragment_time) {
        return Err(Error::OutOfRange {
            what: "change instant",
            detail: format!("must lie in [0, {fragment_time}], got {t}"),
        });
    }
    Ok(rates.bits(event, t, fragment_time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkConfig;
    use proptest::prelude::*;
    use FragmentEvent::*;

    fn rates() -> (FragmentRates<f64>, f64) {
        let c = NetworkConfig::<f64>::reference();
        (FragmentRates::new(&c.radio, &c.options), c.mac.fragment_time)
    }

    #[test]
    fn endpoints_reduce() {
        let (r, t) = rates();
        let b00 = fragment_bits(H00, 0.0, t, &r).unwrap();
        let b11 = fragment_bits(H11, 0.0, t, &r).unwrap();
        assert!((fragment_bits(H10, 0.0, t, &r).unwrap() - b00).abs() < 1e-15);
        assert!((fragment_bits(H01, t, t, &r).unwrap() - b00).abs() < 1e-15);
        assert!((fragment_bits(H01, 0.0, t, &r).unwrap() - b11).abs() < 1e-15);
        assert!(b00 > b11);
        assert!(r.snr_busy < r.snr_idle);
    }

    #[test]
    fn silent_pu_equalizes_events() {
        let mut c = NetworkConfig::<f64>::reference();
        c.radio.pu_received_power = 0.0;
        let r = FragmentRates::new(&c.radio, &c.options);
        let t = c.mac.fragment_time;
        let want = t * (1.0 + r.snr_idle).log2();
        for e in FragmentEvent::ALL {
            assert!((fragment_bits(e, t / 3.0, t, &r).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn receiver_flag_removes_interference() {
        let mut c = NetworkConfig::<f64>::reference();
        c.options.receiver_self_interference = false;
        let r = FragmentRates::new(&c.radio, &c.options);
        assert!((r.snr_idle - c.radio.tx_power).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_instant_rejected() {
        let (r, t) = rates();
        assert!(fragment_bits(H10, -1e-6, t, &r).is_err());
        assert!(fragment_bits(H01, 2.0 * t, t, &r).is_err());
        assert!(fragment_bits(H00, 2.0 * t, t, &r).is_ok());
    }

    proptest! {
        #[test]
        fn complementarity_and_bounds(frac in 0.0f64..=1.0, ps_db in -5.0f64..30.0) {
            let mut c = NetworkConfig::<f64>::reference();
            c.radio.tx_power = crate::model::db_to_linear(ps_db);
            let r = FragmentRates::new(&c.radio, &c.options);
            let t = c.mac.fragment_time;
            let x = frac * t;
            let b = |e| fragment_bits(e, x, t, &r).unwrap();
            let lhs = b(H10) + b(H01);
            let rhs = b(H00) + b(H11);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
            for e in [H10, H01] {
                prop_assert!(b(e) >= b(H11) - 1e-15 && b(e) <= b(H00) + 1e-15);
            }
        }

        #[test]
        fn monotone_in_change_instant(a in 0.0f64..1.0, d in 0.0f64..1.0) {
            let (r, t) = rates();
            let (x, y) = (a * t, (a + (1.0 - a) * d) * t);
            prop_assert!(r.bits(H10, y, t) <= r.bits(H10, x, t) + 1e-15);
            prop_assert!(r.bits(H01, y, t) >= r.bits(H01, x, t) - 1e-15);
        }
    }
}
