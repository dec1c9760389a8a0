//! Expected bits of one data phase given the PU path, folded backwards over
//! the fragments.
//!
//! The state carried between fragments is the sensing mode of the next
//! fragment: full duplex after an idle verdict (or at the phase start), half
//! duplex after a busy verdict. `Vec2` values are indexed `[fd, hd]`.

use crate::fragment::FragmentRates;
use crate::model::{FragmentCredit, FragmentEvent, NetworkConfig};
use crate::scalar::Scalar;
use crate::sensing::{SensingMode, VerdictModel};

pub type Vec2<S> = [S; 2];

/// `v ↦ m·v + b` on the two-mode value vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine2<S> {
    pub m: [[S; 2]; 2],
    pub b: Vec2<S>,
}

impl<S: Scalar> Affine2<S> {
    pub fn identity() -> Self {
        Self {
            m: [[S::one(), S::zero()], [S::zero(), S::one()]],
            b: [S::zero(); 2],
        }
    }

    #[inline]
    pub fn apply(&self, v: Vec2<S>) -> Vec2<S> {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1] + self.b[0],
            self.m[1][0] * v[0] + self.m[1][1] * v[1] + self.b[1],
        ]
    }

    /// Linear part only.
    #[inline]
    pub fn apply_linear(&self, v: Vec2<S>) -> Vec2<S> {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        let m = &self.m;
        let n = &inner.m;
        let mm = [
            [
                m[0][0] * n[0][0] + m[0][1] * n[1][0],
                m[0][0] * n[0][1] + m[0][1] * n[1][1],
            ],
            [
                m[1][0] * n[0][0] + m[1][1] * n[1][0],
                m[1][0] * n[0][1] + m[1][1] * n[1][1],
            ],
        ];
        let mb = self.apply(inner.b);
        Self { m: mm, b: mb }
    }
}

/// Per-fragment transition structure shared by every integration backend.
#[derive(Debug, Clone)]
pub struct PacketModel<'a, S, V> {
    verdicts: &'a V,
    pub rates: FragmentRates<S>,
    pub fragment_time: S,
    pub fragments: usize,
    pub count_first_fragment: bool,
    pub credit: FragmentCredit,
    constant: [Affine2<S>; 2],
    constant_first: [Affine2<S>; 2],
}

impl<'a, S: Scalar, V: VerdictModel<S>> PacketModel<'a, S, V> {
    pub fn new(cfg: &NetworkConfig<S>, verdicts: &'a V) -> Self {
        let mut model = Self {
            verdicts,
            rates: FragmentRates::new(&cfg.radio, &cfg.options),
            fragment_time: cfg.mac.fragment_time,
            fragments: cfg.mac.fragments_per_packet,
            count_first_fragment: cfg.options.count_first_fragment,
            credit: cfg.options.fragment_credit,
            constant: [Affine2::identity(); 2],
            constant_first: [Affine2::identity(); 2],
        };
        for (k, e) in [FragmentEvent::H00, FragmentEvent::H11].into_iter().enumerate() {
            model.constant[k] = model.compute_step(2, e, S::zero());
            model.constant_first[k] = model.compute_step(1, e, S::zero());
        }
        model
    }

    pub fn verdicts(&self) -> &V {
        self.verdicts
    }

    /// Bits credited to fragment `j` (1-based) if it is sent.
    #[inline]
    pub fn credited_bits(&self, j: usize, event: FragmentEvent, t: S) -> S {
        if j == 1 && !self.count_first_fragment {
            S::zero()
        } else {
            self.rates.bits(event, t, self.fragment_time)
        }
    }

    fn compute_step(&self, j: usize, event: FragmentEvent, t: S) -> Affine2<S> {
        let bits = self.credited_bits(j, event, t);
        let q_fd = self.verdicts.busy_probability(SensingMode::FullDuplex, event, t);
        let q_hd = self.verdicts.busy_probability(SensingMode::HalfDuplex, event, t);
        let b_fd = match self.credit {
            FragmentCredit::OnTransmission => bits,
            FragmentCredit::OnIdleVerdict => (S::one() - q_fd) * bits,
        };
        Affine2 {
            m: [[S::one() - q_fd, q_fd], [S::one() - q_hd, q_hd]],
            b: [b_fd, S::zero()],
        }
    }

    /// Map from the value at fragment `j + 1` to the value at fragment `j`.
    #[inline]
    pub fn step(&self, j: usize, event: FragmentEvent, t: S) -> Affine2<S> {
        let table = if j == 1 { &self.constant_first } else { &self.constant };
        match event {
            FragmentEvent::H00 => table[0],
            FragmentEvent::H11 => table[1],
            _ => self.compute_step(j, event, t),
        }
    }

    /// Expected credited bits for a realized sequence of `(event, local change
    /// instant)` pairs, one per fragment, starting in full-duplex mode.
    pub fn value(&self, path: &[(FragmentEvent, S)]) -> S {
        debug_assert_eq!(path.len(), self.fragments);
        let mut v = [S::zero(); 2];
        for (j, &(e, t)) in path.iter().enumerate().rev() {
            v = self.step(j + 1, e, t).apply(v);
        }
        v[0]
    }

    /// Value when the PU stays idle over the whole data phase.
    pub fn all_idle_value(&self) -> S {
        let mut v = [S::zero(); 2];
        for j in (1..=self.fragments).rev() {
            v = self.step(j, FragmentEvent::H00, S::zero()).apply(v);
        }
        v[0]
    }

    /// Upper bound `K·T·log2(1 + γ_S1)` on any value.
    pub fn clean_bits(&self) -> S {
        S::from_usize_lossy(self.fragments) * self.fragment_time * self.rates.idle_rate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::PerfectSensing;

    #[test]
    fn compose_matches_sequential_application() {
        let f = Affine2 {
            m: [[0.3_f64, 0.7], [0.1, 0.9]],
            b: [2.0, 0.0],
        };
        let g = Affine2 {
            m: [[0.6, 0.4], [0.2, 0.8]],
            b: [1.0, 0.5],
        };
        let v = [3.0, -1.0];
        let a = f.apply(g.apply(v));
        let b = f.compose(&g).apply(v);
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    }

    #[test]
    fn perfect_sensing_all_idle_delivers_everything() {
        let cfg = NetworkConfig::<f64>::reference();
        let m = PacketModel::new(&cfg, &PerfectSensing);
        assert!((m.all_idle_value() - m.clean_bits()).abs() < 1e-12);
    }

    #[test]
    fn perfect_sensing_stops_after_pu_returns() {
        let cfg = NetworkConfig::<f64>::reference();
        let m = PacketModel::new(&cfg, &PerfectSensing);
        let t = cfg.mac.fragment_time;
        let path = [
            (FragmentEvent::H00, 0.0),
            (FragmentEvent::H01, 0.25 * t),
            (FragmentEvent::H11, 0.0),
            (FragmentEvent::H11, 0.0),
        ];
        let want = m.rates.bits(FragmentEvent::H00, 0.0, t) + m.rates.bits(FragmentEvent::H01, 0.25 * t, t);
        assert!((m.value(&path) - want).abs() < 1e-12);
    }

    #[test]
    fn first_fragment_flag() {
        let mut cfg = NetworkConfig::<f64>::reference();
        cfg.options.count_first_fragment = false;
        let m = PacketModel::new(&cfg, &PerfectSensing);
        let k = cfg.mac.fragments_per_packet as f64;
        assert!((m.all_idle_value() - m.clean_bits() * (k - 1.0) / k).abs() < 1e-12);
    }
}
