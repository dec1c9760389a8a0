//! Backoff contention: probability that one SU wins alone at slot `i0`, and
//! the reservation overhead preceding its data phase.

use crate::error::{Error, Result};
use crate::model::MacTimingConfig;
use crate::scalar::Scalar;

/// `n0·(1/W)·((W−1−i0)/W)^(n0−1)`.
pub fn contention_success_prob<S: Scalar>(i0: usize, n0: usize, w: usize) -> Result<S> {
    if w == 0 || i0 >= w {
        return Err(Error::OutOfRange {
            what: "backoff slot",
            detail: format!("slot {i0} outside [0, {}]", w.saturating_sub(1)),
        });
    }
    if n0 == 0 {
        return Err(Error::OutOfRange {
            what: "num_su_pairs",
            detail: "at least one contender required".into(),
        });
    }
    let wf = S::from_usize_lossy(w);
    let later = S::from_usize_lossy(w - 1 - i0) / wf;
    let exp = i32::try_from(n0 - 1).map_err(|_| Error::OutOfRange {
        what: "num_su_pairs",
        detail: format!("{n0} contenders is too many"),
    })?;
    Ok(S::from_usize_lossy(n0) / wf * later.powi(exp))
}

/// Time from the start of the reservation to the first data fragment:
/// `i0·σ + 2·SIFS + RTS + CTS + DIFS`.
pub fn reservation_overhead<S: Scalar>(i0: usize, mac: &MacTimingConfig<S>) -> S {
    base_overhead(mac) + S::from_usize_lossy(i0) * mac.mini_slot
}

/// Overhead at `i0 = 0`.
pub fn base_overhead<S: Scalar>(mac: &MacTimingConfig<S>) -> S {
    S::lit(2.0) * mac.sifs + mac.rts + mac.cts + mac.difs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkConfig;
    use proptest::prelude::*;

    #[test]
    fn single_contender_uniform() {
        let w = 16;
        let total: f64 = (0..w)
            .map(|i| {
                let p: f64 = contention_success_prob(i, 1, w).unwrap();
                assert!((p - 1.0 / w as f64).abs() < 1e-15);
                p
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn last_slot_never_wins_with_rivals() {
        assert_eq!(contention_success_prob::<f64>(7, 3, 8).unwrap(), 0.0);
        assert!(contention_success_prob::<f64>(8, 3, 8).is_err());
    }

    #[test]
    fn two_contenders_match_enumeration() {
        // Enumerate all counter pairs in a window of 4.
        let w = 4;
        let mut wins_at_zero = 0;
        for a in 0..w {
            for b in 0..w {
                if a.min(b) == 0 && a != b {
                    wins_at_zero += 1;
                }
            }
        }
        let oracle = wins_at_zero as f64 / (w * w) as f64;
        assert_eq!(oracle, 0.375);
        let p: f64 = contention_success_prob(0, 2, 4).unwrap();
        assert!((p - oracle).abs() < 1e-15);
    }

    #[test]
    fn overhead_is_affine() {
        let mac = NetworkConfig::<f64>::reference().mac;
        let base = 2.0 * 10e-6 + 352e-6 + 304e-6 + 50e-6;
        assert!((reservation_overhead(0, &mac) - base).abs() < 1e-15);
        assert!((reservation_overhead(1, &mac) - reservation_overhead(0, &mac) - 20e-6).abs() < 1e-15);
        assert!((reservation_overhead(10, &mac) - (base + 200e-6)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn success_mass_at_most_one(n0 in 1usize..60, w in 1usize..2048) {
            let s: f64 = (0..w).map(|i| contention_success_prob::<f64>(i, n0, w).unwrap()).sum();
            prop_assert!(s <= 1.0 + 1e-12);
            prop_assert!(s >= 0.0);
        }
    }
}
