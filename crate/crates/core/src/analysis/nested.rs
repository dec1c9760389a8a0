//! Deterministic integration over PU holding times.
//!
//! `H_X(c)` is the expected value vector of the remaining fragments when the
//! PU enters state `X` at time `c` (data-relative, data start = 0). It obeys
//!
//! ```text
//! H_X(c) = Σ_p ∫_{frag p} f_X(c' − c − Tmin_X) · Chain_X · Step_p(X→X̄, c') H_X̄(c') dc'
//!        + P(no change before the packet end) · Chain_X · 0
//! ```
//!
//! where `Chain_X` applies the constant-state fragments between `c` and the
//! next change. Each `H_X` is smooth between breakpoints obtained by shifting
//! fragment boundaries back by the minimum holding times, so it is tabulated
//! on those pieces with Chebyshev interpolants, latest pieces first. The
//! integrand of every later change is fitted once per piece and integrated
//! exactly, so evaluating `H` at any lower limit costs `O(K·pieces)`.

use crate::analysis::packet::{Affine2, PacketModel, Vec2};
use crate::error::{Error, Result};
use crate::model::{FragmentEvent, PuActivityModel};
use crate::quadrature::{chebyshev_nodes, Chebyshev};
use crate::scalar::Scalar;
use crate::sensing::VerdictModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureOptions {
    /// Chebyshev nodes per piece.
    pub nodes: usize,
    /// Equal sub-pieces per smooth piece.
    pub subdivisions: usize,
    /// Rebuild at half resolution and report the difference.
    pub estimate_error: bool,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            nodes: 16,
            subdivisions: 2,
            estimate_error: true,
        }
    }
}

const IDLE: usize = 0;
const ACTIVE: usize = 1;

#[derive(Debug, Clone)]
struct Piece<S> {
    a: S,
    anti: [Chebyshev<S>; 2],
    total: Vec2<S>,
    /// Integral over all later pieces of the same fragment.
    tail_after: Vec2<S>,
}

#[derive(Debug, Clone)]
pub struct QuadratureEngine<S> {
    k: usize,
    ft: S,
    tau: [S; 2],
    tmin: [S; 2],
    /// `chains[x][a * (k + 2) + b]`: fragments `a..=b` with the PU held in `x`.
    chains: [Vec<Affine2<S>>; 2],
    /// `pieces[x][p - 1]`: integrand of a change out of `x` inside fragment `p`,
    /// in descending piece order.
    pieces: [Vec<Vec<Piece<S>>>; 2],
    totals: [Vec<Vec2<S>>; 2],
    prob_idle: S,
}

fn add<S: Scalar>(a: Vec2<S>, b: Vec2<S>) -> Vec2<S> {
    [a[0] + b[0], a[1] + b[1]]
}

fn scale<S: Scalar>(a: Vec2<S>, s: S) -> Vec2<S> {
    [a[0] * s, a[1] * s]
}

/// Breakpoint sets for both states on `[0, K·T]`.
fn breakpoints<S: Scalar>(k: usize, ft: S, tmin: [S; 2]) -> [Vec<S>; 2] {
    let end = S::from_usize_lossy(k) * ft;
    let tol = ft * S::lit(1e-9);
    let base: Vec<S> = (0..=k).map(|j| S::from_usize_lossy(j) * ft).collect();
    let mut sets = [base.clone(), base.clone()];
    loop {
        let mut changed = false;
        for x in [IDLE, ACTIVE] {
            let shifted: Vec<S> = sets[1 - x]
                .iter()
                .map(|&b| b - tmin[x])
                .filter(|&b| b > tol && b < end - tol)
                .collect();
            for b in shifted {
                if !sets[x].iter().any(|&e| (e - b).abs() <= tol) {
                    sets[x].push(b);
                    changed = true;
                }
            }
            sets[x].sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        }
        if !changed {
            return sets;
        }
    }
}

impl<S: Scalar> QuadratureEngine<S> {
    pub fn build<V: VerdictModel<S>>(
        model: &PacketModel<'_, S, V>,
        pu: &PuActivityModel<S>,
        prob_idle: S,
        options: &QuadratureOptions,
    ) -> Result<Self> {
        if options.nodes < 2 || options.subdivisions < 1 {
            return Err(Error::OutOfRange {
                what: "quadrature options",
                detail: format!(
                    "need at least 2 nodes and 1 subdivision, got {} and {}",
                    options.nodes, options.subdivisions
                ),
            });
        }
        let k = model.fragments;
        let ft = model.fragment_time;
        let tmin = [pu.min_idle, pu.min_active];
        if tmin[IDLE] < ft || tmin[ACTIVE] < ft {
            return Err(Error::Unsupported(
                "deterministic integration assumes at most one PU change per fragment (minimum holding times ≥ T)"
                    .into(),
            ));
        }
        let stride = k + 2;
        let mut chains = [
            vec![Affine2::identity(); stride * stride],
            vec![Affine2::identity(); stride * stride],
        ];
        for (x, event) in [(IDLE, FragmentEvent::H00), (ACTIVE, FragmentEvent::H11)] {
            for b in 1..=k {
                for a in (1..=b).rev() {
                    let inner = chains[x][(a + 1) * stride + b];
                    chains[x][a * stride + b] = model.step(a, event, S::zero()).compose(&inner);
                }
            }
        }
        let mut engine = Self {
            k,
            ft,
            tau: [pu.mean_idle, pu.mean_active],
            tmin,
            chains,
            pieces: [vec![Vec::new(); k], vec![Vec::new(); k]],
            totals: [vec![[S::zero(); 2]; k], vec![[S::zero(); 2]; k]],
            prob_idle,
        };

        let bps = breakpoints(k, ft, tmin);
        let tol = ft * S::lit(1e-9);
        let mut work: Vec<(usize, S, S)> = Vec::new();
        for x in [IDLE, ACTIVE] {
            for w in bps[x].windows(2) {
                let (a, b) = (w[0], w[1]);
                if b - a <= tol {
                    continue;
                }
                let step = (b - a) / S::from_usize_lossy(options.subdivisions);
                for s in 0..options.subdivisions {
                    let lo = a + step * S::from_usize_lossy(s);
                    let hi = if s + 1 == options.subdivisions { b } else { lo + step };
                    work.push((x, lo, hi));
                }
            }
        }
        work.sort_by(|p, q| q.1.partial_cmp(&p.1).expect("finite piece bounds"));

        let n = options.nodes;
        for (x, a, b) in work {
            let mid = (a + b) * S::lit(0.5);
            let frag = engine.fragment_of(mid);
            let lo = S::from_usize_lossy(frag - 1) * ft;
            let from = 1 - x;
            let event = if from == IDLE { FragmentEvent::H01 } else { FragmentEvent::H10 };
            let tau = engine.tau[from];
            let nodes = chebyshev_nodes(a, b, n);
            let mut vals = [Vec::with_capacity(n), Vec::with_capacity(n)];
            for &c in &nodes {
                let h = engine.eval_h(x, c, frag + 1);
                let local = (c - lo).max(S::zero()).min(ft);
                let phi = model.step(frag, event, local).apply(h);
                let wgt = (-(c - lo) / tau).exp() / tau;
                vals[0].push(phi[0] * wgt);
                vals[1].push(phi[1] * wgt);
            }
            let anti = [
                Chebyshev::from_values(a, b, &vals[0]).antiderivative(),
                Chebyshev::from_values(a, b, &vals[1]).antiderivative(),
            ];
            let total = [anti[0].eval(b), anti[1].eval(b)];
            let slot = &mut engine.totals[from][frag - 1];
            let tail_after = *slot;
            *slot = add(*slot, total);
            engine.pieces[from][frag - 1].push(Piece {
                a,
                anti,
                total,
                tail_after,
            });
        }
        Ok(engine)
    }

    /// 1-based fragment containing data-relative time `c ≥ 0`.
    fn fragment_of(&self, c: S) -> usize {
        let f = (c / self.ft).floor().to_usize().unwrap_or(self.k);
        (f + 1).min(self.k + 1)
    }

    fn chain(&self, x: usize, a: usize, b: usize) -> &Affine2<S> {
        &self.chains[x][a * (self.k + 2) + b]
    }

    /// `∫_{max(ℓ, lo_p)}^{hi_p} e^{−(c'−ℓ)/τ}/τ · Φ_{x,p}(c') dc'` and the
    /// matching density mass.
    fn integral_from(&self, x: usize, p: usize, ell: S) -> (Vec2<S>, S) {
        let tau = self.tau[x];
        let lo = S::from_usize_lossy(p - 1) * self.ft;
        let hi = lo + self.ft;
        let factor = ((ell - lo) / tau).exp();
        if ell <= lo {
            let mass = factor * -(-self.ft / tau).exp_m1();
            return (scale(self.totals[x][p - 1], factor), mass);
        }
        let mass = -(-(hi - ell) / tau).exp_m1();
        let pieces = &self.pieces[x][p - 1];
        let Some(piece) = pieces.iter().find(|pc| pc.a <= ell).or(pieces.last()) else {
            return ([S::zero(); 2], mass);
        };
        let part = |i: usize| piece.total[i] - piece.anti[i].eval(ell.max(piece.a));
        let v = [part(0) + piece.tail_after[0], part(1) + piece.tail_after[1]];
        (scale(v, factor), mass)
    }

    /// Value vector for fragments `m..=K` after the PU entered `x` at `c`.
    fn eval_h(&self, x: usize, c: S, m: usize) -> Vec2<S> {
        let k = self.k;
        if m > k {
            return [S::zero(); 2];
        }
        let ell = c + self.tmin[x];
        let end = S::from_usize_lossy(k) * self.ft;
        let first = if ell <= S::zero() { 1 } else { self.fragment_of(ell) };
        let mut acc = [S::zero(); 2];
        for p in first.max(m)..=k {
            let (iv, mass) = self.integral_from(x, p, ell);
            let ch = self.chain(x, m, p - 1);
            acc = add(acc, add(ch.apply_linear(iv), scale(ch.b, mass)));
        }
        let survive = (-(end - ell).max(S::zero()) / self.tau[x]).exp();
        add(acc, scale(self.chain(x, m, k).b, survive))
    }

    /// Conditional throughput for a data phase starting `start` after the
    /// beginning of the first idle period.
    pub fn conditional(&self, start: S) -> S {
        self.prob_idle * self.eval_h(IDLE, -start, 1)[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::contention::base_overhead;
    use crate::model::NetworkConfig;
    use crate::quadrature::GaussLegendre;
    use crate::sensing::SensingCalibration;

    /// Brute-force nested Gauss–Legendre, split at every point where the
    /// inner integrand can kink.
    struct Brute<'a> {
        model: PacketModel<'a, f64, SensingCalibration<f64>>,
        rule: GaussLegendre<f64>,
        k: usize,
        ft: f64,
        tau: [f64; 2],
        tmin: [f64; 2],
    }

    impl Brute<'_> {
        fn value(&self, x: usize, c: f64, m: usize) -> Vec2<f64> {
            if m > self.k {
                return [0.0; 2];
            }
            let ell = c + self.tmin[x];
            let tau = self.tau[x];
            let held = if x == IDLE { FragmentEvent::H00 } else { FragmentEvent::H11 };
            let moved = if x == IDLE { FragmentEvent::H01 } else { FragmentEvent::H10 };
            let chain = |from: usize, to: usize, v: Vec2<f64>| {
                let mut v = v;
                for j in (from..=to).rev() {
                    v = self.model.step(j, held, 0.0).apply(v);
                }
                v
            };
            let mut acc = [0.0; 2];
            for p in m..=self.k {
                let lo = (p - 1) as f64 * self.ft;
                let a = ell.max(lo);
                let b = p as f64 * self.ft;
                if a >= b {
                    continue;
                }
                let mut cuts = vec![a, b];
                for j in 0..=self.k {
                    let q = j as f64 * self.ft - self.tmin[1 - x];
                    if q > a && q < b {
                        cuts.push(q);
                    }
                }
                cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
                for w in cuts.windows(2) {
                    for (cp, wt) in self.rule.mapped(w[0], w[1]) {
                        let dens = (-(cp - ell) / tau).exp() / tau;
                        let inner = self.value(1 - x, cp, p + 1);
                        let v = self.model.step(p, moved, cp - lo).apply(inner);
                        let v = chain(m, p - 1, v);
                        acc[0] += wt * dens * v[0];
                        acc[1] += wt * dens * v[1];
                    }
                }
            }
            let end = self.k as f64 * self.ft;
            let survive = (-(end - ell).max(0.0) / tau).exp();
            let tail = chain(m, self.k, [0.0; 2]);
            [acc[0] + survive * tail[0], acc[1] + survive * tail[1]]
        }
    }

    fn scenario(k: usize, mean_idle: f64) -> NetworkConfig<f64> {
        let mut cfg = NetworkConfig::<f64>::reference();
        cfg.mac.fragments_per_packet = k;
        cfg.pu.mean_idle = mean_idle;
        cfg.pu.mean_active = 0.05;
        cfg
    }

    #[test]
    fn matches_brute_force_for_two_fragments() {
        for (mean_idle, first) in [(0.03, true), (0.2, false)] {
            let mut cfg = scenario(2, mean_idle);
            cfg.options.count_first_fragment = first;
            let cal = cfg.calibrate().unwrap();
            let model = PacketModel::new(&cfg, &cal);
            let p0 = cfg.prob_idle();
            let engine = QuadratureEngine::build(&model, &cfg.pu, p0, &QuadratureOptions::default()).unwrap();
            let brute = Brute {
                model: PacketModel::new(&cfg, &cal),
                rule: GaussLegendre::new(40),
                k: 2,
                ft: cfg.mac.fragment_time,
                tau: [cfg.pu.mean_idle, cfg.pu.mean_active],
                tmin: [cfg.pu.min_idle, cfg.pu.min_active],
            };
            let base = base_overhead(&cfg.mac);
            for s in [base, base + 0.003, base + 0.02, 0.05] {
                let a = engine.conditional(s);
                let b = p0 * brute.value(IDLE, -s, 1)[0];
                assert!((a - b).abs() < 1e-9 * model.clean_bits(), "s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn late_start_is_zero_and_early_change_is_all_idle() {
        let cfg = scenario(3, 0.1);
        let cal = cfg.calibrate().unwrap();
        let model = PacketModel::new(&cfg, &cal);
        let engine = QuadratureEngine::build(&model, &cfg.pu, 1.0, &QuadratureOptions::default()).unwrap();
        // Huge minimum idle time: the change always comes after the packet.
        let mut pu = cfg.pu;
        pu.min_idle = 10.0;
        let far = QuadratureEngine::build(&model, &pu, 1.0, &QuadratureOptions::default()).unwrap();
        assert!((far.conditional(0.001) - model.all_idle_value()).abs() < 1e-12);
        // Data starting long after the first change almost never starts idle.
        assert!(engine.conditional(5.0) < 1e-12);
    }

    #[test]
    fn breakpoints_are_closed_under_shifts() {
        let ft = 0.01;
        let [bi, ba] = breakpoints(4, ft, [0.015, 0.012]);
        for &b in &ba {
            let b: f64 = b;
            let s = b - 0.015;
            if s > 1e-9 {
                assert!(bi.iter().any(|&e| (e - s).abs() < 1e-9));
            }
        }
        assert!(bi.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*bi.last().unwrap(), 0.04);
    }

    #[test]
    fn rejects_short_minimum_holding_times() {
        let mut cfg = scenario(2, 0.1);
        let cal = cfg.calibrate().unwrap();
        let model = PacketModel::new(&cfg, &cal);
        cfg.pu.min_active = 0.5 * cfg.mac.fragment_time;
        assert!(QuadratureEngine::build(&model, &cfg.pu, 1.0, &QuadratureOptions::default()).is_err());
    }
}
