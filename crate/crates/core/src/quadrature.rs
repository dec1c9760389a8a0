//! One-dimensional quadrature: adaptive Gauss–Kronrod, fixed Gauss–Legendre
//! rules, and Chebyshev interpolants with exact cumulative integrals.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: usize = 40;

fn kronrod15<S: Scalar, F: FnMut(S) -> S>(f: &mut F, a: S, b: S) -> (S, S) {
    let half = (b - a) * S::lit(0.5);
    let mid = (a + b) * S::lit(0.5);
    let fc = f(mid);
    let mut k = fc * S::lit(WGK[7]);
    let mut g = fc * S::lit(WG[3]);
    for i in 0..7 {
        let dx = half * S::lit(XGK[i]);
        let s = f(mid - dx) + f(mid + dx);
        k += s * S::lit(WGK[i]);
        if i % 2 == 1 {
            g += s * S::lit(WG[i / 2]);
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integral of `f` over `[a, b]`.
///
/// Returns the value and the accumulated error estimate. The requested
/// absolute tolerance is floored at a few ulps of the result so that `f32`
/// callers do not chase unreachable accuracy.
pub fn integrate<S: Scalar, F: FnMut(S) -> S>(mut f: F, a: S, b: S, abs_tol: S) -> Result<(S, S)> {
    if a == b {
        return Ok((S::zero(), S::zero()));
    }
    let (whole, whole_err) = kronrod15(&mut f, a, b);
    let floor = S::lit(64.0) * S::epsilon() * whole.abs();
    let tol = abs_tol.max(floor);
    if whole_err <= tol {
        return Ok((whole, whole_err));
    }
    let width = b - a;
    let mut stack = vec![(a, b, whole, whole_err, 0usize)];
    let mut total = S::zero();
    let mut total_err = S::zero();
    let mut exhausted = false;
    while let Some((lo, hi, val, err, depth)) = stack.pop() {
        let budget = tol * ((hi - lo) / width).abs();
        if err <= budget || depth >= MAX_DEPTH {
            if err > budget {
                exhausted = true;
            }
            total += val;
            total_err += err;
            continue;
        }
        let mid = (lo + hi) * S::lit(0.5);
        let (l, le) = kronrod15(&mut f, lo, mid);
        let (r, re) = kronrod15(&mut f, mid, hi);
        stack.push((mid, hi, r, re, depth + 1));
        stack.push((lo, mid, l, le, depth + 1));
    }
    if exhausted && total_err > tol {
        return Err(Error::Integration {
            tolerance: tol.as_f64(),
            achieved: total_err.as_f64(),
        });
    }
    Ok((total, total_err))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Fixed-order Gauss–Legendre rule mapped to arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussLegendre<S> {
    nodes: Vec<S>,
    weights: Vec<S>,
}

impl<S: Scalar> GaussLegendre<S> {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self {
            nodes: x.into_iter().map(S::lit).collect(),
            weights: w.into_iter().map(S::lit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: S, b: S) -> impl Iterator<Item = (S, S)> + '_ {
        let half = (b - a) * S::lit(0.5);
        let mid = (a + b) * S::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(S) -> S>(&self, a: S, b: S, mut f: F) -> S {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Chebyshev nodes of the first kind on `[a, b]`, in the order used by
/// [`Chebyshev::from_values`].
pub fn chebyshev_nodes<S: Scalar>(a: S, b: S, n: usize) -> Vec<S> {
    let half = (b - a) * S::lit(0.5);
    let mid = (a + b) * S::lit(0.5);
    (0..n)
        .map(|k| {
            let theta = S::PI() * (S::from_usize_lossy(k) + S::lit(0.5)) / S::from_usize_lossy(n);
            mid + half * theta.cos()
        })
        .collect()
}

/// Truncated Chebyshev series on `[a, b]`.
#[derive(Debug, Clone)]
pub struct Chebyshev<S> {
    a: S,
    b: S,
    coeffs: Vec<S>,
}

impl<S: Scalar> Chebyshev<S> {
    /// Interpolant through samples taken at [`chebyshev_nodes`].
    pub fn from_values(a: S, b: S, values: &[S]) -> Self {
        let n = values.len();
        let nf = S::from_usize_lossy(n);
        let coeffs = (0..n)
            .map(|j| {
                let jf = S::from_usize_lossy(j);
                let s: S = values
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        v * (S::PI() * jf * (S::from_usize_lossy(k) + S::lit(0.5)) / nf).cos()
                    })
                    .sum();
                S::lit(2.0) * s / nf
            })
            .collect();
        Self { a, b, coeffs }
    }

    pub fn fit<F: FnMut(S) -> S>(a: S, b: S, n: usize, f: F) -> Self {
        let values: Vec<S> = chebyshev_nodes(a, b, n).into_iter().map(f).collect();
        Self::from_values(a, b, &values)
    }

    pub fn lower(&self) -> S {
        self.a
    }

    pub fn upper(&self) -> S {
        self.b
    }

    pub fn eval(&self, x: S) -> S {
        let y = (S::lit(2.0) * x - self.a - self.b) / (self.b - self.a);
        let y2 = y + y;
        let (mut d, mut dd) = (S::zero(), S::zero());
        for &c in self.coeffs.iter().skip(1).rev() {
            let sv = d;
            d = y2 * d - dd + c;
            dd = sv;
        }
        y * d - dd + S::lit(0.5) * self.coeffs[0]
    }

    /// Series of `x ↦ ∫_a^x f`.
    pub fn antiderivative(&self) -> Self {
        let n = self.coeffs.len();
        let con = S::lit(0.25) * (self.b - self.a);
        let mut out = vec![S::zero(); n.max(2)];
        if n == 1 {
            out[1] = con * self.coeffs[0];
            out[0] = S::lit(2.0) * out[1];
            return Self {
                a: self.a,
                b: self.b,
                coeffs: out,
            };
        }
        let mut sum = S::zero();
        let mut fac = S::one();
        for j in 1..n - 1 {
            out[j] = con * (self.coeffs[j - 1] - self.coeffs[j + 1]) / S::from_usize_lossy(j);
            sum += fac * out[j];
            fac = -fac;
        }
        out[n - 1] = con * self.coeffs[n - 2] / S::from_usize_lossy(n - 1);
        sum += fac * out[n - 1];
        out[0] = S::lit(2.0) * sum;
        Self {
            a: self.a,
            b: self.b,
            coeffs: out,
        }
    }
}
