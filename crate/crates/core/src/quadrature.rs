//! Quadrature helpers: adaptive Gauss–Kronrod, graded Gauss–Legendre meshes
//! and Carlson's symmetric elliptic integral `R_F`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result, C64};

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-13,
            rel: 1e-10,
            max_intervals: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

// Kronrod 15-point nodes (nonnegative half) and weights; the Gauss 7-point
// rule uses the odd-indexed nodes.
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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7/K15 quadrature of `f` over `[a, b]`.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    adaptive_with_breaks(&mut f, &[a, b], tol)
}

/// Adaptive quadrature over consecutive intervals of the sorted `breaks`.
/// Breakpoints let the integrator start with panels edged at near-singular
/// points.
pub fn adaptive_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Err(Error::Quadrature("need at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(a <= b) {
            return Err(Error::Quadrature(format!("breakpoints not sorted: {a} > {b}")));
        }
        if a == b {
            continue;
        }
        let (v, e) = gk15(&mut f, a, b);
        value += v;
        error += e;
        heap.push(Segment { a, b, value: v, error: e });
    }
    loop {
        if !value.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand sum {value}")));
        }
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(Estimate {
                value,
                error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature(format!(
                "error estimate {error:e} above tolerance after {} intervals",
                heap.len()
            )));
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::Quadrature("empty interval set".into()));
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature(format!(
                "interval [{}, {}] cannot be bisected further",
                worst.a, worst.b
            )));
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
}

/// Adaptive quadrature of a complex integrand, real and imaginary parts
/// integrated separately.
pub fn adaptive_complex<F: FnMut(f64) -> C64>(
    mut f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<C64> {
    let re = adaptive_with_breaks(|x| f(x).re, breaks, tol)?;
    let im = adaptive_with_breaks(|x| f(x).im, breaks, tol)?;
    Ok(C64::new(re.value, im.value))
}

/// Sorted breakpoints `{a, b}` plus every point of `interior` strictly inside.
pub fn breakpoints(a: f64, b: f64, interior: &[f64]) -> Vec<f64> {
    let mut pts = vec![a, b];
    pts.extend(interior.iter().copied().filter(|&c| c > a && c < b));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// A fixed composite Gauss–Legendre rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Composite Gauss–Legendre rule on `[a, b]` graded toward each of
/// `critical`: panel edges sit at `c ± h * 2^j`, so panels grow
/// geometrically away from a near-singular point. Panels are additionally
/// capped at `max_panel` in width. Each panel gets `order` nodes.
pub fn graded_rule(a: f64, b: f64, critical: &[f64], h: f64, max_panel: f64, order: usize) -> Rule {
    let mut edges = vec![a, b];
    for &c in critical {
        if c > a && c < b {
            edges.push(c);
        }
        let mut step = h;
        loop {
            let lo = c - step;
            let hi = c + step;
            if lo > a && lo < b {
                edges.push(lo);
            }
            if hi > a && hi < b {
                edges.push(hi);
            }
            if lo <= a && hi >= b {
                break;
            }
            step *= 2.0;
        }
    }
    edges.sort_by(f64::total_cmp);
    let span = b - a;
    edges.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * span);
    let mut refined = Vec::with_capacity(edges.len());
    for w in edges.windows(2) {
        let pieces = ((w[1] - w[0]) / max_panel).ceil().max(1.0) as usize;
        for p in 0..pieces {
            refined.push(w[0] + (w[1] - w[0]) * p as f64 / pieces as f64);
        }
    }
    refined.push(b);

    let (x, wts) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(order * refined.len());
    let mut weights = Vec::with_capacity(order * refined.len());
    for w in refined.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let half = 0.5 * (w[1] - w[0]);
        for (xi, wi) in x.iter().zip(&wts) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    Rule { nodes, weights }
}

/// Carlson's symmetric elliptic integral of the first kind
/// `R_F(x, y, z) = 1/2 ∫_0^∞ dt / sqrt((t+x)(t+y)(t+z))` for nonnegative
/// arguments, at most one of them zero.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    debug_assert!(x >= 0.0 && y >= 0.0 && z >= 0.0);
    let (x0, y0) = (x, y);
    let (mut x, mut y, mut z) = (x, y, z);
    let a0 = (x + y + z) / 3.0;
    let q = (3.0 * f64::EPSILON).powf(-1.0 / 6.0)
        * (a0 - x).abs().max((a0 - y).abs()).max((a0 - z).abs());
    let mut a = a0;
    let mut scale = 1.0;
    while scale * q >= a.abs() {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * sy + sx * sz + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        a = 0.25 * (a + lambda);
        scale *= 0.25;
    }
    let xd = (a0 - x0) * scale / a;
    let yd = (a0 - y0) * scale / a;
    let zd = -(xd + yd);
    let e2 = xd * yd - zd * zd;
    let e3 = xd * yd * zd;
    (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / a.sqrt()
}

/// `∫_y^x dt / sqrt(((t - α)^2 + η^2)((t - β)^2 + η^2))` for `y < x`, via
/// Carlson's reduction of a quartic with roots `α ± iη`, `β ± iη`. The
/// reduction holds while all three `U_ij` stay positive; otherwise the
/// interval is bisected.
pub fn quartic_integral(y: f64, x: f64, alpha: f64, beta: f64, eta: f64) -> f64 {
    quartic_piece(y, x, alpha, beta, eta, 0)
}

fn quartic_piece(y: f64, x: f64, alpha: f64, beta: f64, eta: f64, depth: u32) -> f64 {
    if x <= y {
        return 0.0;
    }
    let roots = [
        C64::new(alpha, eta),
        C64::new(alpha, -eta),
        C64::new(beta, eta),
        C64::new(beta, -eta),
    ];
    let xs: [C64; 4] = roots.map(|r| (C64::new(x, 0.0) - r).sqrt());
    let ys: [C64; 4] = roots.map(|r| (C64::new(y, 0.0) - r).sqrt());
    let d = x - y;
    let u = |i: usize, j: usize, k: usize, l: usize| {
        ((xs[i] * xs[j] * ys[k] * ys[l] + ys[i] * ys[j] * xs[k] * xs[l]) / d).re
    };
    let u12 = u(0, 1, 2, 3);
    let u13 = u(0, 2, 1, 3);
    let u14 = u(0, 3, 1, 2);
    if u12.min(u13).min(u14) <= 0.0 && depth < 40 {
        let mid = 0.5 * (x + y);
        return quartic_piece(y, mid, alpha, beta, eta, depth + 1) + quartic_piece(mid, x, alpha, beta, eta, depth + 1);
    }
    2.0 * carlson_rf(u12 * u12, u13 * u13, u14 * u14)
}
