#![allow(clippy::excessive_precision)]
//! One-dimensional adaptive Gauss-Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::sum::NeumaierSum;

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208636938320,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Tolerances and limits for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl QuadConfig {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            max_intervals: 400,
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self::new(1e-12, 1e-10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub evals: usize,
}

impl QuadResult {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            error: 0.0,
            converged: true,
            evals: 0,
        }
    }

    /// Sum of independent pieces; errors add.
    pub fn combine(parts: &[QuadResult]) -> Self {
        let mut v = NeumaierSum::new();
        let mut e = 0.0;
        let mut ok = true;
        let mut n = 0;
        for p in parts {
            v += p.value;
            e += p.error;
            ok &= p.converged;
            n += p.evals;
        }
        Self {
            value: v.value(),
            error: e,
            converged: ok,
            evals: n,
        }
    }
}

/// 21-point Kronrod rule on `[a, b]`; returns (integral, error estimate).
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut fv = [(0.0, 0.0); 10];
    let mut kron = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv[j] = (f1, f2);
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let val = kron * h;
    let err = ((kron - gauss) * h).abs();
    // QUADPACK-style rescaling keeps the estimate honest on smooth pieces.
    let mean = 0.5 * kron;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    asc *= h.abs();
    let mut e = err;
    if asc != 0.0 && e != 0.0 {
        let s = (200.0 * e / asc).powf(1.5);
        e = if s < 1.0 { asc * s } else { asc };
    }
    let floor = 50.0 * f64::EPSILON * val.abs();
    (val, e.max(floor))
}

struct Piece {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive bisection over `[a, b]` with optional interior breakpoints.
///
/// Non-finite breakpoints and points outside `(a, b)` are ignored.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> QuadResult {
    if a == b {
        return QuadResult::zero();
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut edges = vec![lo];
    edges.extend(pts);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in edges.windows(2) {
        let (val, err) = gk21(&mut f, w[0], w[1]);
        evals += 42;
        heap.push(Piece {
            a: w[0],
            b: w[1],
            val,
            err,
        });
    }
    let total = |heap: &BinaryHeap<Piece>| {
        let mut v = NeumaierSum::new();
        let mut e = 0.0;
        for p in heap.iter() {
            v += p.val;
            e += p.err;
        }
        (v.value(), e)
    };
    let (mut val, mut err) = total(&heap);
    let mut converged = err <= cfg.abs_tol.max(cfg.rel_tol * val.abs());
    while !converged && heap.len() < cfg.max_intervals {
        let p = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk21(&mut f, p.a, mid);
        let (v2, e2) = gk21(&mut f, mid, p.b);
        evals += 84;
        heap.push(Piece {
            a: p.a,
            b: mid,
            val: v1,
            err: e1,
        });
        heap.push(Piece {
            a: mid,
            b: p.b,
            val: v2,
            err: e2,
        });
        val += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        if err <= cfg.abs_tol.max(cfg.rel_tol * val.abs()) {
            let t = total(&heap);
            val = t.0;
            err = t.1;
            converged = err <= cfg.abs_tol.max(cfg.rel_tol * val.abs());
        }
    }
    let t = total(&heap);
    val = t.0;
    err = t.1;
    QuadResult {
        value: sign * val,
        error: err,
        converged,
        evals,
    }
}

/// Integral over `[a, ∞)` through `x = a + s * v / (1 - v)`, `v ∈ [0, 1)`.
///
/// `s > 0` sets the length scale where the integrand starts to decay.
pub fn semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    s: f64,
    cfg: &QuadConfig,
) -> QuadResult {
    adaptive(
        |v| {
            if v >= 1.0 {
                return 0.0;
            }
            let w = 1.0 - v;
            let x = a + s * v / w;
            let y = f(x) * s / (w * w);
            if y.is_finite() {
                y
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        &[0.5],
        cfg,
    )
}

/// Periodic trapezoid rule on `[0, 2π)` with `n` nodes.
pub fn periodic_trapezoid<F: FnMut(f64) -> f64>(mut f: F, n: usize) -> f64 {
    let h = std::f64::consts::TAU / n as f64;
    let mut acc = NeumaierSum::new();
    for j in 0..n {
        acc += f(h * j as f64);
    }
    acc.value() * h
}
