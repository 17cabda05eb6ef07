//! Adaptive Gauss–Kronrod quadrature and tail integration toward an infinite
//! endpoint.
//!
//! All improper integrals in this crate are written in the log-radius
//! coordinate s = log r, so both singular points sit at s = ±∞. The tail
//! integrator walks away from a reference point in windows whose widths double
//! (the first window is one dyadic shell in r) and decides convergence from
//! the sequence of window increments.

use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;

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

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-12, max_panels: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = half * XGK[j];
        let sum = f(center - x) + f(center + x);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7/K15 quadrature on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, converged: true };
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    let mut panels = 1;
    loop {
        if !total.is_finite() {
            return QuadResult { value: total, error: f64::INFINITY, converged: false };
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target {
            return QuadResult { value: total, error: total_err, converged: true };
        }
        if panels >= opts.max_panels {
            return QuadResult { value: total, error: total_err, converged: false };
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval exhausted at machine precision
            heap.push(worst);
            return QuadResult { value: total, error: total_err, converged: false };
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        panels += 1;
        if panels % 64 == 0 {
            // resum to limit drift from incremental updates
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailStatus {
    Finite,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailResult {
    pub status: TailStatus,
    /// Sum of window integrals (plus the finite segment, if any).
    pub value: f64,
    /// Quadrature error plus the geometric bound on the remaining tail.
    pub error: f64,
    /// Absolute window increments, ordered away from the reference point.
    pub increments: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TailOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Width of the first window in log radius.
    pub first_width: f64,
    pub max_windows: usize,
    /// Number of consecutive decaying increments required.
    pub streak: usize,
    /// Minimal decay factor between consecutive increments.
    pub decay: f64,
    /// Log-radius extent that must be covered before a divergent verdict;
    /// slowly decaying integrands grow over the first doubling windows.
    pub min_divergent_extent: f64,
    pub quad: QuadOptions,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 0.0,
            first_width: std::f64::consts::LN_2,
            max_windows: 110,
            streak: 5,
            decay: 1.1,
            min_divergent_extent: 256.0,
            quad: QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, max_panels: 200 },
        }
    }
}

impl TailOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

/// Integrates `f` over s from `start` in direction `dir` (±1) up to `limit`
/// (which may be ±∞).
///
/// Finite: `streak` consecutive window increments each shrink by at least
/// `decay` and the geometric bound on the remaining tail is below tolerance
/// (or the finite limit was reached). Divergent: an increment is not finite,
/// or, past `min_divergent_extent`, `streak` consecutive increments fail to
/// decrease while exceeding the tolerance. Inconclusive otherwise.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: F, start: f64, dir: f64, limit: f64, opts: TailOptions) -> TailResult {
    let mut increments = Vec::new();
    let mut sum = 0.0;
    let mut quad_err = 0.0;
    let mut edge = start;
    let mut width = opts.first_width;
    let target = |sum: f64| opts.abs_tol.max(opts.rel_tol * sum.abs());
    for _ in 0..opts.max_windows {
        let mut next = edge + dir * width;
        let mut last = false;
        if (limit - next) * dir <= 0.0 {
            next = limit;
            last = true;
        }
        let window_opts = QuadOptions {
            abs_tol: opts.quad.abs_tol.max(1e-3 * target(sum)),
            ..opts.quad
        };
        let (lo, hi) = if dir > 0.0 { (edge, next) } else { (next, edge) };
        let q = integrate(&f, lo, hi, window_opts);
        if q.value.is_nan() {
            return TailResult {
                status: TailStatus::Inconclusive,
                value: f64::NAN,
                error: f64::INFINITY,
                increments,
                tolerance: target(sum),
            };
        }
        if !q.value.is_finite() {
            increments.push(f64::INFINITY);
            return TailResult {
                status: TailStatus::Divergent,
                value: f64::INFINITY,
                error: f64::INFINITY,
                increments,
                tolerance: target(sum),
            };
        }
        sum += q.value;
        quad_err += q.error;
        increments.push(q.value.abs());
        if last {
            return TailResult { status: TailStatus::Finite, value: sum, error: quad_err, increments, tolerance: target(sum) };
        }
        // toward a finite limit only an early Finite exit is allowed
        let decision = decide(&increments, opts, target(sum), (next - start).abs())
            .filter(|st| !limit.is_finite() || *st == TailStatus::Finite);
        if let Some(status) = decision {
            let error = match status {
                TailStatus::Finite => quad_err + tail_bound(&increments, opts.streak),
                _ => f64::INFINITY,
            };
            return TailResult { status, value: sum, error, increments, tolerance: target(sum) };
        }
        edge = next;
        width *= 2.0;
    }
    TailResult {
        status: TailStatus::Inconclusive,
        value: sum,
        error: f64::INFINITY,
        increments,
        tolerance: target(sum),
    }
}

fn ratios(increments: &[f64], streak: usize) -> Option<Vec<f64>> {
    if increments.len() < streak + 1 {
        return None;
    }
    let tail = &increments[increments.len() - streak - 1..];
    Some(
        tail.windows(2)
            .map(|w| if w[1] == 0.0 { 0.0 } else if w[0] == 0.0 { f64::INFINITY } else { w[1] / w[0] })
            .collect(),
    )
}

fn tail_bound(increments: &[f64], streak: usize) -> f64 {
    let last = *increments.last().unwrap_or(&0.0);
    if last == 0.0 {
        return 0.0;
    }
    let q = ratios(increments, streak)
        .map(|r| r.into_iter().fold(0.0, f64::max))
        .unwrap_or(1.0);
    if q >= 1.0 {
        f64::INFINITY
    } else {
        last * q / (1.0 - q)
    }
}

fn decide(increments: &[f64], opts: TailOptions, tol: f64, covered: f64) -> Option<TailStatus> {
    let rs = ratios(increments, opts.streak)?;
    let last = *increments.last().unwrap();
    if rs.iter().all(|&q| q <= 1.0 / opts.decay) && tail_bound(increments, opts.streak) <= tol {
        return Some(TailStatus::Finite);
    }
    if last > tol && covered >= opts.min_divergent_extent && rs.iter().all(|&q| q >= 1.0) {
        return Some(TailStatus::Divergent);
    }
    None
}
