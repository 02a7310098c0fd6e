//! Gauss–Legendre quadrature with order doubling.
//!
//! Nodes and weights are computed by Newton iteration on the Legendre
//! three-term recurrence and cached per order (and per precision for the
//! extended-precision rules).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::precision::XFloat;

pub const START_ORDER: usize = 16;
pub const MAX_ORDER: usize = 4096;
pub const MAX_ORDER_EXTENDED: usize = 512;
pub const TOLERANCE: f64 = 1e-12;

/// Nodes on [-1, 1] with their weights, symmetric about 0.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RuleX {
    pub nodes: Vec<XFloat>,
    pub weights: Vec<XFloat>,
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn initial_guess(n: usize, i: usize) -> f64 {
    // Tricomi's approximation for the i-th root (descending)
    let nf = n as f64;
    let theta = PI * (i as f64 + 0.75) / (nf + 0.5);
    (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos()
}

fn compute_rule(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = initial_guess(n, i);
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn compute_rule_x(n: usize, bits: usize) -> RuleX {
    let work = bits + 64;
    let one = XFloat::one(work);
    let mut nodes = vec![XFloat::zero(work); n];
    let mut weights = vec![XFloat::zero(work); n];
    let seed = rule(n);
    let tol = XFloat::from_f64(2f64.powi(-(work as i32) + 8), work);
    for i in 0..n.div_ceil(2) {
        let mut x = XFloat::from_f64(seed.nodes[i], work);
        let mut dp = one.clone();
        for _ in 0..20 {
            let (mut p0, mut p1) = (one.clone(), x.clone());
            for k in 2..=n {
                let kx = XFloat::from_i64(k as i64, work);
                let a = XFloat::from_i64(2 * k as i64 - 1, work);
                let b = XFloat::from_i64(k as i64 - 1, work);
                let p2 = (a * &x * &p1 - b * &p0) / kx;
                p0 = p1;
                p1 = p2;
            }
            let nx = XFloat::from_i64(n as i64, work);
            dp = nx * (&x * &p1 - &p0) / (&x * &x - &one);
            let dx = &p1 / &dp;
            x = &x - &dx;
            if dx.abs() < tol {
                break;
            }
        }
        let two = XFloat::from_f64(2.0, work);
        let w = two / ((&one - &x * &x) * &dp * &dp);
        nodes[n - 1 - i] = -x.clone();
        weights[n - 1 - i] = w.clone();
        nodes[i] = x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = XFloat::zero(work);
    }
    RuleX {
        nodes: nodes.iter().map(|x| x.with_bits(bits)).collect(),
        weights: weights.iter().map(|x| x.with_bits(bits)).collect(),
    }
}

fn rule_cache() -> &'static Mutex<HashMap<usize, Arc<Rule>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

type RuleXCache = Mutex<HashMap<(usize, usize), Arc<RuleX>>>;

fn rule_x_cache() -> &'static RuleXCache {
    static CACHE: OnceLock<RuleXCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss–Legendre rule of the given order.
pub fn rule(order: usize) -> Arc<Rule> {
    if let Some(r) = rule_cache().lock().unwrap().get(&order) {
        return r.clone();
    }
    let r = Arc::new(compute_rule(order));
    rule_cache().lock().unwrap().insert(order, r.clone());
    r
}

/// Extended-precision Gauss–Legendre rule.
pub fn rule_x(order: usize, bits: usize) -> Arc<RuleX> {
    if let Some(r) = rule_x_cache().lock().unwrap().get(&(order, bits)) {
        return r.clone();
    }
    let r = Arc::new(compute_rule_x(order, bits));
    rule_x_cache().lock().unwrap().insert((order, bits), r.clone());
    r
}

/// Integrate `f` over `[a, b]` with a fixed-order rule.
pub fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, order: usize) -> f64 {
    let r = rule(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    r.nodes
        .iter()
        .zip(&r.weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Integrate over consecutive segments `[edges[i], edges[i+1]]`, doubling
/// the order from [`START_ORDER`] until successive estimates agree to
/// `max(tol, tol·|value|)`.
pub fn adaptive_segments<F: Fn(f64) -> f64>(
    f: &F,
    edges: &[f64],
    tol: f64,
    start_order: usize,
) -> Result<f64> {
    let eval = |order: usize| -> f64 {
        edges
            .windows(2)
            .map(|w| fixed(f, w[0], w[1], order))
            .sum()
    };
    let mut order = start_order.max(1);
    let mut prev = eval(order);
    while order < MAX_ORDER {
        order *= 2;
        let cur = eval(order);
        if (cur - prev).abs() < tol.max(tol * cur.abs()) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged(format!(
        "no agreement to {tol:e} up to order {MAX_ORDER}"
    )))
}

pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<f64> {
    adaptive_segments(f, &[a, b], TOLERANCE, START_ORDER)
}

/// Extended-precision analogue of [`adaptive_segments`]; the tolerance is
/// relative to the working precision.
pub fn adaptive_segments_x<F: Fn(&XFloat) -> XFloat>(
    f: &F,
    edges: &[XFloat],
    bits: usize,
    start_order: usize,
) -> Result<XFloat> {
    let eval = |order: usize| -> XFloat {
        let r = rule_x(order, bits);
        let mut total = XFloat::zero(bits);
        let two = XFloat::from_f64(2.0, bits);
        for w in edges.windows(2) {
            let half = (&w[1] - &w[0]) / &two;
            let mid = (&w[0] + &w[1]) / &two;
            let mut s = XFloat::zero(bits);
            for (x, wt) in r.nodes.iter().zip(&r.weights) {
                s += &(wt * f(&(&mid + &(&half * x))));
            }
            total += &(s * half);
        }
        total
    };
    let tol = 2f64.powi(-(bits as i32) + 24);
    let mut order = start_order.max(1);
    let mut prev = eval(order);
    while order < MAX_ORDER_EXTENDED {
        order *= 2;
        let cur = eval(order);
        let diff = (&cur - &prev).abs().to_f64();
        if diff <= tol * cur.abs().to_f64().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged(format!(
        "extended rule did not converge at {bits} bits up to order {MAX_ORDER_EXTENDED}"
    )))
}
