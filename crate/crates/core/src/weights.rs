//! Reconstruction weights: plain sinc, the Jagerman multiplier and the
//! spline weight `sinc · B̂_k`.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::XFloat;
use crate::spectra::{sin_over, Bandwidth};

/// Default ceiling on the spline order.
pub const MAX_SPLINE_ORDER: usize = 60;

/// Number of precomputed Taylor coefficients of `B̂_k`.
const TAYLOR_TERMS: usize = 80;

/// `sin(πt)/(πt)`.
pub fn sinc(t: f64) -> f64 {
    sin_over(PI * t)
}

/// `g_m(t) = sinc(t) · sinc^m((π−δ)t/(πm))`.
pub fn jagerman_weight(m: usize, delta: Bandwidth, t: f64) -> f64 {
    let m = m.max(1);
    let inner = sinc(delta.margin() * t / (PI * m as f64));
    sinc(t) * inner.powi(m as i32)
}

/// An order chosen from `n` and `δ`, with a flag when `n` is below the
/// range where the error estimates apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderChoice {
    pub order: usize,
    pub below_threshold: bool,
}

fn require_oversampled(delta: Bandwidth) -> Result<f64> {
    let margin = delta.margin();
    if !(margin > 0.0) {
        return Err(Error::InvalidInput(format!(
            "weighted methods need oversampling (δ < π), got δ = {delta}"
        )));
    }
    Ok(margin)
}

/// `max(1, ⌊n(π−δ)/e⌋)`; flagged when `n < e/(π−δ)`.
pub fn select_order_a1(n: usize, delta: Bandwidth) -> Result<OrderChoice> {
    let margin = require_oversampled(delta)?;
    let raw = (n as f64 * margin / E).floor() as usize;
    Ok(OrderChoice {
        order: raw.max(1),
        below_threshold: (n as f64) < E / margin,
    })
}

/// `max(1, ⌊n(π−δ)/2⌋)`; flagged when `n ≤ 2/(π−δ)`.
pub fn select_order_a2(n: usize, delta: Bandwidth) -> Result<OrderChoice> {
    let margin = require_oversampled(delta)?;
    let raw = (n as f64 * margin / 2.0).floor() as usize;
    Ok(OrderChoice {
        order: raw.max(1),
        below_threshold: (n as f64) <= 2.0 / margin,
    })
}

/// `2^{k−1} k!`, the total mass `Σ_j α_kj / √(2π)`.
fn alpha_mass(k: usize) -> f64 {
    (1..=k).fold(2f64.powi(k as i32 - 1), |acc, i| acc * i as f64)
}

/// `2^{k−1} k! / (π−δ)^k`: `|B̂_k(ξ)| ≤ C/|ξ|^k`, also the infimum constant
/// of the weighted-derivative problem.
pub fn spline_decay_constant(k: usize, delta: Bandwidth) -> f64 {
    let margin = delta.margin();
    (1..=k).fold(0.5, |acc, i| acc * 2.0 * i as f64 / margin)
}

/// Chebyshev extrema `cos(jπ/k)`, `j = 0..k`, exactly antisymmetric.
pub fn chebyshev_extrema(k: usize) -> Vec<f64> {
    let mut x = vec![0.0; k + 1];
    for j in 0..=k / 2 {
        let v = if 2 * j == k { 0.0 } else { (j as f64 * PI / k as f64).cos() };
        x[j] = v;
        x[k - j] = -v;
    }
    x
}

/// `α_kj`, `j = 0..k`: nonnegative, `Σ_j (−1)^{k−j} α_kj x_kj^l = 0` for
/// `l < k` and `Σ_j α_kj = √(2π) 2^{k−1} k!`.
pub fn spline_coeffs(k: usize, limit: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidInput("spline order must be at least 1".into()));
    }
    if k > limit {
        return Err(Error::OrderTooLarge { order: k, limit });
    }
    let x = chebyshev_extrema(k);
    // α_j ∝ 1/|ω'(x_j)| with ω(x) = Π_i (x − x_i)
    let raw: Vec<f64> = (0..=k)
        .map(|j| {
            let w: f64 = (0..=k).filter(|i| *i != j).map(|i| x[j] - x[i]).product();
            1.0 / w.abs()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let target = (2.0 * PI).sqrt() * alpha_mass(k);
    Ok(raw.into_iter().map(|r| r / total * target).collect())
}

struct ExtendedSpline {
    bits: usize,
    margin: XFloat,
    /// Signed, paired coefficients: `s_j α_j` for `j ≤ k/2` with the
    /// multiplicity of the mirrored node folded in.
    paired: Vec<XFloat>,
    nodes: Vec<XFloat>,
    norm: XFloat,
}

/// The spline weight of order `k` for bandwidth `δ`, with its Fourier
/// transform `B̂_k`.
pub struct SplineWeight {
    k: usize,
    delta: Bandwidth,
    margin: f64,
    nodes: Vec<f64>,
    alphas: Vec<f64>,
    /// `h_m(x_0..x_k) · k!/(m+k)!` with the sign `(−1)^{m/2}`, even `m`.
    taylor: Vec<f64>,
    taylor_radius: f64,
    extended: OnceLock<ExtendedSpline>,
}

impl std::fmt::Debug for SplineWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplineWeight")
            .field("k", &self.k)
            .field("delta", &self.delta)
            .finish()
    }
}

impl SplineWeight {
    pub fn new(k: usize, delta: Bandwidth) -> Result<Self> {
        Self::with_limit(k, delta, MAX_SPLINE_ORDER)
    }

    pub fn with_limit(k: usize, delta: Bandwidth, limit: usize) -> Result<Self> {
        let margin = require_oversampled(delta)?;
        let alphas = spline_coeffs(k, limit)?;
        let nodes = chebyshev_extrema(k);

        // complete homogeneous symmetric polynomials h_m of the nodes
        let mut h = vec![0.0; TAYLOR_TERMS + 1];
        h[0] = 1.0;
        for xj in &nodes {
            for m in 1..=TAYLOR_TERMS {
                h[m] += xj * h[m - 1];
            }
        }
        let mut taylor = Vec::with_capacity(TAYLOR_TERMS / 2 + 1);
        let mut ratio = 1.0; // k!/(m+k)!
        for m in 0..=TAYLOR_TERMS {
            if m > 0 {
                ratio /= (m + k) as f64;
            }
            if m % 2 == 0 {
                let sign = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
                taylor.push(sign * h[m] * ratio);
            }
        }
        Ok(SplineWeight {
            k,
            delta,
            margin,
            nodes,
            alphas,
            taylor,
            taylor_radius: 3f64.max(k as f64 / 100.0),
            extended: OnceLock::new(),
        })
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> Bandwidth {
        self.delta
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// `2^{k−1}k!/|u|^k` at `u = (π−δ)ξ`.
    fn direct_amplification(&self, u: f64) -> f64 {
        (1..=self.k).fold(0.5, |acc, i| acc * 2.0 * i as f64 / u)
    }

    fn taylor(&self, u: f64) -> f64 {
        let u2 = u * u;
        let mut s = 0.0;
        for c in self.taylor.iter().rev() {
            s = s * u2 + c;
        }
        s
    }

    /// Sign and multiplicity of the folded pair `(j, k−j)`.
    fn pair_weight(&self, j: usize) -> f64 {
        let k = self.k;
        let sign = if (k - j).is_multiple_of(2) { 1.0 } else { -1.0 };
        let mult = if 2 * j == k { 1.0 } else { 2.0 };
        sign * mult
    }

    /// Even k: `(−1)^{k/2} Σ (−1)^{k−j} α_j cos(x_j u)`; odd k:
    /// `(−1)^{(k+1)/2} Σ (−1)^{k−j} α_j sin(x_j u)`, over `√(2π) u^k`.
    fn direct(&self, u: f64) -> f64 {
        let k = self.k;
        let even = k.is_multiple_of(2);
        let mut s = 0.0;
        for j in 0..=k / 2 {
            let arg = self.nodes[j] * u;
            let trig = if even { arg.cos() } else { arg.sin() };
            s += self.pair_weight(j) * self.alphas[j] * trig;
        }
        let outer = if even {
            if (k / 2).is_multiple_of(2) { 1.0 } else { -1.0 }
        } else if k.div_ceil(2).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        outer * s / ((2.0 * PI).sqrt() * u.powi(k as i32))
    }

    fn extended(&self) -> &ExtendedSpline {
        self.extended.get_or_init(|| {
            let k = self.k;
            let d3 = (1..=k).fold(0.5f64, |acc, i| acc * 2.0 * i as f64 / self.taylor_radius);
            let want = 128 + d3.max(1.0).log2().ceil() as usize;
            let bits = want.div_ceil(64) * 64;
            let pi = XFloat::pi(bits);
            let kx = XFloat::from_i64(k as i64, bits);
            let nodes: Vec<XFloat> = (0..=k / 2)
                .map(|j| {
                    if 2 * j == k {
                        XFloat::zero(bits)
                    } else {
                        (XFloat::from_i64(j as i64, bits) * &pi / &kx).cos()
                    }
                })
                .collect();
            // α_j = √(2π)·k!·2^{k−1}/k on interior nodes, half that at ±1
            let mut base = (XFloat::from_f64(2.0, bits) * &pi).sqrt();
            for i in 1..=k {
                base = base * XFloat::from_i64(i as i64, bits);
            }
            base = base * XFloat::from_f64(2f64.powi(k as i32 - 1), bits) / &kx;
            let paired: Vec<XFloat> = (0..=k / 2)
                .map(|j| {
                    let end = if j == 0 { 0.5 } else { 1.0 };
                    base.mul_f64(end * self.pair_weight(j))
                })
                .collect();
            let even = k.is_multiple_of(2);
            let outer = if even {
                if (k / 2).is_multiple_of(2) { 1.0 } else { -1.0 }
            } else if k.div_ceil(2).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            let norm = (XFloat::from_f64(2.0, bits) * &pi).sqrt().recip().mul_f64(outer);
            ExtendedSpline {
                bits,
                margin: self.delta_margin_x(bits),
                paired,
                nodes,
                norm,
            }
        })
    }

    fn delta_margin_x(&self, bits: usize) -> XFloat {
        XFloat::pi(bits) - self.delta.to_x(bits)
    }

    fn direct_x(&self, xi: f64) -> f64 {
        let ext = self.extended();
        let u = &ext.margin * &XFloat::from_f64(xi, ext.bits);
        let even = self.k.is_multiple_of(2);
        let mut s = XFloat::zero(ext.bits);
        for (a, x) in ext.paired.iter().zip(&ext.nodes) {
            let arg = x * &u;
            let trig = if even { arg.cos() } else { arg.sin() };
            s += &(a * trig);
        }
        (s * &ext.norm / u.powi(self.k)).to_f64()
    }

    /// `B̂_k(ξ)`. The value is real; `B̂_k(0) = 1`.
    pub fn fhat(&self, xi: f64) -> f64 {
        let u = self.margin * xi;
        let au = u.abs();
        if au <= self.taylor_radius {
            self.taylor(u)
        } else if self.direct_amplification(au) <= 4.0 {
            self.direct(u)
        } else {
            self.direct_x(xi)
        }
    }

    /// `sinc(t) · B̂_k(t)`.
    pub fn weight(&self, t: f64) -> f64 {
        let s = sinc(t);
        if s == 0.0 {
            return 0.0;
        }
        s * self.fhat(t)
    }
}

/// `B̂_k(ξ)` for the spline weight `w`.
pub fn spline_fhat(w: &SplineWeight, xi: f64) -> f64 {
    w.fhat(xi)
}

/// Which reconstruction method a request names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Shannon,
    A1,
    A2,
    Optimal,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Shannon => "shannon",
            Method::A1 => "a1",
            Method::A2 => "a2",
            Method::Optimal => "optimal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "shannon" | "sinc" | "plain-sinc" => Ok(Method::Shannon),
            "a1" | "jagerman" => Ok(Method::A1),
            "a2" | "spline" => Ok(Method::A2),
            "optimal" => Ok(Method::Optimal),
            other => Err(Error::InvalidInput(format!(
                "unknown method '{other}' (expected shannon, a1, a2, optimal)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// JSON method request: `{"method": "a2", "order": 5}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        MethodSpec { method, order: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    PlainSinc,
    Jagerman,
    Spline,
    /// Explicit `j → c_j` table; missing samples get weight 0.
    Custom(BTreeMap<i64, f64>),
}

/// A weighted-sinc reconstruction rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    /// Order override; otherwise chosen from `n` by the method's rule.
    pub order: Option<usize>,
    pub delta: Bandwidth,
}

impl WeightSpec {
    pub fn plain_sinc(delta: Bandwidth) -> Self {
        WeightSpec {
            kind: WeightKind::PlainSinc,
            order: None,
            delta,
        }
    }

    pub fn jagerman(delta: Bandwidth) -> Self {
        WeightSpec {
            kind: WeightKind::Jagerman,
            order: None,
            delta,
        }
    }

    pub fn spline(delta: Bandwidth) -> Self {
        WeightSpec {
            kind: WeightKind::Spline,
            order: None,
            delta,
        }
    }

    pub fn custom(delta: Bandwidth, table: BTreeMap<i64, f64>) -> Self {
        WeightSpec {
            kind: WeightKind::Custom(table),
            order: None,
            delta,
        }
    }

    /// `None` for the optimal method, which has no fixed weight.
    pub fn from_method(m: MethodSpec, delta: Bandwidth) -> Option<Self> {
        let kind = match m.method {
            Method::Shannon => WeightKind::PlainSinc,
            Method::A1 => WeightKind::Jagerman,
            Method::A2 => WeightKind::Spline,
            Method::Optimal => return None,
        };
        Some(WeightSpec {
            kind,
            order: m.order,
            delta,
        })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            WeightKind::PlainSinc => "shannon",
            WeightKind::Jagerman => "a1",
            WeightKind::Spline => "a2",
            WeightKind::Custom(_) => "custom",
        }
    }

    /// Fix the order for grid half-size `n` and precompute what the
    /// evaluation needs.
    pub fn resolve(&self, n: usize) -> Result<ResolvedWeight> {
        if let Some(0) = self.order {
            return Err(Error::InvalidInput("weight order must be at least 1".into()));
        }
        Ok(match &self.kind {
            WeightKind::PlainSinc => ResolvedWeight::PlainSinc,
            WeightKind::Jagerman => {
                let choice = match self.order {
                    Some(m) => {
                        require_oversampled(self.delta)?;
                        OrderChoice { order: m, below_threshold: false }
                    }
                    None => select_order_a1(n, self.delta)?,
                };
                ResolvedWeight::Jagerman {
                    m: choice.order,
                    delta: self.delta,
                    below_threshold: choice.below_threshold,
                }
            }
            WeightKind::Spline => {
                let choice = match self.order {
                    Some(k) => OrderChoice { order: k, below_threshold: false },
                    None => select_order_a2(n, self.delta)?,
                };
                ResolvedWeight::Spline {
                    weight: Box::new(SplineWeight::new(choice.order, self.delta)?),
                    below_threshold: choice.below_threshold,
                }
            }
            WeightKind::Custom(table) => ResolvedWeight::Custom(table.clone()),
        })
    }
}

/// A [`WeightSpec`] with its order fixed.
#[derive(Debug)]
pub enum ResolvedWeight {
    PlainSinc,
    Jagerman { m: usize, delta: Bandwidth, below_threshold: bool },
    Spline { weight: Box<SplineWeight>, below_threshold: bool },
    Custom(BTreeMap<i64, f64>),
}

impl ResolvedWeight {
    /// Coefficient of `X(j)` in the estimate of `X(t)`.
    pub fn value(&self, t: f64, j: i64) -> f64 {
        let s = t - j as f64;
        match self {
            ResolvedWeight::PlainSinc => sinc(s),
            ResolvedWeight::Jagerman { m, delta, .. } => jagerman_weight(*m, *delta, s),
            ResolvedWeight::Spline { weight, .. } => weight.weight(s),
            ResolvedWeight::Custom(table) => table.get(&j).copied().unwrap_or(0.0),
        }
    }

    pub fn order(&self) -> Option<usize> {
        match self {
            ResolvedWeight::Jagerman { m, .. } => Some(*m),
            ResolvedWeight::Spline { weight, .. } => Some(weight.order()),
            _ => None,
        }
    }

    pub fn below_threshold(&self) -> bool {
        match self {
            ResolvedWeight::Jagerman { below_threshold, .. }
            | ResolvedWeight::Spline { below_threshold, .. } => *below_threshold,
            _ => false,
        }
    }
}

/// Coefficient of `X(j)` in the reconstruction of `X(t)` from `J_n`.
pub fn weight_value(spec: &WeightSpec, n: usize, t: f64, j: i64) -> Result<f64> {
    Ok(spec.resolve(n)?.value(t, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bw(num: i64, den: i64) -> Bandwidth {
        Bandwidth::pi_fraction(num, den).unwrap()
    }

    /// Normalized B-spline on the sorted knots by Cox–de Boor, scaled to
    /// unit integral.
    fn bspline_density(knots: &[f64], x: f64) -> f64 {
        let k = knots.len() - 1;
        let mut n: Vec<f64> = (0..k)
            .map(|i| if x >= knots[i] && x < knots[i + 1] { 1.0 } else { 0.0 })
            .collect();
        for d in 1..k {
            for i in 0..k - d {
                let left = if knots[i + d] > knots[i] {
                    (x - knots[i]) / (knots[i + d] - knots[i]) * n[i]
                } else {
                    0.0
                };
                let right = if knots[i + d + 1] > knots[i + 1] {
                    (knots[i + d + 1] - x) / (knots[i + d + 1] - knots[i + 1]) * n[i + 1]
                } else {
                    0.0
                };
                n[i] = left + right;
            }
        }
        n[0] * k as f64 / (knots[k] - knots[0])
    }

    /// `∫ M(x) cos(ux) dx` by Gauss–Legendre on each knot interval.
    fn bspline_fourier(k: usize, u: f64) -> f64 {
        let mut knots = chebyshev_extrema(k);
        knots.reverse();
        let r = crate::quadrature::rule(64);
        let mut total = 0.0;
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, wt) in r.nodes.iter().zip(&r.weights) {
                let y = mid + half * x;
                total += wt * half * bspline_density(&knots, y) * (u * y).cos();
            }
        }
        total
    }

    /// Solve the moment system plus normalization by Gaussian elimination.
    fn alphas_by_linear_solve(k: usize) -> Vec<f64> {
        let x = chebyshev_extrema(k);
        let dim = k + 1;
        let mut a = vec![vec![0.0; dim + 1]; dim];
        for l in 0..k {
            for j in 0..dim {
                let sign = if (k - j).is_multiple_of(2) { 1.0 } else { -1.0 };
                a[l][j] = sign * x[j].powi(l as i32);
            }
        }
        for j in 0..dim {
            a[k][j] = 1.0;
        }
        a[k][dim] = (2.0 * PI).sqrt() * alpha_mass(k);
        for c in 0..dim {
            let p = (c..dim).max_by(|r, s| a[*r][c].abs().total_cmp(&a[*s][c].abs())).unwrap();
            a.swap(c, p);
            for r in 0..dim {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for q in c..=dim {
                        a[r][q] -= f * a[c][q];
                    }
                }
            }
        }
        (0..dim).map(|i| a[i][dim] / a[i][i]).collect()
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(3.0).abs() < 1e-16);
        assert!((sinc(0.5) - 2.0 / PI).abs() < 1e-16);
    }

    #[test]
    fn jagerman_examples() {
        let d = bw(1, 2);
        for m in [1, 4, 9] {
            assert_eq!(jagerman_weight(m, d, 0.0), 1.0);
            assert!(jagerman_weight(m, d, 5.0).abs() < 1e-16);
        }
        let v = jagerman_weight(1, d, 0.5);
        assert!((v - sinc(0.5) * sinc(0.25)).abs() < 1e-16);
        assert!((v - 0.5731592).abs() < 1e-7);
    }

    #[test]
    fn order_selection() {
        assert_eq!(select_order_a1(10, bw(1, 2)).unwrap().order, 5);
        let c = select_order_a1(1, Bandwidth::radians(PI - 0.01).unwrap()).unwrap();
        assert_eq!(c.order, 1);
        assert!(c.below_threshold);
        assert_eq!(select_order_a1(20, bw(1, 3)).unwrap().order, 15);
        assert_eq!(select_order_a2(10, bw(1, 2)).unwrap().order, 7);
        assert_eq!(select_order_a2(1, Bandwidth::radians(3.0).unwrap()).unwrap().order, 1);
        assert_eq!(select_order_a2(16, bw(1, 3)).unwrap().order, 16);
        assert!(select_order_a2(5, bw(1, 1)).is_err());
        assert!(!select_order_a2(10, bw(1, 2)).unwrap().below_threshold);
        assert!(select_order_a2(1, bw(1, 2)).unwrap().below_threshold);
    }

    #[test]
    fn coefficient_examples() {
        let a1 = spline_coeffs(1, 60).unwrap();
        let half = (2.0 * PI).sqrt() / 2.0;
        assert!((a1[0] - half).abs() < 1e-15 && (a1[1] - half).abs() < 1e-15);
        assert!((a1[0] - 1.2533).abs() < 1e-4);

        let a2 = spline_coeffs(2, 60).unwrap();
        let solved = alphas_by_linear_solve(2);
        for (a, b) in a2.iter().zip(&solved) {
            assert!((a - b).abs() < 1e-14);
        }
        let s: f64 = a2.iter().sum();
        assert!((s - 4.0 * (2.0 * PI).sqrt()).abs() < 1e-13);
        assert!(matches!(spline_coeffs(61, 60), Err(Error::OrderTooLarge { order: 61, limit: 60 })));
    }

    #[test]
    fn coefficient_invariants() {
        for k in 1..=40 {
            let a = spline_coeffs(k, 60).unwrap();
            let x = chebyshev_extrema(k);
            let total: f64 = a.iter().sum();
            let target = (2.0 * PI).sqrt() * alpha_mass(k);
            assert!((total / target - 1.0).abs() < 1e-12, "k={k}");
            assert!(a.iter().all(|v| *v >= 0.0));
            for l in 0..k {
                let r: f64 = (0..=k)
                    .map(|j| {
                        let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
                        sign * a[j] * x[j].powi(l as i32)
                    })
                    .sum();
                assert!(r.abs() <= 1e-10 * total, "k={k}, l={l}: {r:e}");
            }
            // closed form: interior nodes equal, endpoints half
            let interior = target / k as f64;
            assert!((a[0] - interior / 2.0).abs() <= 1e-12 * interior);
            if k > 1 {
                assert!((a[1] - interior).abs() <= 1e-12 * interior);
            }
        }
    }

    #[test]
    fn divided_differences_match_linear_solve() {
        for k in 1..=12 {
            let a = spline_coeffs(k, 60).unwrap();
            let b = alphas_by_linear_solve(k);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-10 * y.abs(), "k={k}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn fhat_examples() {
        let d = bw(1, 2);
        for k in 1..=20 {
            assert!((SplineWeight::new(k, d).unwrap().fhat(0.0) - 1.0).abs() < 1e-10);
        }
        let w1 = SplineWeight::new(1, d).unwrap();
        assert!((w1.fhat(1.0) - 2.0 / PI).abs() < 1e-15);
        for xi in [0.3, 2.5, 7.0, 40.0] {
            let u = PI / 2.0 * xi;
            assert!((w1.fhat(xi) - u.sin() / u).abs() < 1e-15);
        }
        let w3 = SplineWeight::new(3, d).unwrap();
        let bound = spline_decay_constant(3, d) / 10f64.powi(3);
        assert!((bound - 24.0 * 8.0 / (PI.powi(3) * 1e3)).abs() < 1e-15);
        assert!(w3.fhat(10.0).abs() <= bound);
    }

    #[test]
    fn fhat_matches_bspline_transform() {
        for k in [2, 3, 5, 8, 12] {
            let w = SplineWeight::new(k, bw(1, 2)).unwrap();
            for xi in [0.1, 0.9, 1.7, 2.5, 4.0, 9.0, 25.0] {
                let u = PI / 2.0 * xi;
                let oracle = bspline_fourier(k, u);
                assert!((w.fhat(xi) - oracle).abs() < 1e-12, "k={k}, ξ={xi}: {} vs {oracle}", w.fhat(xi));
            }
        }
    }

    #[test]
    fn evaluation_branches_agree() {
        for k in [4, 11, 20, 35] {
            let w = SplineWeight::new(k, bw(1, 3)).unwrap();
            for xi in [1.0, 1.4, 2.8, 4.5] {
                let u = w.margin * xi;
                let ext = w.direct_x(xi);
                if u <= 6.0 {
                    assert!((w.taylor(u) - ext).abs() < 1e-13, "k={k} u={u}");
                }
                if w.direct_amplification(u) <= 1e3 {
                    assert!((w.direct(u) - ext).abs() < 1e-11, "k={k} u={u}");
                }
            }
        }
    }

    #[test]
    fn decay_bound_on_log_grid() {
        for delta in [bw(1, 3), bw(1, 2), bw(3, 4)] {
            for k in 1..=20 {
                let w = SplineWeight::new(k, delta).unwrap();
                let c = spline_decay_constant(k, delta);
                for i in 0..50 {
                    let xi = 0.1 * 1000f64.powf(i as f64 / 49.0);
                    let v = w.fhat(xi).abs();
                    assert!(v <= c / xi.powi(k as i32) * (1.0 + 1e-12), "δ={delta}, k={k}, ξ={xi}");
                }
            }
        }
    }

    #[test]
    fn reconstruction_identity() {
        let d = bw(1, 2);
        let f = |t: f64| crate::kernelmat::kd_kernel(PI / 2.0, t, 0.3);
        for k in [3, 5, 7] {
            let w = SplineWeight::new(k, d).unwrap();
            for t in [0.2, 0.5, 0.8] {
                let s: f64 = (-200..=200).map(|j| f(j as f64) * w.weight(t - j as f64)).sum();
                assert!((s - f(t)).abs() < 1e-8, "k={k}, t={t}: {s} vs {}", f(t));
            }
        }
    }

    #[test]
    fn power_sum_bound() {
        for q in [1.5f64, 2.0, 4.0] {
            for t in [0.1, 0.5, 0.9] {
                let s: f64 = (-100_000..=100_000).map(|j| sinc(t - j as f64).abs().powf(q)).sum();
                assert!(s < q / (q - 1.0), "q={q}, t={t}: {s}");
            }
        }
    }

    #[test]
    fn weight_value_examples() {
        let d = bw(1, 2);
        for spec in [WeightSpec::plain_sinc(d), WeightSpec::jagerman(d), WeightSpec::spline(d)] {
            assert!((weight_value(&spec, 4, 2.0, 2).unwrap() - 1.0).abs() < 1e-15);
            assert!(weight_value(&spec, 4, 2.0, -1).unwrap().abs() < 1e-15);
        }
        let v = weight_value(&WeightSpec::spline(d), 10, 0.5, 0).unwrap();
        let w7 = SplineWeight::new(7, d).unwrap();
        assert!((v - sinc(0.5) * w7.fhat(0.5)).abs() < 1e-16);
        let table = BTreeMap::from([(0, 0.25), (1, 0.75)]);
        let c = WeightSpec::custom(d, table);
        assert_eq!(weight_value(&c, 1, 0.3, 1).unwrap(), 0.75);
        assert_eq!(weight_value(&c, 1, 0.3, -3).unwrap(), 0.0);
    }

    #[test]
    fn method_json() {
        let m: MethodSpec = serde_json::from_str(r#"{"method":"a2","order":5}"#).unwrap();
        assert_eq!(m, MethodSpec { method: Method::A2, order: Some(5) });
        let o: MethodSpec = serde_json::from_str(r#"{"method":"optimal"}"#).unwrap();
        assert!(WeightSpec::from_method(o, bw(1, 2)).is_none());
        assert!(serde_json::from_str::<MethodSpec>(r#"{"method":"gauss"}"#).is_err());
        assert_eq!(Method::parse("Shannon").unwrap(), Method::Shannon);
    }

    proptest! {
        #[test]
        fn fhat_even_and_bounded(k in 1usize..25, xi in 0.0f64..60.0, num in 1i64..4) {
            let w = SplineWeight::new(k, bw(num, 4)).unwrap();
            let a = w.fhat(xi);
            let b = w.fhat(-xi);
            prop_assert!((a - b).abs() < 1e-14);
            // B̂ is the transform of a probability density
            prop_assert!(a.abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn jagerman_bounded_by_sinc(m in 1usize..30, t in -40.0f64..40.0) {
            let g = jagerman_weight(m, bw(1, 2), t);
            prop_assert!(g.abs() <= sinc(t).abs() + 1e-16);
        }
    }
}
