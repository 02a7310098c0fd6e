//! Spectral densities of bandlimited wide-sense-stationary processes and
//! their autocorrelation functions.
//!
//! Densities are even and supported on `[-δ, δ]`, so the autocorrelation
//! `R(τ) = ∫ e^{iτξ} ρ(ξ) dξ` reduces to `2 ∫_0^δ cos(τξ) ρ(ξ) dξ` and is
//! real. Flat and piecewise-constant densities use closed forms; the
//! truncated Gaussian and tabulated densities go through Gauss–Legendre
//! quadrature.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::precision::XFloat;
use crate::quadrature;

/// A bandwidth `δ` in radians, optionally remembered as an exact rational
/// multiple of π so extended-precision kernels see the exact value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bandwidth {
    radians: f64,
    pi_ratio: Option<(i64, i64)>,
}

impl Bandwidth {
    pub fn radians(x: f64) -> Result<Self> {
        Self::check(x)?;
        Ok(Bandwidth {
            radians: x,
            pi_ratio: None,
        })
    }

    /// `num/den · π`.
    pub fn pi_fraction(num: i64, den: i64) -> Result<Self> {
        if den <= 0 || num <= 0 {
            return Err(Error::InvalidInput(format!(
                "bandwidth {num}π/{den} must be positive"
            )));
        }
        let x = PI * num as f64 / den as f64;
        Self::check(x)?;
        Ok(Bandwidth {
            radians: x,
            pi_ratio: Some((num, den)),
        })
    }

    fn check(x: f64) -> Result<()> {
        if !(x > 0.0 && x <= PI * (1.0 + 1e-15)) {
            return Err(Error::InvalidInput(format!(
                "bandwidth must satisfy 0 < δ ≤ π, got {x}"
            )));
        }
        Ok(())
    }

    pub fn value(&self) -> f64 {
        self.radians
    }

    /// Oversampling margin `π − δ` (zero at the Nyquist rate).
    pub fn margin(&self) -> f64 {
        match self.pi_ratio {
            Some((num, den)) => PI * (den - num) as f64 / den as f64,
            None => (PI - self.radians).max(0.0),
        }
    }

    pub fn is_critical(&self) -> bool {
        match self.pi_ratio {
            Some((num, den)) => num == den,
            None => self.radians >= PI,
        }
    }

    pub fn to_x(&self, bits: usize) -> XFloat {
        match self.pi_ratio {
            Some((num, den)) => {
                XFloat::pi(bits) * XFloat::from_i64(num, bits) / XFloat::from_i64(den, bits)
            }
            None => XFloat::from_f64(self.radians, bits),
        }
    }

    /// Accepts `pi`, `pi/2`, `3pi/4`, `3*pi/4`, `2π/3` or a decimal number.
    pub fn parse(s: &str) -> Result<Self> {
        let t: String = s.trim().to_lowercase().replace('π', "pi").replace(['*', ' '], "");
        if let Some(pos) = t.find("pi") {
            let num_part = &t[..pos];
            let rest = &t[pos + 2..];
            let num: i64 = if num_part.is_empty() {
                1
            } else {
                num_part
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("cannot parse bandwidth '{s}'")))?
            };
            let den: i64 = if rest.is_empty() {
                1
            } else if let Some(d) = rest.strip_prefix('/') {
                d.parse()
                    .map_err(|_| Error::InvalidInput(format!("cannot parse bandwidth '{s}'")))?
            } else {
                return Err(Error::InvalidInput(format!("cannot parse bandwidth '{s}'")));
            };
            Self::pi_fraction(num, den)
        } else {
            let x: f64 = t
                .parse()
                .map_err(|_| Error::InvalidInput(format!("cannot parse bandwidth '{s}'")))?;
            Self::radians(x)
        }
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pi_ratio {
            Some((1, 1)) => write!(f, "pi"),
            Some((1, den)) => write!(f, "pi/{den}"),
            Some((num, 1)) => write!(f, "{num}pi"),
            Some((num, den)) => write!(f, "{num}pi/{den}"),
            None => write!(f, "{}", self.radians),
        }
    }
}

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.pi_ratio {
            Some(_) => s.serialize_str(&self.to_string()),
            None => s.serialize_f64(self.radians),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(x) => Bandwidth::radians(x),
            Raw::Text(s) => Bandwidth::parse(&s),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Shape of an even spectral density on `[-δ, δ]`.
#[derive(Clone, Debug, PartialEq)]
pub enum DensityShape {
    /// Constant `level`.
    Flat { level: f64 },
    /// `exp(-ξ²/(2σ²))`.
    TruncatedGaussian { sigma: f64 },
    /// `levels[i]` on `|ξ| ∈ [e_i, e_{i+1})` where `e_0 = 0`, the interior
    /// breakpoints are `edges` and the last edge is `δ`.
    PiecewiseConstant { edges: Vec<f64>, levels: Vec<f64> },
    /// Samples of `ρ(|ξ|)` at `xi` (from 0 to δ), linearly interpolated.
    Tabulated { xi: Vec<f64>, values: Vec<f64> },
}

/// Nonnegative even density `scale · shape(ξ)` supported on `[-δ, δ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDensity {
    shape: DensityShape,
    delta: Bandwidth,
    scale: f64,
}

/// `L¹`, `L²` and `L^∞` norms over `[-δ, δ]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

fn nonneg(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "{name} must be finite and nonnegative, got {x}"
        )));
    }
    Ok(())
}

impl SpectralDensity {
    pub fn new(shape: DensityShape, delta: Bandwidth, scale: f64) -> Result<Self> {
        nonneg("scale", scale)?;
        let d = delta.value();
        match &shape {
            DensityShape::Flat { level } => nonneg("level", *level)?,
            DensityShape::TruncatedGaussian { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
                }
            }
            DensityShape::PiecewiseConstant { edges, levels } => {
                if levels.len() != edges.len() + 1 {
                    return Err(Error::InvalidInput(format!(
                        "piecewise-constant density needs {} levels for {} interior edges",
                        edges.len() + 1,
                        edges.len()
                    )));
                }
                let mut prev = 0.0;
                for e in edges {
                    if !(*e > prev && *e < d) {
                        return Err(Error::InvalidInput(format!(
                            "interior edges must increase strictly inside (0, {d})"
                        )));
                    }
                    prev = *e;
                }
                for l in levels {
                    nonneg("level", *l)?;
                }
            }
            DensityShape::Tabulated { xi, values } => {
                if xi.len() < 2 || xi.len() != values.len() {
                    return Err(Error::InvalidInput(
                        "tabulated density needs at least two (xi, value) samples".into(),
                    ));
                }
                if xi[0] != 0.0 || (xi[xi.len() - 1] - d).abs() > 1e-12 * d {
                    return Err(Error::InvalidInput(format!(
                        "tabulated abscissae must run from 0 to δ = {d}"
                    )));
                }
                if xi.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidInput("tabulated abscissae must increase".into()));
                }
                for v in values {
                    nonneg("tabulated value", *v)?;
                }
            }
        }
        Ok(SpectralDensity { shape, delta, scale })
    }

    pub fn flat(delta: Bandwidth, level: f64) -> Result<Self> {
        Self::new(DensityShape::Flat { level }, delta, 1.0)
    }

    /// The flat density `1/(2π)` whose autocorrelation is the sinc kernel
    /// `sin(δτ)/(πτ)`.
    pub fn kernel_density(delta: Bandwidth) -> Self {
        Self::flat(delta, 1.0 / (2.0 * PI)).expect("valid flat density")
    }

    pub fn truncated_gaussian(delta: Bandwidth, sigma: f64, scale: f64) -> Result<Self> {
        Self::new(DensityShape::TruncatedGaussian { sigma }, delta, scale)
    }

    pub fn piecewise_constant(delta: Bandwidth, edges: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        Self::new(DensityShape::PiecewiseConstant { edges, levels }, delta, 1.0)
    }

    pub fn tabulated(delta: Bandwidth, xi: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(DensityShape::Tabulated { xi, values }, delta, 1.0)
    }

    pub fn shape(&self) -> &DensityShape {
        &self.shape
    }

    pub fn delta(&self) -> Bandwidth {
        self.delta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::new(self.shape.clone(), self.delta, scale)
    }

    /// Same shape on a different bandwidth. Only meaningful for shapes that
    /// do not carry absolute frequencies (flat and Gaussian).
    pub fn with_delta(&self, delta: Bandwidth) -> Result<Self> {
        Self::new(self.shape.clone(), delta, self.scale)
    }

    pub fn kind_name(&self) -> &'static str {
        match self.shape {
            DensityShape::Flat { .. } => "flat",
            DensityShape::TruncatedGaussian { .. } => "gauss",
            DensityShape::PiecewiseConstant { .. } => "pwc",
            DensityShape::Tabulated { .. } => "table",
        }
    }

    /// Short identifier used in reports.
    pub fn id(&self) -> String {
        match &self.shape {
            DensityShape::Flat { level } => {
                format!("flat(delta={},level={})", self.delta, level * self.scale)
            }
            DensityShape::TruncatedGaussian { sigma } => {
                format!("gauss(delta={},sigma={},scale={})", self.delta, sigma, self.scale)
            }
            DensityShape::PiecewiseConstant { edges, .. } => {
                format!("pwc(delta={},pieces={},scale={})", self.delta, edges.len() + 1, self.scale)
            }
            DensityShape::Tabulated { xi, .. } => {
                format!("table(delta={},samples={},scale={})", self.delta, xi.len(), self.scale)
            }
        }
    }

    /// Breakpoints of the smooth pieces of `ρ` on `[0, δ]`.
    fn segments(&self) -> Vec<f64> {
        let d = self.delta.value();
        match &self.shape {
            DensityShape::Flat { .. } | DensityShape::TruncatedGaussian { .. } => vec![0.0, d],
            DensityShape::PiecewiseConstant { edges, .. } => {
                let mut e = vec![0.0];
                e.extend_from_slice(edges);
                e.push(d);
                e
            }
            DensityShape::Tabulated { xi, .. } => {
                let mut e = xi.clone();
                *e.last_mut().unwrap() = d;
                e
            }
        }
    }

    fn segments_x(&self, bits: usize) -> Vec<XFloat> {
        let mut e: Vec<XFloat> = self
            .segments()
            .iter()
            .map(|x| XFloat::from_f64(*x, bits))
            .collect();
        *e.last_mut().unwrap() = self.delta.to_x(bits);
        e
    }

    /// `ρ(ξ)`; zero outside `[-δ, δ]`.
    pub fn eval(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a > self.delta.value() {
            return 0.0;
        }
        self.scale * self.shape_at(a)
    }

    fn shape_at(&self, a: f64) -> f64 {
        match &self.shape {
            DensityShape::Flat { level } => *level,
            DensityShape::TruncatedGaussian { sigma } => (-a * a / (2.0 * sigma * sigma)).exp(),
            DensityShape::PiecewiseConstant { edges, levels } => {
                let idx = edges.iter().take_while(|e| a >= **e).count();
                levels[idx]
            }
            DensityShape::Tabulated { xi, values } => {
                let k = xi.partition_point(|x| *x <= a).clamp(1, xi.len() - 1);
                let (x0, x1) = (xi[k - 1], xi[k]);
                let w = ((a - x0) / (x1 - x0)).clamp(0.0, 1.0);
                values[k - 1] * (1.0 - w) + values[k] * w
            }
        }
    }

    fn shape_at_x(&self, a: &XFloat) -> XFloat {
        let bits = a.bits();
        match &self.shape {
            DensityShape::Flat { level } => XFloat::from_f64(*level, bits),
            DensityShape::TruncatedGaussian { sigma } => {
                let s = XFloat::from_f64(*sigma, bits);
                let two = XFloat::from_f64(2.0, bits);
                (-(a * a) / (two * &s * &s)).exp()
            }
            DensityShape::PiecewiseConstant { .. } => XFloat::from_f64(self.shape_at(a.to_f64()), bits),
            DensityShape::Tabulated { xi, values } => {
                let af = a.to_f64();
                let k = xi.partition_point(|x| *x <= af).clamp(1, xi.len() - 1);
                let x0 = XFloat::from_f64(xi[k - 1], bits);
                let x1 = XFloat::from_f64(xi[k], bits);
                let w = (a - &x0) / (&x1 - &x0);
                let v0 = XFloat::from_f64(values[k - 1], bits);
                let v1 = XFloat::from_f64(values[k], bits);
                &v0 + &(w * (v1 - &v0))
            }
        }
    }

    /// Minimum of `ρ` over `[a, b] ⊆ [-δ, δ]`.
    pub fn min_on(&self, a: f64, b: f64) -> Result<f64> {
        let d = self.delta.value();
        if !(a < b && a >= -d * (1.0 + 1e-15) && b <= d * (1.0 + 1e-15)) {
            return Err(Error::BadInterval {
                a,
                b,
                reason: format!("must satisfy a < b inside [-{d}, {d}]"),
            });
        }
        // |ξ| ranges over [lo, hi]
        let (lo, hi) = if a <= 0.0 && b >= 0.0 {
            (0.0, a.abs().max(b.abs()))
        } else {
            (a.abs().min(b.abs()), a.abs().max(b.abs()))
        };
        let hi = hi.min(d);
        let m = match &self.shape {
            DensityShape::Flat { level } => *level,
            DensityShape::TruncatedGaussian { .. } => self.shape_at(hi),
            DensityShape::PiecewiseConstant { edges, levels } => {
                let mut bounds = vec![0.0];
                bounds.extend_from_slice(edges);
                bounds.push(d);
                levels
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| bounds[*i] < hi && bounds[i + 1] > lo)
                    .map(|(_, l)| *l)
                    .fold(f64::INFINITY, f64::min)
            }
            DensityShape::Tabulated { xi, .. } => {
                let mut cands = vec![self.shape_at(lo), self.shape_at(hi)];
                cands.extend(xi.iter().filter(|x| **x > lo && **x < hi).map(|x| self.shape_at(*x)));
                cands.into_iter().fold(f64::INFINITY, f64::min)
            }
        };
        Ok(self.scale * m)
    }

    pub fn norms(&self) -> Result<DensityNorms> {
        density_norms(self)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let spec: DensitySpec = serde_json::from_value(v.clone())
            .map_err(|e| Error::InvalidInput(format!("density spec: {e}")))?;
        spec.build()
    }

    pub fn to_json(&self) -> Value {
        let params = match &self.shape {
            DensityShape::Flat { level } => json!({ "level": level }),
            DensityShape::TruncatedGaussian { sigma } => json!({ "sigma": sigma }),
            DensityShape::PiecewiseConstant { edges, levels } => {
                json!({ "edges": edges, "levels": levels })
            }
            DensityShape::Tabulated { xi, values } => json!({ "xi": xi, "values": values }),
        };
        json!({
            "kind": self.kind_name(),
            "delta": serde_json::to_value(self.delta).unwrap_or(Value::Null),
            "params": params,
            "scale": self.scale,
        })
    }
}

/// JSON form of a density: `{"kind", "delta", "params", "scale"}`.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct DensitySpec {
    pub kind: String,
    pub delta: Bandwidth,
    #[serde(default)]
    pub params: serde_json::Map<String, Value>,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl DensitySpec {
    pub fn build(&self) -> Result<SpectralDensity> {
        let num = |key: &str, default: Option<f64>| -> Result<f64> {
            match self.params.get(key) {
                Some(v) => v
                    .as_f64()
                    .ok_or_else(|| Error::InvalidInput(format!("param '{key}' must be a number"))),
                None => default
                    .ok_or_else(|| Error::InvalidInput(format!("missing param '{key}'"))),
            }
        };
        let list = |key: &str| -> Result<Vec<f64>> {
            let arr = self
                .params
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::InvalidInput(format!("param '{key}' must be an array")))?;
            arr.iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| Error::InvalidInput(format!("param '{key}' holds a non-number")))
                })
                .collect()
        };
        let shape = match self.kind.as_str() {
            "flat" => DensityShape::Flat {
                level: num("level", Some(1.0 / (2.0 * PI)))?,
            },
            "gauss" => DensityShape::TruncatedGaussian {
                sigma: num("sigma", Some(1.0))?,
            },
            "pwc" => DensityShape::PiecewiseConstant {
                edges: if self.params.contains_key("edges") { list("edges")? } else { Vec::new() },
                levels: list("levels")?,
            },
            "table" => DensityShape::Tabulated {
                xi: list("xi")?,
                values: list("values")?,
            },
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown density kind '{other}' (expected flat, gauss, pwc, table)"
                )))
            }
        };
        SpectralDensity::new(shape, self.delta, self.scale)
    }
}

/// `ρ(ξ)`.
pub fn eval_density(d: &SpectralDensity, xi: f64) -> f64 {
    d.eval(xi)
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sin_over(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `sin(bτ)/τ`, equal to `b` at `τ = 0`.
fn sin_ratio(b: f64, tau: f64) -> f64 {
    b * sin_over(b * tau)
}

fn sin_ratio_x(b: &XFloat, tau: &XFloat) -> XFloat {
    if tau.is_zero() {
        b.clone()
    } else {
        (b * tau).sin() / tau
    }
}

/// How [`Autocorrelation`] evaluates `R(τ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// Closed form where one exists, quadrature otherwise.
    ClosedForm,
    /// Always integrate numerically.
    Quadrature,
}

/// Evaluator for `R(τ) = ∫ e^{iτξ} ρ(ξ) dξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Autocorrelation {
    pub density: SpectralDensity,
    pub mode: EvalMode,
    /// Starting order of the order-doubling quadrature.
    pub quadrature_order: usize,
}

impl Autocorrelation {
    pub fn new(density: SpectralDensity) -> Self {
        Autocorrelation {
            density,
            mode: EvalMode::ClosedForm,
            quadrature_order: quadrature::START_ORDER,
        }
    }

    pub fn with_mode(density: SpectralDensity, mode: EvalMode) -> Self {
        Autocorrelation {
            mode,
            ..Self::new(density)
        }
    }

    pub fn delta(&self) -> Bandwidth {
        self.density.delta
    }

    fn has_closed_form(&self) -> bool {
        self.mode == EvalMode::ClosedForm
            && matches!(
                self.density.shape,
                DensityShape::Flat { .. } | DensityShape::PiecewiseConstant { .. }
            )
    }

    /// `R(τ)` in double precision.
    pub fn eval(&self, tau: f64) -> Result<f64> {
        let d = &self.density;
        if self.has_closed_form() {
            let delta = d.delta.value();
            return Ok(match &d.shape {
                DensityShape::Flat { level } => 2.0 * d.scale * level * sin_ratio(delta, tau),
                DensityShape::PiecewiseConstant { edges, levels } => {
                    let mut b = vec![0.0];
                    b.extend_from_slice(edges);
                    b.push(delta);
                    let s: f64 = levels
                        .iter()
                        .enumerate()
                        .map(|(i, l)| l * (sin_ratio(b[i + 1], tau) - sin_ratio(b[i], tau)))
                        .sum();
                    2.0 * d.scale * s
                }
                _ => unreachable!(),
            });
        }
        let f = |xi: f64| (tau * xi).cos() * d.scale * d.shape_at(xi);
        Ok(2.0 * quadrature::adaptive_segments(
            &f,
            &d.segments(),
            quadrature::TOLERANCE,
            self.quadrature_order,
        )?)
    }

    /// `R(τ)` at `bits` of precision.
    pub fn eval_x(&self, tau: &XFloat, bits: usize) -> Result<XFloat> {
        let d = &self.density;
        let tau = tau.with_bits(bits);
        let two = XFloat::from_f64(2.0, bits);
        let scale = XFloat::from_f64(d.scale, bits);
        if self.has_closed_form() {
            let delta = d.delta.to_x(bits);
            return Ok(match &d.shape {
                DensityShape::Flat { level } => {
                    two * scale * XFloat::from_f64(*level, bits) * sin_ratio_x(&delta, &tau)
                }
                DensityShape::PiecewiseConstant { levels, .. } => {
                    let b = d.segments_x(bits);
                    let mut s = XFloat::zero(bits);
                    for (i, l) in levels.iter().enumerate() {
                        let piece = sin_ratio_x(&b[i + 1], &tau) - sin_ratio_x(&b[i], &tau);
                        s += &(XFloat::from_f64(*l, bits) * piece);
                    }
                    two * scale * s
                }
                _ => unreachable!(),
            });
        }
        let f = |xi: &XFloat| (&tau * xi).cos() * self.density.shape_at_x(xi);
        let integral =
            quadrature::adaptive_segments_x(&f, &d.segments_x(bits), bits, self.quadrature_order)?;
        Ok(two * scale * integral)
    }

    /// `R(0) = ‖ρ‖₁`.
    pub fn variance(&self) -> Result<f64> {
        self.eval(0.0)
    }
}

/// `R(τ)`.
pub fn autocorrelation(a: &Autocorrelation, tau: f64) -> Result<f64> {
    a.eval(tau)
}

/// `L¹`, `L²`, `L^∞` norms of `ρ` over `[-δ, δ]`.
pub fn density_norms(d: &SpectralDensity) -> Result<DensityNorms> {
    let delta = d.delta.value();
    let s = d.scale;
    match &d.shape {
        DensityShape::Flat { level } => Ok(DensityNorms {
            l1: 2.0 * delta * level * s,
            l2: level * s * (2.0 * delta).sqrt(),
            linf: level * s,
        }),
        DensityShape::PiecewiseConstant { levels, .. } => {
            let b = d.segments();
            let (mut l1, mut l2sq) = (0.0, 0.0);
            for (i, l) in levels.iter().enumerate() {
                let w = b[i + 1] - b[i];
                l1 += 2.0 * w * l * s;
                l2sq += 2.0 * w * (l * s).powi(2);
            }
            Ok(DensityNorms {
                l1,
                l2: l2sq.sqrt(),
                linf: levels.iter().cloned().fold(0.0, f64::max) * s,
            })
        }
        DensityShape::TruncatedGaussian { .. } | DensityShape::Tabulated { .. } => {
            let seg = d.segments();
            let l1 = 2.0
                * quadrature::adaptive_segments(
                    &|x| d.eval(x),
                    &seg,
                    quadrature::TOLERANCE,
                    quadrature::START_ORDER,
                )?;
            let l2sq = 2.0
                * quadrature::adaptive_segments(
                    &|x| d.eval(x).powi(2),
                    &seg,
                    quadrature::TOLERANCE,
                    quadrature::START_ORDER,
                )?;
            let linf = match &d.shape {
                DensityShape::TruncatedGaussian { .. } => s,
                DensityShape::Tabulated { values, .. } => values.iter().cloned().fold(0.0, f64::max) * s,
                _ => unreachable!(),
            };
            Ok(DensityNorms {
                l1,
                l2: l2sq.sqrt(),
                linf,
            })
        }
    }
}

/// Rescale `ρ` so that `‖R‖_{L²(ℝ)} = √(2π)·‖ρ‖_{L²} = 1`.
pub fn normalize_unit_ball(d: &SpectralDensity) -> Result<SpectralDensity> {
    let l2 = density_norms(d)?.l2;
    if !(l2 > 0.0) {
        return Err(Error::DegenerateDensity(format!("{} has zero L² norm", d.id())));
    }
    let factor = 1.0 / ((2.0 * PI).sqrt() * l2);
    if (factor - 1.0).abs() <= 8.0 * f64::EPSILON {
        return Ok(d.clone());
    }
    d.with_scale(d.scale * factor)
}
