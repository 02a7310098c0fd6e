//! Closed-form error bounds and empirical decay-rate fits.

use std::f64::consts::{E, PI};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{Bandwidth, DensityNorms};
use crate::weights::spline_decay_constant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundTag {
    /// Lower bound on the intrinsic error of the sinc kernel.
    Lemma22Lower,
    /// Upper bound on the intrinsic error of the sinc kernel.
    Lemma22Upper,
    /// Intrinsic-error upper bound for bounded densities.
    Thm24Upper,
    /// Intrinsic-error upper bound for integrable densities.
    Thm29Upper,
    /// Intrinsic-error lower bound from a density floor on `[a, b]`.
    Thm210Lower,
    /// Decay shape of the Jagerman method, up to an unknown constant.
    Thm32Rate,
    /// Upper bound for the spline method over the unit ball.
    Thm34Upper,
}

impl BoundTag {
    pub const ALL: [BoundTag; 7] = [
        BoundTag::Lemma22Lower,
        BoundTag::Lemma22Upper,
        BoundTag::Thm24Upper,
        BoundTag::Thm29Upper,
        BoundTag::Thm210Lower,
        BoundTag::Thm32Rate,
        BoundTag::Thm34Upper,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BoundTag::Lemma22Lower => "lemma22-lower",
            BoundTag::Lemma22Upper => "lemma22-upper",
            BoundTag::Thm24Upper => "thm24-upper",
            BoundTag::Thm29Upper => "thm29-upper",
            BoundTag::Thm210Lower => "thm210-lower",
            BoundTag::Thm32Rate => "thm32-rate",
            BoundTag::Thm34Upper => "thm34-upper",
        }
    }

    pub fn is_lower(&self) -> bool {
        matches!(self, BoundTag::Lemma22Lower | BoundTag::Thm210Lower)
    }
}

impl std::fmt::Display for BoundTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Inputs to [`eval_bound`]. Fields a tag does not use are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundParams {
    pub delta: Bandwidth,
    pub n: usize,
    pub norms: Option<DensityNorms>,
    /// `[a, b] ⊆ [−δ, δ]` on which `ρ ≥ floor`.
    pub interval: Option<(f64, f64)>,
    pub floor: Option<f64>,
    /// Constant multiplying the Jagerman decay shape.
    pub rate_constant: Option<f64>,
}

impl BoundParams {
    pub fn new(delta: Bandwidth, n: usize) -> Self {
        BoundParams {
            delta,
            n,
            norms: None,
            interval: None,
            floor: None,
            rate_constant: None,
        }
    }

    pub fn with_norms(mut self, norms: DensityNorms) -> Self {
        self.norms = Some(norms);
        self
    }

    pub fn with_floor(mut self, a: f64, b: f64, floor: f64) -> Self {
        self.interval = Some((a, b));
        self.floor = Some(floor);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub tag: BoundTag,
    pub n: usize,
    pub delta: f64,
    /// Absent for the rate tag without a constant, or where the formula
    /// degenerates (no oversampling margin).
    pub value: Option<f64>,
    pub valid: bool,
    /// Smallest `n` (or strict lower limit) where the estimate applies.
    pub threshold: Option<f64>,
    /// Per-sample decay exponent of the estimate.
    pub exponent: f64,
}

fn need_norms(p: &BoundParams, tag: BoundTag) -> Result<DensityNorms> {
    p.norms
        .ok_or_else(|| Error::InvalidInput(format!("{tag} needs the density norms")))
}

/// Evaluate a closed-form bound. Out-of-range `n` gives the formula value
/// with `valid = false`.
pub fn eval_bound(tag: BoundTag, p: &BoundParams) -> Result<BoundValue> {
    if p.n == 0 {
        return Err(Error::InvalidInput("bounds need n ≥ 1".into()));
    }
    let n = p.n as f64;
    let delta = p.delta.value();
    let margin = p.delta.margin();
    let decay = (-margin * n / 2.0).exp();
    let oversampled = margin > 0.0;

    let (value, valid, threshold, exponent) = match tag {
        BoundTag::Lemma22Lower => {
            let v = 5.0 / (11.0 * E * (3.0 * PI).sqrt()) * delta / (2.0 * n + 1.0) * (delta / 4.0).powf(2.0 * n);
            (Some(v), true, None, 2.0 * (4.0 / delta).ln())
        }
        BoundTag::Lemma22Upper => {
            let v = (2.0 + margin).sqrt() * 3f64.sqrt() * E / (2f64.sqrt() * PI) / n.sqrt() * decay;
            (Some(v), true, None, margin / 2.0)
        }
        BoundTag::Thm24Upper => {
            let linf = need_norms(p, tag)?.linf;
            let v = linf.sqrt() * (2.0 + margin).sqrt() * 3f64.sqrt() * E / (PI * n).sqrt() * decay;
            (Some(v), true, None, margin / 2.0)
        }
        BoundTag::Thm29Upper => {
            let l1 = need_norms(p, tag)?.l1;
            if !oversampled {
                (None, false, None, 0.0)
            } else {
                let shape = margin.sqrt() / 2.0 + 2.0 * 2f64.sqrt() / margin.sqrt();
                let v = l1.sqrt() * 11.0 * E / (10.0 * PI.sqrt()) * shape / n.sqrt() * decay;
                let th = 4.0 / margin;
                (Some(v), n >= th, Some(th), margin / 2.0)
            }
        }
        BoundTag::Thm210Lower => {
            let (a, b) = p
                .interval
                .ok_or_else(|| Error::InvalidInput("thm210-lower needs an interval [a, b]".into()))?;
            let m = p.floor.unwrap_or(0.0);
            let slack = delta * 1e-12;
            if !(a < b && a >= -delta - slack && b <= delta + slack) {
                return Err(Error::BadInterval {
                    a,
                    b,
                    reason: format!("must satisfy a < b inside [-{delta}, {delta}]"),
                });
            }
            if !(m > 0.0) {
                return Err(Error::BadInterval {
                    a,
                    b,
                    reason: format!("density floor must be positive, got {m}"),
                });
            }
            let dp = (b - a) / 2.0;
            let v = 5.0 * (2.0 * m).sqrt() / (11.0 * E * 3f64.sqrt()) * dp / (2.0 * n + 1.0) * (dp / 4.0).powf(2.0 * n);
            (Some(v), true, None, 2.0 * (4.0 / dp).ln())
        }
        BoundTag::Thm32Rate => {
            if !oversampled {
                (None, false, None, 0.0)
            } else {
                let v = p
                    .rate_constant
                    .map(|c| c * (n.ln() / (n * margin)).sqrt() * (-margin * n / (2.0 * E)).exp());
                let th = (E / margin).max(E * E);
                (v, n >= th, Some(th), margin / (2.0 * E))
            }
        }
        BoundTag::Thm34Upper => {
            if !oversampled {
                (None, false, None, 0.0)
            } else {
                let v = (121.0f64 / 200.0).sqrt()
                    * (0.75f64).exp()
                    * (2.0 + margin).sqrt()
                    * ((n.ln() + 1.0) / (2.0 * n)).powf(0.25)
                    * decay;
                let th = (2.0 / margin).max(E);
                (Some(v), n > th, Some(th), margin / 2.0)
            }
        }
    };
    Ok(BoundValue {
        tag,
        n: p.n,
        delta,
        value,
        valid,
        threshold,
        exponent,
    })
}

/// `(11√(2π)/10) (k/e)^k √k`, an upper bound for `k!`.
pub fn stirling_upper(k: usize) -> f64 {
    let kf = k as f64;
    11.0 * (2.0 * PI).sqrt() / 10.0 * (kf / E).powf(kf) * kf.sqrt()
}

/// The integrable-density bound before Stirling's estimate, at spline
/// order `k`: `√‖ρ‖₁ (1/π)(1/n + 2/k) C_k / n^k` with `C_k` the spline decay
/// constant.
pub fn thm29_at_order(l1: f64, delta: Bandwidth, n: usize, k: usize) -> f64 {
    let nf = n as f64;
    l1.sqrt() / PI * (1.0 / nf + 2.0 / k as f64) * spline_decay_constant(k, delta) / nf.powi(k as i32)
}

/// `[−2 ln(4/δ)(1 + s), −(π−δ)/2 (1 − s)]`, the admissible range for the
/// optimal method's fitted slope.
pub fn optimal_exponent_interval(delta: Bandwidth, slack: f64) -> (f64, f64) {
    (
        -2.0 * (4.0 / delta.value()).ln() * (1.0 + slack),
        -delta.margin() / 2.0 * (1.0 - slack),
    )
}

/// Which part of a series a rate fit uses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[derive(Default)]
pub enum FitRange {
    All,
    /// Points with `n` at or above the median of the available `n`.
    #[default]
    UpperHalf,
    Explicit { lo: f64, hi: f64 },
}


#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_range: (f64, f64),
    pub points: usize,
}

fn select(series: &[(f64, f64)], range: FitRange) -> Vec<(f64, f64)> {
    let mut s: Vec<(f64, f64)> = series.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    match range {
        FitRange::All => s,
        FitRange::UpperHalf => {
            let start = s.len() / 2;
            s.split_off(start)
        }
        FitRange::Explicit { lo, hi } => s.into_iter().filter(|(n, _)| *n >= lo && *n <= hi).collect(),
    }
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if ss_tot <= f64::MIN_POSITIVE {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    (slope, intercept, r2)
}

fn fit(series: &[(f64, f64)], range: FitRange, log_x: bool) -> Result<RateFit> {
    let pts = select(series, range);
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs at least 4 points, got {}",
            pts.len()
        )));
    }
    if let Some((n, e)) = pts.iter().find(|(_, e)| !(*e > 0.0)) {
        return Err(Error::NonpositiveError { n: *n, value: *e });
    }
    let xs: Vec<f64> = pts.iter().map(|(n, _)| if log_x { n.ln() } else { *n }).collect();
    if xs.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::InsufficientData("rate fit needs at least two distinct n".into()));
    }
    let ys: Vec<f64> = pts.iter().map(|(_, e)| e.ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        n_range: (pts[0].0, pts[pts.len() - 1].0),
        points: pts.len(),
    })
}

/// Least-squares line through `(n, ln e_n)`.
pub fn rate_fit(series: &[(f64, f64)], range: FitRange) -> Result<RateFit> {
    fit(series, range, false)
}

/// Least-squares line through `(ln n, ln e_n)`.
pub fn loglog_fit(series: &[(f64, f64)], range: FitRange) -> Result<RateFit> {
    fit(series, range, true)
}

pub const BOUNDS_CSV_HEADER: &str = "n,tag,value,valid";

pub fn bounds_csv(values: &[BoundValue]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{BOUNDS_CSV_HEADER}");
    for b in values {
        let v = b.value.map(|v| format!("{v:?}")).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", b.n, b.tag, v, b.valid);
    }
    out
}
