//! Monte Carlo sample paths of zero-mean Gaussian stationary processes and
//! empirical reconstruction errors.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::reconstruct::CoefficientVector;
use crate::spectra::Autocorrelation;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
#[derive(Default)]
pub enum SimMode {
    /// Joint Gaussian draw on the point set via Cholesky.
    #[default]
    Exact,
    /// Random-phase sum over `modes` midpoint frequencies.
    Spectral { modes: usize },
}


#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub trials: usize,
    /// Diagonal added to the path covariance; `None` means `1e-12·R(0)`.
    #[serde(default)]
    pub jitter: Option<f64>,
    #[serde(default)]
    pub mode: SimMode,
}

impl SimConfig {
    pub fn new(seed: u64, trials: usize) -> Self {
        SimConfig {
            seed,
            trials,
            jitter: None,
            mode: SimMode::Exact,
        }
    }

    pub fn spectral(mut self, modes: usize) -> Self {
        self.mode = SimMode::Spectral { modes };
        self
    }

    /// Jitter actually applied for a process with variance `r0`.
    pub fn effective_jitter(&self, r0: f64) -> f64 {
        match self.mode {
            SimMode::Exact => self.jitter.unwrap_or(1e-12 * r0),
            SimMode::Spectral { .. } => 0.0,
        }
    }
}

/// `M` realizations of the process on a fixed point set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub points: Vec<f64>,
    /// One row per trial, one column per point.
    pub samples: Vec<Vec<f64>>,
    pub seed: u64,
    pub mode: SimMode,
    pub jitter: f64,
}

impl PathEnsemble {
    pub fn trials(&self) -> usize {
        self.samples.len()
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.points
            .iter()
            .position(|p| *p == t)
            .ok_or(Error::PointNotInEnsemble(t))
    }

    /// Long-format CSV: `trial,point,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,point,value\n");
        for (i, row) in self.samples.iter().enumerate() {
            for (p, v) in self.points.iter().zip(row) {
                let _ = writeln!(out, "{i},{p:?},{v:?}");
            }
        }
        out
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Draw `cfg.trials` paths on `points`.
pub fn sample_paths(a: &Autocorrelation, points: &[f64], cfg: &SimConfig) -> Result<PathEnsemble> {
    if cfg.trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidInput("point set must be nonempty".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if !p.is_finite() || points[..i].contains(p) {
            return Err(Error::InvalidInput(format!("points must be finite and distinct ({p})")));
        }
    }
    let r0 = a.eval(0.0)?;
    let jitter = cfg.effective_jitter(r0);
    if !(jitter >= 0.0) {
        return Err(Error::InvalidInput(format!("jitter must be nonnegative, got {jitter}")));
    }
    let dim = points.len();
    let samples: Vec<Vec<f64>> = match cfg.mode {
        SimMode::Exact => {
            let mut cov = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in 0..=i {
                    let v = a.eval(points[i] - points[j])?;
                    cov[i * dim + j] = v;
                    cov[j * dim + i] = v;
                }
                cov[i * dim + i] += jitter;
            }
            let ch = Cholesky::factor(&cov, dim).map_err(|e| {
                Error::CovarianceNotPd(format!("pivot {} is {:e} with jitter {jitter:e}", e.index, e.pivot))
            })?;
            (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = trial_rng(cfg.seed, trial);
                    let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                    ch.apply_lower(&z)
                })
                .collect()
        }
        SimMode::Spectral { modes } => {
            if modes == 0 {
                return Err(Error::InvalidInput("spectral mode needs at least one mode".into()));
            }
            let delta = a.delta().value();
            let dxi = delta / modes as f64;
            let freqs: Vec<f64> = (0..modes).map(|k| (k as f64 + 0.5) * dxi).collect();
            let amps: Vec<f64> = freqs.iter().map(|x| (2.0 * a.density.eval(*x) * dxi).sqrt()).collect();
            (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = trial_rng(cfg.seed, trial);
                    let mut row = vec![0.0; dim];
                    for (xi, amp) in freqs.iter().zip(&amps) {
                        let ak: f64 = rng.sample(StandardNormal);
                        let bk: f64 = rng.sample(StandardNormal);
                        for (v, t) in row.iter_mut().zip(points) {
                            let (s, c) = (xi * t).sin_cos();
                            *v += amp * (ak * c + bk * s);
                        }
                    }
                    row
                })
                .collect()
        }
    };
    Ok(PathEnsemble {
        points: points.to_vec(),
        samples,
        seed: cfg.seed,
        mode: cfg.mode,
        jitter,
    })
}

/// Mean of squared residuals over trials and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// `mean_i |X(t,ω_i) − Σ_j c_j X(j,ω_i)|²`.
pub fn empirical_mse(e: &PathEnsemble, c: &CoefficientVector) -> Result<MseEstimate> {
    let ti = e.index_of(c.t)?;
    let idx: Vec<usize> = (0..c.values.len())
        .map(|i| e.index_of(c.sample(i) as f64))
        .collect::<Result<_>>()?;
    let sq: Vec<f64> = e
        .samples
        .iter()
        .map(|row| {
            let est: f64 = idx.iter().zip(&c.values).map(|(k, cj)| cj * row[*k]).sum();
            (row[ti] - est).powi(2)
        })
        .collect();
    let m = sq.len() as f64;
    let mean = sq.iter().sum::<f64>() / m;
    let var = if sq.len() > 1 {
        sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(MseEstimate {
        mean,
        stderr: (var / m).sqrt(),
    })
}

/// Expected residual variance when the simulated covariance carries a
/// diagonal jitter: `mse + jitter·(1 + Σ c_j²)`.
pub fn jittered_reference(mse: f64, c: &CoefficientVector, jitter: f64) -> f64 {
    mse + jitter * (1.0 + c.values.iter().map(|v| v * v).sum::<f64>())
}

/// Standardized difference between an estimate and its expected value.
pub fn z_score(est: &MseEstimate, expected: f64) -> f64 {
    let d = est.mean - expected;
    if est.stderr > 0.0 {
        d / est.stderr
    } else if d.abs() <= 1e-15 * expected.abs().max(f64::MIN_POSITIVE) {
        0.0
    } else {
        f64::INFINITY.copysign(d)
    }
}

/// Points `J_n ∪ {t}` for each `t`, in ascending order without repeats.
pub fn ensemble_points(n: usize, ts: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = (-(n as i64) + 1..=n as i64).map(|j| j as f64).collect();
    for t in ts {
        if !pts.contains(t) {
            pts.push(*t);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts
}
