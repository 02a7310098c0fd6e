//! Batch runners behind the command-line tool: condition-number tables,
//! error curves, bound envelopes, rate fits and Monte Carlo checks.

use std::f64::consts::E;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bounds::{eval_bound, optimal_exponent_interval, rate_fit, BoundParams, BoundTag, FitRange, RateFit};
use crate::error::{Error, Result};
use crate::kernelmat::{assemble, condition_number, Kd, SampleGrid};
use crate::precision::PrecisionConfig;
use crate::reconstruct::{coefficients, default_grid, sup_error_scan, MseEvaluator, ReconMethod};
use crate::simulate::{empirical_mse, ensemble_points, jittered_reference, sample_paths, z_score, PathEnsemble, SimConfig};
use crate::spectra::{normalize_unit_ball, Autocorrelation, Bandwidth, SpectralDensity};
use crate::weights::{Method, MethodSpec, WeightSpec};

/// Flat density on `[−δ, δ]` scaled into the unit ball.
pub fn normalized_flat(delta: Bandwidth) -> Result<SpectralDensity> {
    normalize_unit_ball(&SpectralDensity::flat(delta, 1.0)?)
}

pub fn recon_method(m: Method, delta: Bandwidth) -> ReconMethod {
    match WeightSpec::from_method(MethodSpec::new(m), delta) {
        Some(w) => ReconMethod::Weighted(w),
        None => ReconMethod::Optimal,
    }
}

/// Sizes must be nonempty, positive and strictly ascending.
pub fn check_n_list(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::InvalidInput("n-list must be nonempty".into()));
    }
    if ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(format!("n-list must be positive and strictly ascending, got {ns:?}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondRow {
    pub delta: Bandwidth,
    pub n: usize,
    pub kappa: f64,
}

pub const CONDNUM_CSV_HEADER: &str = "delta,n,kappa";

/// `κ₂(K_δ[J_n])` for every pair, δ-major.
pub fn condnum_table(deltas: &[Bandwidth], ns: &[usize], p: &PrecisionConfig) -> Result<Vec<CondRow>> {
    check_n_list(ns)?;
    let mut rows = Vec::with_capacity(deltas.len() * ns.len());
    for d in deltas {
        for &n in ns {
            let g = assemble(&Kd { delta: *d }, &SampleGrid::new(n)?, p)?;
            let kappa = condition_number(&g, p).map_err(|e| e.context(format!("delta {d}, n {n}")))?;
            rows.push(CondRow { delta: *d, n, kappa });
        }
    }
    Ok(rows)
}

pub fn condnum_csv(rows: &[CondRow]) -> String {
    let mut out = format!("{CONDNUM_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:?}", r.delta, r.n, r.kappa);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub method: Method,
    pub n: usize,
    pub sup_rmse: f64,
    pub argmax_t: f64,
}

pub const ERRORS_CSV_HEADER: &str = "method,n,sup_rmse,argmax_t";

/// Sup-rmse over the `grid`-point inset grid, method-major.
pub fn error_curves(
    a: &Autocorrelation,
    methods: &[Method],
    ns: &[usize],
    grid: usize,
    p: &PrecisionConfig,
) -> Result<Vec<ErrorRow>> {
    check_n_list(ns)?;
    check_grid(grid)?;
    let ts = default_grid(grid);
    let mut rows = Vec::with_capacity(methods.len() * ns.len());
    for &m in methods {
        let rm = recon_method(m, a.delta());
        for &n in ns {
            let rep = sup_error_scan(&rm, a, n, &ts, p).map_err(|e| e.context(format!("method {m}, n {n}")))?;
            rows.push(ErrorRow {
                method: m,
                n,
                sup_rmse: rep.sup_rmse,
                argmax_t: rep.argmax_t,
            });
        }
    }
    Ok(rows)
}

pub fn errors_csv(rows: &[ErrorRow]) -> String {
    let mut out = format!("{ERRORS_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:?},{:?}", r.method, r.n, r.sup_rmse, r.argmax_t);
    }
    out
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < 3 {
        return Err(Error::InvalidInput(format!("grid size must be at least 3, got {grid}")));
    }
    Ok(())
}

/// One row of the bound envelope; `tag` is a bound name or `error-<method>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub n: usize,
    pub tag: String,
    pub value: Option<f64>,
    pub valid: bool,
}

pub const ENVELOPE_CSV_HEADER: &str = "n,tag,value,valid";

/// Every bound at each `n`, followed by the computed sup-errors.
pub fn bound_envelope(
    a: &Autocorrelation,
    methods: &[Method],
    ns: &[usize],
    grid: usize,
    p: &PrecisionConfig,
) -> Result<Vec<EnvelopeRow>> {
    check_n_list(ns)?;
    let delta = a.delta();
    let norms = a.density.norms()?;
    let d = delta.value();
    let floor = a.density.min_on(-d, d)?;
    let errs = error_curves(a, methods, ns, grid, p)?;
    let mut rows = Vec::new();
    for &n in ns {
        let bp = BoundParams::new(delta, n).with_norms(norms).with_floor(-d, d, floor);
        for tag in BoundTag::ALL {
            let b = eval_bound(tag, &bp)?;
            rows.push(EnvelopeRow {
                n,
                tag: tag.name().into(),
                value: b.value,
                valid: b.valid,
            });
        }
        for e in errs.iter().filter(|e| e.n == n) {
            rows.push(EnvelopeRow {
                n,
                tag: format!("error-{}", e.method),
                value: Some(e.sup_rmse),
                valid: true,
            });
        }
    }
    Ok(rows)
}

pub fn envelope_csv(rows: &[EnvelopeRow]) -> String {
    let mut out = format!("{ENVELOPE_CSV_HEADER}\n");
    for r in rows {
        let v = r.value.map(|v| format!("{v:?}")).unwrap_or_default();
        let _ = writeln!(out, "{},{},{v},{}", r.n, r.tag, r.valid);
    }
    out
}

/// Theoretical per-sample exponent for a method, where one is known.
pub fn theoretical_exponent(m: Method, delta: Bandwidth) -> Option<f64> {
    match m {
        Method::Shannon => None,
        Method::A1 => Some(-delta.margin() / (2.0 * E)),
        Method::A2 | Method::Optimal => Some(-delta.margin() / 2.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodRate {
    pub method: Method,
    pub fit: RateFit,
    pub theoretical_exponent: Option<f64>,
    pub series: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatesReport {
    pub delta: Bandwidth,
    pub density_id: String,
    pub precision_bits: usize,
    /// Admissible range for the optimal method's slope, without slack.
    pub exponent_interval: (f64, f64),
    pub rates: Vec<MethodRate>,
}

/// Fitted exponential rates of the sup-rmse over `ns`.
pub fn rates_report(
    a: &Autocorrelation,
    methods: &[Method],
    ns: &[usize],
    grid: usize,
    p: &PrecisionConfig,
    range: FitRange,
) -> Result<RatesReport> {
    check_n_list(ns)?;
    if ns.len() < 4 {
        return Err(Error::InsufficientData(format!("rate fits need at least 4 sizes, got {}", ns.len())));
    }
    let rows = error_curves(a, methods, ns, grid, p)?;
    let mut rates = Vec::with_capacity(methods.len());
    for &m in methods {
        let series: Vec<(usize, f64)> = rows.iter().filter(|r| r.method == m).map(|r| (r.n, r.sup_rmse)).collect();
        let pts: Vec<(f64, f64)> = series.iter().map(|(n, e)| (*n as f64, *e)).collect();
        let fit = rate_fit(&pts, range).map_err(|e| e.context(format!("method {m}")))?;
        rates.push(MethodRate {
            method: m,
            fit,
            theoretical_exponent: theoretical_exponent(m, a.delta()),
            series,
        });
    }
    Ok(RatesReport {
        delta: a.delta(),
        density_id: a.density.id(),
        precision_bits: p.bits,
        exponent_interval: optimal_exponent_interval(a.delta(), 0.0),
        rates,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub method: Method,
    pub n: usize,
    pub t: f64,
    /// Quadratic-form MSE.
    pub mse: f64,
    /// `mse` plus the contribution of the covariance jitter.
    pub reference: f64,
    pub mean: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub trials: usize,
    pub jitter: f64,
    pub rows: Vec<SimRow>,
    pub passed: usize,
    pub total: usize,
    /// Every `|z| ≤ 3`.
    pub pass: bool,
}

/// Compare empirical and quadratic-form MSE of each weighted method.
/// Also returns the ensemble for each `n` so callers can dump it.
pub fn simulate_report(
    a: &Autocorrelation,
    methods: &[Method],
    ns: &[usize],
    grid: usize,
    cfg: &SimConfig,
) -> Result<(SimReport, Vec<PathEnsemble>)> {
    check_n_list(ns)?;
    check_grid(grid)?;
    let ts = default_grid(grid);
    let mut rows = Vec::new();
    let mut ensembles = Vec::with_capacity(ns.len());
    let mut jitter = 0.0;
    for &n in ns {
        let e = sample_paths(a, &ensemble_points(n, &ts), cfg).map_err(|e| e.context(format!("n {n}")))?;
        jitter = e.jitter;
        let ev = MseEvaluator::new(a, n)?;
        for &m in methods {
            let spec = WeightSpec::from_method(MethodSpec::new(m), a.delta()).ok_or_else(|| {
                Error::InvalidInput("the optimal method has no fixed weights to simulate".into())
            })?;
            for &t in &ts {
                let c = coefficients(&spec, n, t)?;
                let mse = ev.mse(&c).map_err(|e| e.context(format!("method {m}, n {n}, t {t}")))?;
                let reference = jittered_reference(mse, &c, e.jitter);
                let est = empirical_mse(&e, &c)?;
                rows.push(SimRow {
                    method: m,
                    n,
                    t,
                    mse,
                    reference,
                    mean: est.mean,
                    stderr: est.stderr,
                    z: z_score(&est, reference),
                });
            }
        }
        ensembles.push(e);
    }
    let passed = rows.iter().filter(|r| r.z.abs() <= 3.0).count();
    let total = rows.len();
    Ok((
        SimReport {
            seed: cfg.seed,
            trials: cfg.trials,
            jitter,
            rows,
            passed,
            total,
            pass: passed == total,
        },
        ensembles,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bw(num: i64, den: i64) -> Bandwidth {
        Bandwidth::pi_fraction(num, den).unwrap()
    }

    #[test]
    fn condnum_at_critical_rate_is_one() {
        let rows = condnum_table(&[bw(1, 1)], &[1, 2, 3, 4, 5, 6, 7, 8, 9], &PrecisionConfig::default()).unwrap();
        assert_eq!(rows.len(), 9);
        for r in &rows {
            assert!((r.kappa - 1.0).abs() < 1e-12, "{r:?}");
        }
        let csv = condnum_csv(&rows[..1]);
        assert_eq!(csv, "delta,n,kappa\npi,1,1.0\n");
    }

    #[test]
    fn rejects_bad_n_lists() {
        let p = PrecisionConfig::default();
        assert!(matches!(condnum_table(&[bw(1, 2)], &[], &p), Err(Error::InvalidInput(_))));
        assert!(condnum_table(&[bw(1, 2)], &[3, 2], &p).is_err());
        let a = Autocorrelation::new(normalized_flat(bw(1, 2)).unwrap());
        let r = rates_report(&a, &[Method::A2], &[2, 3, 4], 11, &p, FitRange::All);
        let err = r.unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
        assert!(err.is_numerical());
    }

    #[test]
    fn optimal_beats_weighted_rowwise() {
        let a = Autocorrelation::new(normalized_flat(bw(1, 2)).unwrap());
        let ns: Vec<usize> = (2..=8).collect();
        let rows = error_curves(&a, &[Method::Optimal, Method::A1, Method::A2], &ns, 21, &PrecisionConfig::default())
            .unwrap();
        for n in ns {
            let get = |m: Method| rows.iter().find(|r| r.method == m && r.n == n).unwrap().sup_rmse;
            let opt = get(Method::Optimal);
            assert!(opt <= get(Method::A1) && opt <= get(Method::A2), "n = {n}");
        }
        assert!(errors_csv(&rows).starts_with("method,n,sup_rmse,argmax_t\noptimal,2,"));
    }

    #[test]
    fn envelope_rows() {
        let a = Autocorrelation::new(normalized_flat(bw(1, 2)).unwrap());
        let rows = bound_envelope(&a, &[Method::Optimal], &[1, 2], 11, &PrecisionConfig::default()).unwrap();
        assert_eq!(rows.len(), 2 * (BoundTag::ALL.len() + 1));
        let rate = rows.iter().find(|r| r.tag == "thm32-rate").unwrap();
        assert_eq!(rate.value, None);
        let csv = envelope_csv(&rows);
        assert!(csv.lines().any(|l| l.starts_with("1,error-optimal,")));
        assert!(csv.lines().any(|l| l.starts_with("1,thm32-rate,,")));
    }

    #[test]
    fn simulate_is_reproducible() {
        let a = Autocorrelation::new(normalized_flat(bw(1, 2)).unwrap());
        let cfg = SimConfig::new(17, 500);
        let (x, _) = simulate_report(&a, &[Method::Shannon, Method::A2], &[3], 5, &cfg).unwrap();
        let (y, _) = simulate_report(&a, &[Method::Shannon, Method::A2], &[3], 5, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&x).unwrap(), serde_json::to_string(&y).unwrap());
        assert_eq!(x.total, 10);
        assert!(simulate_report(&a, &[Method::Optimal], &[3], 5, &cfg).is_err());
    }
}
