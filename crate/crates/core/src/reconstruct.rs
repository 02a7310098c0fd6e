//! Reconstruction coefficients, their mean-square errors and sup-error
//! scans over `t ∈ [0, 1]`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernelmat::{assemble, working_bits, SampleGrid};
use crate::linalg::Cholesky;
use crate::precision::{PrecisionConfig, XFloat};
use crate::spectra::Autocorrelation;
use crate::weights::{Method, ResolvedWeight, WeightSpec};

/// Working precision for re-evaluating a double-precision quadratic form
/// that cancels too deeply.
const RESCUE_BITS: usize = 128;

/// Coefficients `c_j(t)`, `j ∈ J_n`, of `X(t) ≈ Σ_j c_j X(j)`.
#[derive(Clone, Debug)]
pub struct CoefficientVector {
    pub t: f64,
    pub n: usize,
    /// Indexed like `J_n`: position `i` holds `c_{i−n+1}`.
    pub values: Vec<f64>,
    /// Full-precision values when the coefficients came from a solve.
    pub extended: Option<Vec<XFloat>>,
    pub method: String,
    pub order: Option<usize>,
    pub precision_bits: usize,
    /// `t` lies outside `[0, 1]`.
    pub extrapolated: bool,
}

impl CoefficientVector {
    pub fn zeros(n: usize, t: f64) -> Self {
        CoefficientVector {
            t,
            n,
            values: vec![0.0; 2 * n],
            extended: None,
            method: "zero".into(),
            order: None,
            precision_bits: 53,
            extrapolated: !(0.0..=1.0).contains(&t),
        }
    }

    /// Coefficients given directly, e.g. a perturbation of another vector.
    pub fn from_values(n: usize, t: f64, values: Vec<f64>, method: &str) -> Result<Self> {
        if values.len() != 2 * n {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficients for n = {n}, got {}",
                2 * n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        Ok(CoefficientVector {
            values,
            method: method.into(),
            ..Self::zeros(n, t)
        })
    }

    /// Sample index `j` of position `i`.
    pub fn sample(&self, i: usize) -> i64 {
        i as i64 - self.n as i64 + 1
    }
}

fn weighted_coefficients(rw: &ResolvedWeight, spec: &WeightSpec, n: usize, t: f64) -> CoefficientVector {
    let grid = SampleGrid::new(n).expect("n ≥ 1");
    CoefficientVector {
        values: grid.points().iter().map(|j| rw.value(t, *j)).collect(),
        method: spec.name().into(),
        order: rw.order(),
        ..CoefficientVector::zeros(n, t)
    }
}

/// `c_j = weight_value(spec, n, t, j)` for every `j ∈ J_n`.
pub fn coefficients(spec: &WeightSpec, n: usize, t: f64) -> Result<CoefficientVector> {
    SampleGrid::new(n)?;
    let rw = spec.resolve(n)?;
    Ok(weighted_coefficients(&rw, spec, n, t))
}

enum Factor {
    Native(Cholesky<f64>),
    Extended(Cholesky<XFloat>),
}

/// Solves for optimal coefficients at many `t` with one factorization of
/// `R_X[J_n]`.
pub struct OptimalReconstructor<'a> {
    a: &'a Autocorrelation,
    grid: SampleGrid,
    p: PrecisionConfig,
    bits: usize,
    factor: Factor,
    /// `R(0), R(1), …, R(2n−1)`.
    lags_x: Vec<XFloat>,
}

impl<'a> OptimalReconstructor<'a> {
    pub fn new(a: &'a Autocorrelation, n: usize, p: &PrecisionConfig) -> Result<Self> {
        let grid = SampleGrid::new(n)?;
        let g = assemble(a, &grid, p)?;
        let lags_x: Vec<XFloat> = (0..g.dim).map(|l| g.entry(0, l).clone()).collect();
        let factor = if p.uses_native() {
            let ch = Cholesky::factor(&g.to_f64(), g.dim).map_err(|e| Error::NotPositiveDefinite {
                bits: 53,
                context: format!("{}: pivot {} is {:e}", g.source, e.index, e.pivot),
            })?;
            Factor::Native(ch)
        } else {
            Factor::Extended(g.cholesky()?)
        };
        Ok(OptimalReconstructor {
            a,
            grid,
            p: *p,
            bits: working_bits(p),
            factor,
            lags_x,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    /// `b = (R(t − j))_{j ∈ J_n}`.
    fn rhs(&self, t: f64) -> Result<Vec<XFloat>> {
        self.grid
            .points()
            .iter()
            .map(|j| {
                let lag = t - *j as f64;
                if lag == lag.round() && (lag.abs() as usize) < self.lags_x.len() {
                    return Ok(self.lags_x[lag.abs() as usize].clone());
                }
                if self.p.uses_native() {
                    Ok(XFloat::from_f64(self.a.eval(lag)?, self.bits))
                } else {
                    self.a.eval_x(&lag_x(t, *j, self.bits), self.bits)
                }
            })
            .collect()
    }

    fn solve(&self, b: &[XFloat]) -> Vec<XFloat> {
        match &self.factor {
            Factor::Native(ch) => {
                let bf: Vec<f64> = b.iter().map(XFloat::to_f64).collect();
                ch.solve(&bf).into_iter().map(|v| XFloat::from_f64(v, self.bits)).collect()
            }
            Factor::Extended(ch) => ch.solve(b),
        }
    }

    pub fn coefficients(&self, t: f64) -> Result<CoefficientVector> {
        let b = self.rhs(t)?;
        let c = self.solve(&b);
        Ok(CoefficientVector {
            values: c.iter().map(XFloat::to_f64).collect(),
            extended: Some(c),
            method: Method::Optimal.name().into(),
            precision_bits: self.bits,
            ..CoefficientVector::zeros(self.n(), t)
        })
    }

    /// `R(0) − b A⁻¹ bᵀ`, before the square root.
    pub fn intrinsic_mse(&self, t: f64) -> Result<f64> {
        let b = self.rhs(t)?;
        let c = self.solve(&b);
        let mut q = self.lags_x[0].clone();
        for (bi, ci) in b.iter().zip(&c) {
            q = q - bi * ci;
        }
        clamp_mse(q.to_f64(), self.lags_x[0].to_f64())
    }

    /// Pointwise optimal root-mean-square error.
    pub fn intrinsic_error(&self, t: f64) -> Result<f64> {
        Ok(self.intrinsic_mse(t)?.sqrt())
    }

    /// `max_k |R(t−k) − Σ_j c_j R(j−k)|`.
    pub fn orthogonality_residual(&self, c: &CoefficientVector) -> Result<f64> {
        let b = self.rhs(c.t)?;
        let cx: Vec<XFloat> = match &c.extended {
            Some(v) => v.iter().map(|x| x.with_bits(self.bits)).collect(),
            None => c.values.iter().map(|v| XFloat::from_f64(*v, self.bits)).collect(),
        };
        let dim = cx.len();
        let mut worst = 0.0f64;
        for k in 0..dim {
            let mut s = b[k].clone();
            for (j, cj) in cx.iter().enumerate() {
                s = s - cj * &self.lags_x[j.abs_diff(k)];
            }
            worst = worst.max(s.abs().to_f64());
        }
        Ok(worst)
    }
}

/// `t − j` without the rounding of a double subtraction.
fn lag_x(t: f64, j: i64, bits: usize) -> XFloat {
    XFloat::from_f64(t, bits) - XFloat::from_i64(j, bits)
}

/// `c(t) = b A⁻¹` with `A = R_X[J_n]`, `b = (R(t − j))`.
pub fn optimal_coefficients(a: &Autocorrelation, n: usize, t: f64, p: &PrecisionConfig) -> Result<CoefficientVector> {
    OptimalReconstructor::new(a, n, p)?.coefficients(t)
}

/// `(R(0) − b A⁻¹ bᵀ)^{1/2}`.
pub fn intrinsic_error(a: &Autocorrelation, n: usize, t: f64, p: &PrecisionConfig) -> Result<f64> {
    OptimalReconstructor::new(a, n, p)?.intrinsic_error(t)
}

fn clamp_mse(value: f64, r0: f64) -> Result<f64> {
    let tolerance = 1e-12 * r0.abs();
    if value < -tolerance || value.is_nan() {
        return Err(Error::NegativeMse { value, tolerance });
    }
    Ok(value.max(0.0))
}

/// Evaluates the quadratic-form MSE for one autocorrelation and grid size,
/// caching the lag values.
pub struct MseEvaluator<'a> {
    a: &'a Autocorrelation,
    n: usize,
    lags: Vec<f64>,
    lags_x: std::sync::Mutex<Vec<(usize, Vec<XFloat>)>>,
}

impl<'a> MseEvaluator<'a> {
    pub fn new(a: &'a Autocorrelation, n: usize) -> Result<Self> {
        let lags = (0..2 * n).map(|l| a.eval(l as f64)).collect::<Result<_>>()?;
        Ok(MseEvaluator {
            a,
            n,
            lags,
            lags_x: std::sync::Mutex::new(Vec::new()),
        })
    }

    fn lags_at(&self, bits: usize) -> Result<Vec<XFloat>> {
        if let Some((_, v)) = self.lags_x.lock().unwrap().iter().find(|(b, _)| *b == bits) {
            return Ok(v.clone());
        }
        let v: Vec<XFloat> = (0..2 * self.n)
            .map(|l| self.a.eval_x(&XFloat::from_i64(l as i64, bits), bits))
            .collect::<Result<_>>()?;
        self.lags_x.lock().unwrap().push((bits, v.clone()));
        Ok(v)
    }

    /// `R(0) − 2 Σ c_j R(t−j) + Σ_{j,k} c_j c_k R(j−k)`.
    pub fn mse(&self, c: &CoefficientVector) -> Result<f64> {
        if c.n != self.n {
            return Err(Error::InvalidInput(format!(
                "coefficients for n = {} given to an evaluator for n = {}",
                c.n, self.n
            )));
        }
        let r0 = self.lags[0];
        if let Some(ext) = &c.extended {
            return self.mse_extended(c, ext, c.precision_bits.max(RESCUE_BITS));
        }
        let dim = 2 * self.n;
        let mut cross = 0.0;
        let mut cross_abs = 0.0;
        for i in 0..dim {
            let b = self.a.eval(c.t - c.sample(i) as f64)?;
            cross += c.values[i] * b;
            cross_abs += (c.values[i] * b).abs();
        }
        let mut quad = 0.0;
        let mut quad_abs = 0.0;
        for i in 0..dim {
            if c.values[i] == 0.0 {
                continue;
            }
            let mut row = 0.0;
            let mut row_abs = 0.0;
            for k in 0..dim {
                let v = c.values[k] * self.lags[i.abs_diff(k)];
                row += v;
                row_abs += v.abs();
            }
            quad += c.values[i] * row;
            quad_abs += (c.values[i]).abs() * row_abs;
        }
        let value = r0 - 2.0 * cross + quad;
        let roundoff = 4.0 * f64::EPSILON * dim as f64 * (r0.abs() + 2.0 * cross_abs + quad_abs);
        if value.abs() < 1e3 * roundoff {
            let ext: Vec<XFloat> = c.values.iter().map(|v| XFloat::from_f64(*v, RESCUE_BITS)).collect();
            return self.mse_extended(c, &ext, RESCUE_BITS);
        }
        clamp_mse(value, r0)
    }

    fn mse_extended(&self, c: &CoefficientVector, ext: &[XFloat], bits: usize) -> Result<f64> {
        let lags = self.lags_at(bits)?;
        let dim = 2 * self.n;
        let cx: Vec<XFloat> = ext.iter().map(|x| x.with_bits(bits)).collect();
        let mut value = lags[0].clone();
        let two = XFloat::from_f64(2.0, bits);
        for (i, ci) in cx.iter().enumerate() {
            let lag = c.t - c.sample(i) as f64;
            let b = if lag == lag.round() && (lag.abs() as usize) < dim {
                lags[lag.abs() as usize].clone()
            } else {
                self.a.eval_x(&lag_x(c.t, c.sample(i), bits), bits)?
            };
            value = value - &two * ci * b;
        }
        for (i, ci) in cx.iter().enumerate() {
            if ci.is_zero() {
                continue;
            }
            let mut row = XFloat::zero(bits);
            for (k, ck) in cx.iter().enumerate() {
                row += &(ck * &lags[i.abs_diff(k)]);
            }
            value = value + ci * row;
        }
        clamp_mse(value.to_f64(), self.lags[0])
    }
}

/// Quadratic-form mean-square error of `c` for the process with
/// autocorrelation `a`.
pub fn mse(a: &Autocorrelation, c: &CoefficientVector) -> Result<f64> {
    MseEvaluator::new(a, c.n)?.mse(c)
}

/// A reconstruction method with everything needed to produce coefficients.
#[derive(Clone, Debug, PartialEq)]
pub enum ReconMethod {
    Weighted(WeightSpec),
    Optimal,
}

impl ReconMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ReconMethod::Weighted(w) => w.name(),
            ReconMethod::Optimal => Method::Optimal.name(),
        }
    }
}

/// `{10⁻⁶, 1/(G−1), …, 1 − 10⁻⁶}`.
pub fn default_grid(points: usize) -> Vec<f64> {
    let g = points.max(2);
    (0..g)
        .map(|i| {
            if i == 0 {
                1e-6
            } else if i == g - 1 {
                1.0 - 1e-6
            } else {
                i as f64 / (g - 1) as f64
            }
        })
        .collect()
}

/// Pointwise errors over a `t`-grid and their maximum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorReport {
    pub points: Vec<(f64, f64)>,
    pub sup_rmse: f64,
    pub argmax_t: f64,
    pub method: String,
    pub order: Option<usize>,
    pub n: usize,
    pub delta: String,
    pub density_id: String,
    pub precision_bits: usize,
    pub below_threshold: bool,
}

impl ErrorReport {
    pub const CSV_HEADER: &'static str = "t,rmse,method,n,delta,density-id,precision-bits";

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", Self::CSV_HEADER);
        self.write_csv_rows(&mut out);
        out
    }

    pub fn write_csv_rows(&self, out: &mut String) {
        for (t, e) in &self.points {
            let _ = writeln!(
                out,
                "{t:?},{e:?},{},{},{},\"{}\",{}",
                self.method, self.n, self.delta, self.density_id, self.precision_bits
            );
        }
    }
}

/// Root-mean-square error of `method` at every grid point.
pub fn sup_error_scan(
    method: &ReconMethod,
    a: &Autocorrelation,
    n: usize,
    grid: &[f64],
    p: &PrecisionConfig,
) -> Result<ErrorReport> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("t-grid must be nonempty".into()));
    }
    let (rmse, order, bits, below): (Vec<f64>, Option<usize>, usize, bool) = match method {
        ReconMethod::Optimal => {
            let rec = OptimalReconstructor::new(a, n, p)?;
            let v = grid
                .par_iter()
                .map(|t| rec.intrinsic_error(*t))
                .collect::<Result<Vec<_>>>()?;
            (v, None, rec.bits, false)
        }
        ReconMethod::Weighted(spec) => {
            SampleGrid::new(n)?;
            let rw = spec.resolve(n)?;
            let ev = MseEvaluator::new(a, n)?;
            let v = grid
                .par_iter()
                .map(|t| ev.mse(&weighted_coefficients(&rw, spec, n, *t)).map(f64::sqrt))
                .collect::<Result<Vec<_>>>()?;
            (v, rw.order(), 53, rw.below_threshold())
        }
    };
    let (mut argmax, mut sup) = (grid[0], rmse[0]);
    for (t, e) in grid.iter().zip(&rmse) {
        if *e > sup {
            sup = *e;
            argmax = *t;
        }
    }
    Ok(ErrorReport {
        points: grid.iter().copied().zip(rmse).collect(),
        sup_rmse: sup,
        argmax_t: argmax,
        method: method.name().into(),
        order,
        n,
        delta: a.delta().to_string(),
        density_id: a.density.id(),
        precision_bits: bits,
        below_threshold: below,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{normalize_unit_ball, Bandwidth, SpectralDensity};
    use crate::weights::sinc;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn bw(num: i64, den: i64) -> Bandwidth {
        Bandwidth::pi_fraction(num, den).unwrap()
    }

    fn unit_flat(delta: Bandwidth) -> Autocorrelation {
        let d = SpectralDensity::flat(delta, 1.0).unwrap();
        Autocorrelation::new(normalize_unit_ball(&d).unwrap())
    }

    #[test]
    fn non_dyadic_t_matches_reference() {
        // 80-digit LU solve of the same system
        let a = unit_flat(bw(1, 2));
        let rec = OptimalReconstructor::new(&a, 11, &PrecisionConfig::default()).unwrap();
        let e = rec.intrinsic_error(0.41).unwrap();
        assert!((e / 6.10026e-10 - 1.0).abs() < 1e-5, "{e:e}");
    }

    #[test]
    fn weighted_coefficient_examples() {
        let d = bw(1, 2);
        let c = coefficients(&WeightSpec::spline(d), 3, 1.0).unwrap();
        for (i, v) in c.values.iter().enumerate() {
            let want = if c.sample(i) == 1 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-15);
        }
        let s = coefficients(&WeightSpec::plain_sinc(d), 1, 0.5).unwrap();
        assert!((s.values[0] - sinc(0.5)).abs() < 1e-16);
        assert!((s.values[1] - sinc(-0.5)).abs() < 1e-16);
        // samples are j = 0, 1: sinc(0.5) and sinc(−0.5) are both 2/π
        assert!((s.values[0] - 2.0 / PI).abs() < 1e-16);
        assert!(coefficients(&WeightSpec::plain_sinc(d), 0, 0.5).is_err());
        let ex = coefficients(&WeightSpec::plain_sinc(d), 2, 1.5).unwrap();
        assert!(ex.extrapolated);
    }

    #[test]
    fn optimal_examples() {
        let p = PrecisionConfig::default();
        let a = Autocorrelation::new(SpectralDensity::kernel_density(bw(1, 2)));
        let c0 = optimal_coefficients(&a, 3, 0.0, &p).unwrap();
        for (i, v) in c0.values.iter().enumerate() {
            let want = if c0.sample(i) == 0 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-30);
        }

        let c = optimal_coefficients(&a, 1, 0.5, &p).unwrap();
        let want = (2f64.sqrt() / PI) / (0.5 + 1.0 / PI);
        assert!((c.values[0] - want).abs() < 1e-15 && (c.values[1] - want).abs() < 1e-15);
        assert!((want - 0.550107).abs() < 1e-6);

        let crit = Autocorrelation::new(SpectralDensity::kernel_density(bw(1, 1)));
        let cc = optimal_coefficients(&crit, 3, 0.37, &p).unwrap();
        for (i, v) in cc.values.iter().enumerate() {
            assert!((v - sinc(0.37 - cc.sample(i) as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn mse_examples() {
        let p = PrecisionConfig::default();
        let a = unit_flat(bw(1, 2));
        let r0 = a.eval(0.0).unwrap();
        assert_eq!(mse(&a, &CoefficientVector::zeros(2, 0.4)).unwrap(), r0);

        let rec = OptimalReconstructor::new(&a, 3, &p).unwrap();
        assert!(mse(&a, &rec.coefficients(2.0).unwrap()).unwrap() < 1e-60);

        // n = 1, t = 0.5: rank form R(0) − bA⁻¹bᵀ by hand
        let rec1 = OptimalReconstructor::new(&a, 1, &p).unwrap();
        let c = rec1.coefficients(0.5).unwrap();
        let (r1, rh) = (a.eval(1.0).unwrap(), a.eval(0.5).unwrap());
        let rank = r0 - 2.0 * rh * rh / (r0 + r1);
        let q = mse(&a, &c).unwrap();
        assert!((q - rank).abs() < 1e-15, "{q} vs {rank}");
        assert!((rec1.intrinsic_mse(0.5).unwrap() - rank).abs() < 1e-15);
    }

    #[test]
    fn intrinsic_error_examples() {
        let p = PrecisionConfig::default();
        let a = unit_flat(bw(1, 2));
        assert!(intrinsic_error(&a, 4, 1.0, &p).unwrap() < 1e-30);

        let crit = Autocorrelation::new(SpectralDensity::kernel_density(bw(1, 1)));
        let mut prev = f64::INFINITY;
        for n in [1, 4, 16, 64] {
            let e = intrinsic_error(&crit, n, 0.5, &p).unwrap();
            let direct: f64 = (1.0
                - SampleGrid::new(n)
                    .unwrap()
                    .points()
                    .iter()
                    .map(|j| sinc(0.5 - *j as f64).powi(2))
                    .sum::<f64>())
            .sqrt();
            assert!((e - direct).abs() < 1e-12, "n={n}: {e} vs {direct}");
            assert!(e < prev && e > 0.0);
            prev = e;
        }
    }

    #[test]
    fn two_routes_agree() {
        let p = PrecisionConfig::default();
        let a = unit_flat(bw(1, 2));
        for n in [2, 5, 9] {
            let rec = OptimalReconstructor::new(&a, n, &p).unwrap();
            let ev = MseEvaluator::new(&a, n).unwrap();
            for t in [0.13, 0.5, 0.77] {
                let c = rec.coefficients(t).unwrap();
                let quad = ev.mse(&c).unwrap().sqrt();
                let rank = rec.intrinsic_error(t).unwrap();
                assert!((quad / rank - 1.0).abs() < 1e-10, "n={n} t={t}: {quad} vs {rank}");
                assert!(rec.orthogonality_residual(&c).unwrap() <= 1e-15 * a.eval(0.0).unwrap());
            }
        }
    }

    #[test]
    fn exact_at_samples_for_every_method() {
        let p = PrecisionConfig::default();
        let d = bw(1, 2);
        let a = unit_flat(d);
        let grid = [0.0, 1.0];
        for m in [
            ReconMethod::Optimal,
            ReconMethod::Weighted(WeightSpec::plain_sinc(d)),
            ReconMethod::Weighted(WeightSpec::jagerman(d)),
            ReconMethod::Weighted(WeightSpec::spline(d)),
        ] {
            let r = sup_error_scan(&m, &a, 3, &grid, &p).unwrap();
            assert!(r.sup_rmse < 1e-15, "{}: {}", m.name(), r.sup_rmse);
        }
    }

    #[test]
    fn optimal_profile_symmetric() {
        let p = PrecisionConfig::default();
        let a = unit_flat(bw(1, 2));
        let grid = default_grid(21);
        let r = sup_error_scan(&ReconMethod::Optimal, &a, 4, &grid, &p).unwrap();
        let v: Vec<f64> = r.points.iter().map(|(_, e)| *e).collect();
        for i in 0..v.len() {
            assert!((v[i] - v[v.len() - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn intrinsic_sup_nonincreasing() {
        let p = PrecisionConfig::default();
        let a = unit_flat(bw(1, 2));
        let grid = default_grid(41);
        let mut prev = f64::INFINITY;
        for n in 1..=10 {
            let s = sup_error_scan(&ReconMethod::Optimal, &a, n, &grid, &p).unwrap().sup_rmse;
            assert!(s <= prev, "n={n}: {s} > {prev}");
            prev = s;
        }
    }

    #[test]
    fn grid_refinement_stable() {
        let p = PrecisionConfig::default();
        let a = unit_flat(bw(1, 2));
        let coarse = sup_error_scan(&ReconMethod::Optimal, &a, 5, &default_grid(101), &p).unwrap();
        let fine = sup_error_scan(&ReconMethod::Optimal, &a, 5, &default_grid(201), &p).unwrap();
        assert!((fine.sup_rmse / coarse.sup_rmse - 1.0).abs() < 0.01);
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid(101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[100], 1.0 - 1e-6);
        assert!((g[1] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn negative_mse_detected() {
        assert!(matches!(clamp_mse(-1e-3, 1.0), Err(Error::NegativeMse { .. })));
        assert_eq!(clamp_mse(-1e-14, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn csv_layout() {
        let p = PrecisionConfig::default();
        let a = unit_flat(bw(1, 2));
        let r = sup_error_scan(&ReconMethod::Optimal, &a, 2, &[0.25, 0.5], &p).unwrap();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), ErrorReport::CSV_HEADER);
        assert_eq!(lines.count(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn optimal_beats_alternatives(
            n in 1usize..7,
            t in 0.0f64..1.0,
            num in 1i64..4,
            noise in proptest::collection::vec(-1.0f64..1.0, 12),
            scale in 1e-6f64..1e-1,
        ) {
            let p = PrecisionConfig::default();
            let d = bw(num, 4);
            let a = unit_flat(d);
            let r0 = a.eval(0.0).unwrap();
            let rec = OptimalReconstructor::new(&a, n, &p).unwrap();
            let ev = MseEvaluator::new(&a, n).unwrap();
            let opt = rec.coefficients(t).unwrap();
            let best = ev.mse(&opt).unwrap();
            let perturbed: Vec<f64> = opt.values.iter().zip(&noise).map(|(c, z)| c + scale * z).collect();
            let alt = CoefficientVector::from_values(n, t, perturbed, "perturbed").unwrap();
            prop_assert!(best <= ev.mse(&alt).unwrap() + 1e-12 * r0);
            for spec in [WeightSpec::plain_sinc(d), WeightSpec::jagerman(d), WeightSpec::spline(d)] {
                let c = coefficients(&spec, n, t).unwrap();
                prop_assert!(best <= ev.mse(&c).unwrap() + 1e-12 * r0);
            }
        }
    }
}
