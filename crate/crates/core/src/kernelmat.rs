//! Gram matrices of stationary kernels on the integer sample grid, their
//! condition numbers and positive-definite solves.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigenvalues, Cholesky};
use crate::precision::{PrecisionConfig, XFloat};
use crate::spectra::{sin_over, Autocorrelation, Bandwidth};

/// The integers `J_n = {-n+1, …, n}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleGrid {
    n: usize,
    points: Vec<i64>,
}

impl SampleGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("grid half-size n must be at least 1".into()));
        }
        let n_i = n as i64;
        Ok(SampleGrid {
            n,
            points: (-n_i + 1..=n_i).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[i64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Position of sample `j`, if it lies on the grid.
    pub fn index_of(&self, j: i64) -> Option<usize> {
        let first = self.points[0];
        (j >= first && j < first + self.points.len() as i64).then(|| (j - first) as usize)
    }
}

/// A translation-invariant kernel `K(x, y) = k(x − y)`.
pub trait LagKernel: Sync {
    fn at(&self, lag: f64) -> Result<f64>;
    fn at_x(&self, lag: &XFloat, bits: usize) -> Result<XFloat>;
    fn describe(&self) -> String;
}

/// The Paley–Wiener reproducing kernel `sin(δ(x−y)) / (π(x−y))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kd {
    pub delta: Bandwidth,
}

/// `sin(δ(x−y)) / (π(x−y))`, equal to `δ/π` on the diagonal.
pub fn kd_kernel(delta: f64, x: f64, y: f64) -> f64 {
    delta / PI * sin_over(delta * (x - y))
}

pub fn kd_kernel_x(delta: &XFloat, lag: &XFloat) -> XFloat {
    let bits = delta.bits().max(lag.bits());
    let pi = XFloat::pi(bits);
    if lag.is_zero() {
        delta / &pi
    } else {
        (delta * lag).sin() / (pi * lag)
    }
}

impl LagKernel for Kd {
    fn at(&self, lag: f64) -> Result<f64> {
        Ok(kd_kernel(self.delta.value(), lag, 0.0))
    }

    fn at_x(&self, lag: &XFloat, bits: usize) -> Result<XFloat> {
        Ok(kd_kernel_x(&self.delta.to_x(bits), &lag.with_bits(bits)))
    }

    fn describe(&self) -> String {
        format!("K_delta(delta={})", self.delta)
    }
}

impl LagKernel for Autocorrelation {
    fn at(&self, lag: f64) -> Result<f64> {
        self.eval(lag)
    }

    fn at_x(&self, lag: &XFloat, bits: usize) -> Result<XFloat> {
        self.eval_x(lag, bits)
    }

    fn describe(&self) -> String {
        format!("R_X[{}]", self.density.id())
    }
}

/// Dense symmetric matrix `[K(p_i, p_j)]`, stored row-major.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub dim: usize,
    pub entries: Vec<XFloat>,
    pub bits: usize,
    pub source: String,
}

impl GramMatrix {
    pub fn entry(&self, i: usize, j: usize) -> &XFloat {
        &self.entries[i * self.dim + j]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(XFloat::to_f64).collect()
    }

    /// Row-major CSV with full-precision decimal entries.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim).map(|j| self.entry(i, j).to_decimal_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn cholesky(&self) -> Result<Cholesky<XFloat>> {
        Cholesky::factor(&self.entries, self.dim).map_err(|e| Error::NotPositiveDefinite {
            bits: self.bits,
            context: format!("{}: pivot {} is {:e}", self.source, e.index, e.pivot),
        })
    }
}

/// Working precision actually used for a config: native requests still
/// carry a 64-bit software representation.
pub fn working_bits(p: &PrecisionConfig) -> usize {
    if p.uses_native() {
        64
    } else {
        p.bits
    }
}

/// `[k(p_i − p_j)]` on the grid; one kernel evaluation per distinct lag.
pub fn assemble<K: LagKernel + ?Sized>(kernel: &K, grid: &SampleGrid, p: &PrecisionConfig) -> Result<GramMatrix> {
    let dim = grid.len();
    let bits = working_bits(p);
    let lags: Vec<XFloat> = (0..dim)
        .map(|l| {
            if p.uses_native() {
                kernel.at(l as f64).map(|v| XFloat::from_f64(v, bits))
            } else {
                kernel.at_x(&XFloat::from_i64(l as i64, bits), bits)
            }
        })
        .collect::<Result<_>>()?;
    let mut entries = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            entries.push(lags[i.abs_diff(j)].clone());
        }
    }
    Ok(GramMatrix {
        dim,
        entries,
        bits,
        source: format!("{} on J_{}", kernel.describe(), grid.n()),
    })
}

/// Spectral condition number `λ_max / λ_min`.
pub fn condition_number(g: &GramMatrix, p: &PrecisionConfig) -> Result<f64> {
    let (lo, hi) = if p.uses_native() {
        let ev = jacobi_eigenvalues(&g.to_f64(), g.dim);
        (ev[0], ev[g.dim - 1])
    } else {
        let a: Vec<XFloat> = g.entries.iter().map(|x| x.with_bits(p.bits)).collect();
        let ev = jacobi_eigenvalues(&a, g.dim);
        let lo = &ev[0];
        if lo.is_zero() || lo.is_sign_negative() {
            return Err(Error::NotPositiveDefinite {
                bits: p.bits,
                context: format!("{}: smallest eigenvalue {:e}", g.source, lo.to_f64()),
            });
        }
        return Ok((&ev[g.dim - 1] / lo).to_f64());
    };
    if !(lo > 0.0) {
        return Err(Error::NotPositiveDefinite {
            bits: 53,
            context: format!("{}: smallest eigenvalue {lo:e}", g.source),
        });
    }
    Ok(hi / lo)
}

/// Solve `g x = rhs` by Cholesky at `p.bits`.
pub fn solve_spd(g: &GramMatrix, rhs: &[XFloat], p: &PrecisionConfig) -> Result<Vec<XFloat>> {
    if rhs.len() != g.dim {
        return Err(Error::InvalidInput(format!(
            "right-hand side has length {}, matrix has dimension {}",
            rhs.len(),
            g.dim
        )));
    }
    if p.uses_native() {
        let a = g.to_f64();
        let ch = Cholesky::factor(&a, g.dim).map_err(|e| Error::NotPositiveDefinite {
            bits: 53,
            context: format!("{}: pivot {} is {:e}", g.source, e.index, e.pivot),
        })?;
        let b: Vec<f64> = rhs.iter().map(XFloat::to_f64).collect();
        return Ok(ch.solve(&b).into_iter().map(|v| XFloat::from_f64(v, 64)).collect());
    }
    let g = if g.bits == p.bits {
        g.clone()
    } else {
        GramMatrix {
            entries: g.entries.iter().map(|x| x.with_bits(p.bits)).collect(),
            bits: p.bits,
            ..g.clone()
        }
    };
    let b: Vec<XFloat> = rhs.iter().map(|x| x.with_bits(p.bits)).collect();
    Ok(g.cholesky()?.solve(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matvec;
    use crate::spectra::SpectralDensity;

    fn bw(num: i64, den: i64) -> Bandwidth {
        Bandwidth::pi_fraction(num, den).unwrap()
    }

    fn gram(delta: Bandwidth, n: usize, bits: usize) -> GramMatrix {
        let p = PrecisionConfig::new(bits).unwrap();
        assemble(&Kd { delta }, &SampleGrid::new(n).unwrap(), &p).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = SampleGrid::new(3).unwrap();
        assert_eq!(g.points(), &[-2, -1, 0, 1, 2, 3]);
        assert_eq!(g.index_of(0), Some(2));
        assert_eq!(g.index_of(4), None);
        assert!(SampleGrid::new(0).is_err());
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kd_kernel(PI, 0.0, 0.0), 1.0);
        assert!(kd_kernel(PI, 3.0, 0.0).abs() < 1e-16);
        assert!((kd_kernel(PI / 2.0, 1.0, 0.0) - std::f64::consts::FRAC_1_PI).abs() < 1e-7);
        // across the Taylor switch
        let d: f64 = 1.3;
        for h in [1e-7, 9.99e-7 / d, 1.01e-6 / d, 1e-5] {
            let exact = (d * h).sin() / (PI * h);
            assert!((kd_kernel(d, h, 0.0) - exact).abs() < 1e-15);
        }
        let x = kd_kernel_x(&bw(1, 2).to_x(256), &XFloat::one(256));
        assert!((x.to_f64() - 1.0 / PI).abs() < 1e-16);
    }

    #[test]
    fn assemble_examples() {
        let id = gram(bw(1, 1), 4, 128);
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id.entry(i, j).to_f64() - want).abs() < 1e-30);
            }
        }
        let g = gram(bw(1, 2), 1, 128).to_f64();
        let expect = [0.5, 1.0 / PI, 1.0 / PI, 0.5];
        for (a, b) in g.iter().zip(expect) {
            assert!((a - b).abs() < 1e-16);
        }
        let r = Autocorrelation::new(SpectralDensity::kernel_density(bw(1, 2)));
        let p = PrecisionConfig::default();
        let gr = assemble(&r, &SampleGrid::new(1).unwrap(), &p).unwrap().to_f64();
        for (a, b) in gr.iter().zip(expect) {
            assert!((a - b).abs() < 1e-16);
        }
    }

    #[test]
    fn toeplitz_and_symmetry() {
        let g = gram(bw(1, 3), 5, 128);
        for i in 0..g.dim {
            for j in 0..g.dim {
                assert_eq!(g.entry(i, j), g.entry(j, i));
                if i > 0 && j > 0 {
                    assert_eq!(g.entry(i, j), g.entry(i - 1, j - 1));
                }
            }
        }
    }

    #[test]
    fn condition_number_small_cases() {
        let p = PrecisionConfig::default();
        let k = condition_number(&gram(bw(1, 2), 1, 256), &p).unwrap();
        let exact = (0.5 + 1.0 / PI) / (0.5 - 1.0 / PI);
        assert!((k - exact).abs() < 1e-12);
        assert!((k - 4.50).abs() / 4.50 < 0.01);
        let k34 = condition_number(&gram(bw(3, 4), 1, 256), &p).unwrap();
        assert!((k34 - 1.86).abs() / 1.86 < 0.01);
        for n in 1..=9 {
            let k = condition_number(&gram(bw(1, 1), n, 256), &p).unwrap();
            assert!((k - 1.0).abs() < 1e-30);
        }
    }

    #[test]
    fn precision_ladder() {
        let ks: Vec<f64> = [128, 256, 512]
            .iter()
            .map(|b| condition_number(&gram(bw(1, 2), 5, *b), &PrecisionConfig::new(*b).unwrap()).unwrap())
            .collect();
        assert!((ks[0] / ks[2] - 1.0).abs() < 1e-6);
        assert!((ks[1] / ks[2] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn condition_number_grows_with_n() {
        let p = PrecisionConfig::default();
        for delta in [bw(1, 3), bw(1, 2), bw(3, 4)] {
            let mut prev = 0.0;
            for n in 1..=9 {
                let k = condition_number(&gram(delta, n, 256), &p).unwrap();
                assert!(k >= prev, "δ={delta}, n={n}: {k} < {prev}");
                prev = k;
            }
        }
    }

    #[test]
    fn solve_examples() {
        let p = PrecisionConfig::default();
        let g = gram(bw(1, 2), 1, 256);
        let rhs = [XFloat::one(256), XFloat::zero(256)];
        let x = solve_spd(&g, &rhs, &p).unwrap();
        let det = 0.25 - 1.0 / (PI * PI);
        assert!((x[0].to_f64() - 0.5 / det).abs() < 1e-13);
        assert!((x[1].to_f64() + (1.0 / PI) / det).abs() < 1e-13);
        assert!((x[0].to_f64() - 3.362954).abs() < 1e-6);
        assert!((x[1].to_f64() + 2.140923).abs() < 1e-6);

        let id = gram(bw(1, 1), 2, 256);
        let v: Vec<XFloat> = [1.5, -2.0, 0.25, 7.0].iter().map(|x| XFloat::from_f64(*x, 256)).collect();
        let y = solve_spd(&id, &v, &p).unwrap();
        for (a, b) in y.iter().zip(&v) {
            assert!((a - b).abs().to_f64() < 1e-60);
        }

        let singular = GramMatrix {
            dim: 2,
            entries: [1.0, 1.0, 1.0, 1.0].iter().map(|x| XFloat::from_f64(*x, 256)).collect(),
            bits: 256,
            source: "ones".into(),
        };
        assert!(matches!(
            solve_spd(&singular, &rhs, &p),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            condition_number(&singular, &p),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn solve_residual_small() {
        let p = PrecisionConfig::default();
        for n in [4, 8, 12] {
            let g = gram(bw(1, 3), n, 256);
            let rhs: Vec<XFloat> = (0..g.dim).map(|i| XFloat::from_f64(1.0 + i as f64 * 0.1, 256)).collect();
            let x = solve_spd(&g, &rhs, &p).unwrap();
            let r = matvec(&g.entries, g.dim, &x);
            let worst = r
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b).abs().to_f64())
                .fold(0.0, f64::max);
            assert!(worst <= 1e-20 * 2.1, "n={n}: residual {worst:e}");
        }
    }

    #[test]
    fn native_fallback_runs() {
        let p = PrecisionConfig::native();
        let g = gram(bw(1, 2), 1, 64);
        let k = condition_number(&g, &p).unwrap();
        assert!((k - (0.5 + 1.0 / PI) / (0.5 - 1.0 / PI)).abs() < 1e-12);
    }

    #[test]
    fn csv_export() {
        let csv = gram(bw(1, 2), 1, 128).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        let first: f64 = lines[0].split(',').next().unwrap().parse().unwrap();
        assert_eq!(first, 0.5);
    }
}
