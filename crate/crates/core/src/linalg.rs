//! Dense symmetric linear algebra over any [`Real`] scalar.
//!
//! Sizes here are tiny (at most a few dozen rows), so the routines favour
//! plain loops over blocking.

use crate::precision::Real;

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`, row-major.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    dim: usize,
    l: Vec<T>,
}

/// Failure to factor: index and value of the first nonpositive pivot.
#[derive(Clone, Debug)]
pub struct PivotFailure {
    pub index: usize,
    pub pivot: f64,
}

impl<T: Real> Cholesky<T> {
    pub fn factor(a: &[T], dim: usize) -> Result<Self, PivotFailure> {
        assert_eq!(a.len(), dim * dim, "matrix storage does not match dimension");
        let zero = a[0].lift(0.0);
        let mut l = vec![zero.clone(); dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut s = a[i * dim + j].clone();
                for k in 0..j {
                    s = s - l[i * dim + k].clone() * l[j * dim + k].clone();
                }
                if i == j {
                    if !(s > zero) {
                        return Err(PivotFailure {
                            index: i,
                            pivot: s.to_f64(),
                        });
                    }
                    l[i * dim + i] = s.sqrt();
                } else {
                    l[i * dim + j] = s / l[j * dim + j].clone();
                }
            }
        }
        Ok(Cholesky { dim, l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factor_entry(&self, i: usize, j: usize) -> &T {
        &self.l[i * self.dim + j]
    }

    /// Solve `L y = b`.
    pub fn forward(&self, b: &[T]) -> Vec<T> {
        let n = self.dim;
        let mut y: Vec<T> = Vec::with_capacity(n);
        for i in 0..n {
            let mut s = b[i].clone();
            for (k, yk) in y.iter().enumerate() {
                s = s - self.l[i * n + k].clone() * yk.clone();
            }
            y.push(s / self.l[i * n + i].clone());
        }
        y
    }

    /// Solve `Lᵀ x = y`.
    pub fn backward(&self, y: &[T]) -> Vec<T> {
        let n = self.dim;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i].clone();
            for k in i + 1..n {
                s = s - self.l[k * n + i].clone() * x[k].clone();
            }
            x[i] = s / self.l[i * n + i].clone();
        }
        x
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.dim, "right-hand side length mismatch");
        self.backward(&self.forward(b))
    }

    /// Compute `L z` (used to colour white noise).
    pub fn apply_lower(&self, z: &[T]) -> Vec<T> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let mut s = z[0].lift(0.0);
                for k in 0..=i {
                    s = s + self.l[i * n + k].clone() * z[k].clone();
                }
                s
            })
            .collect()
    }
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi rotation method,
/// returned in ascending order.
pub fn jacobi_eigenvalues<T: Real>(a: &[T], dim: usize) -> Vec<T> {
    assert_eq!(a.len(), dim * dim, "matrix storage does not match dimension");
    let mut m = a.to_vec();
    if dim == 0 {
        return Vec::new();
    }
    let zero = m[0].lift(0.0);
    let one = m[0].lift(1.0);
    let eps = m[0].unit_roundoff();

    let eps_t = one.lift(eps);

    for _sweep in 0..200 {
        let mut rotated = false;
        for p in 0..dim {
            for q in p + 1..dim {
                let apq = m[p * dim + q].clone();
                // skip entries already negligible relative to their diagonal pair
                let scale = (m[p * dim + p].clone() * m[q * dim + q].clone()).abs().sqrt();
                if apq.abs() <= eps_t.clone() * scale {
                    continue;
                }
                rotated = true;
                let app = m[p * dim + p].clone();
                let aqq = m[q * dim + q].clone();
                // Rutishauser's stable rotation
                let theta = (aqq.clone() - app.clone()) / (apq.clone() * one.lift(2.0));
                let denom = theta.abs() + (theta.clone() * theta.clone() + one.clone()).sqrt();
                let mut t = one.clone() / denom;
                if theta < zero {
                    t = -t;
                }
                let c = one.clone() / (t.clone() * t.clone() + one.clone()).sqrt();
                let s = t.clone() * c.clone();
                let tau = s.clone() / (one.clone() + c.clone());

                m[p * dim + p] = app - t.clone() * apq.clone();
                m[q * dim + q] = aqq + t.clone() * apq;
                m[p * dim + q] = zero.clone();
                m[q * dim + p] = zero.clone();
                for r in 0..dim {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = m[r * dim + p].clone();
                    let arq = m[r * dim + q].clone();
                    let new_rp = arp.clone() - s.clone() * (arq.clone() + tau.clone() * arp.clone());
                    let new_rq = arq.clone() + s.clone() * (arp - tau.clone() * arq);
                    m[r * dim + p] = new_rp.clone();
                    m[p * dim + r] = new_rp;
                    m[r * dim + q] = new_rq.clone();
                    m[q * dim + r] = new_rq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut eig: Vec<T> = (0..dim).map(|i| m[i * dim + i].clone()).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    eig
}

/// `y = A x` for a square row-major matrix.
pub fn matvec<T: Real>(a: &[T], dim: usize, x: &[T]) -> Vec<T> {
    (0..dim)
        .map(|i| {
            let mut s = x[0].lift(0.0);
            for j in 0..dim {
                s = s + a[i * dim + j].clone() * x[j].clone();
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::XFloat;

    fn hilbert(n: usize) -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 1.0 / (i + j + 1) as f64;
            }
        }
        a
    }

    #[test]
    fn cholesky_solves_small_system() {
        let a = vec![4.0, 2.0, 2.0, 3.0];
        let ch = Cholesky::factor(&a, 2).unwrap();
        let x = ch.solve(&[2.0, 1.0]);
        // exact: x = (0.5, 0)
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = vec![1.0, 2.0, 2.0, 1.0];
        let err = Cholesky::factor(&a, 2).unwrap_err();
        assert_eq!(err.index, 1);
        assert!(err.pivot < 0.0);
    }

    #[test]
    fn jacobi_matches_closed_form_2x2() {
        let a = vec![2.0, 1.0, 1.0, 2.0];
        let ev = jacobi_eigenvalues(&a, 2);
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_extended_hilbert_condition() {
        // cond_2(H_6) = 1.495105864e7 (known value)
        let h: Vec<XFloat> = hilbert(6).iter().map(|_| XFloat::zero(256)).collect();
        let mut h = h;
        for i in 0..6 {
            for j in 0..6 {
                h[i * 6 + j] = XFloat::one(256) / XFloat::from_i64((i + j + 1) as i64, 256);
            }
        }
        let ev = jacobi_eigenvalues(&h, 6);
        let kappa = (ev[5].clone() / ev[0].clone()).to_f64();
        assert!((kappa / 1.495105864e7 - 1.0).abs() < 1e-9, "kappa = {kappa}");
        let trace: f64 = ev.iter().map(|e| e.to_f64()).sum();
        let exact_trace: f64 = (0..6).map(|i| 1.0 / (2 * i + 1) as f64).sum();
        assert!((trace - exact_trace).abs() < 1e-14);
    }
}
