//! Dense complex linear algebra helpers: matrix exponential, LU solves with
//! refinement and a 1-norm condition estimate, and the nonsymmetric
//! eigenvalue solve (delegated to `faer`).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn cvec_zeros(n: usize) -> CVec {
    CVec::from_element(n, ZERO)
}

pub fn sup_norm(v: &CVec) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn norm1(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn norm_inf(a: &CMat) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// [6/6] Padé coefficients of the exponential.
const PADE6: [f64; 7] = [
    1.0,
    0.5,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

/// Matrix exponential by scaling and squaring with a [6/6] Padé approximant.
///
/// The matrix is scaled until its 1-norm is at most 1/2, where the Padé
/// truncation error is below 1e-16 relative.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    let nrm = norm1(a);
    let mut squarings = 0u32;
    if nrm > 0.5 {
        squarings = (nrm / 0.5).log2().ceil() as u32;
    }
    let scale = 0.5f64.powi(squarings as i32);
    let x = a * Complex64::new(scale, 0.0);

    let id = CMat::identity(n, n);
    let mut num = id.clone() * Complex64::new(PADE6[0], 0.0);
    let mut den = num.clone();
    let mut power = id;
    for (k, &c) in PADE6.iter().enumerate().skip(1) {
        power = &power * &x;
        let term = &power * Complex64::new(c, 0.0);
        num += &term;
        if k % 2 == 0 {
            den += &term;
        } else {
            den -= &term;
        }
    }
    let mut r = den
        .lu()
        .solve(&num)
        .expect("Padé denominator is nonsingular for scaled norm <= 1/2");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Eigenvalues of a dense complex matrix.
pub fn eigenvalues(a: &CMat) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| {
        let z = a[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    let ev = m
        .eigenvalues()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(ev.into_iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

/// Smallest singular value of a dense complex matrix.
pub fn min_singular_value(a: &CMat) -> Result<f64> {
    let (r, c) = (a.nrows(), a.ncols());
    let m = faer::Mat::<faer::c64>::from_fn(r, c, |i, j| {
        let z = a[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    let s = m
        .singular_values()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(s.into_iter().fold(f64::INFINITY, f64::min))
}

/// Result of a dense solve.
#[derive(Debug, Clone)]
pub struct LinearSolve {
    pub x: CVec,
    /// Estimate of the 1-norm condition number.
    pub condition_estimate: f64,
    /// ||Ax - b||_inf after refinement.
    pub residual: f64,
    /// Normwise backward error ||Ax - b|| / (||A|| ||x|| + ||b||), infinity norms.
    pub backward_error: f64,
}

/// LU factorization with partial pivoting of `a` and of its adjoint.
pub struct Factored {
    a: CMat,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_adj: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Factored {
    pub fn new(a: CMat) -> Self {
        let lu = a.clone().lu();
        let lu_adj = a.adjoint().lu();
        Factored { a, lu, lu_adj }
    }

    fn raw_solve(&self, b: &CVec) -> Result<CVec> {
        self.lu.solve(b).ok_or(Error::NearSingular {
            distance: 0.0,
            guard: 0.0,
        })
    }

    /// Solve with two steps of iterative refinement.
    pub fn solve(&self, b: &CVec) -> Result<LinearSolve> {
        let mut x = self.raw_solve(b)?;
        for _ in 0..2 {
            let r = b - &self.a * &x;
            let dx = self.raw_solve(&r)?;
            x += dx;
        }
        let r = b - &self.a * &x;
        let residual = sup_norm(&r);
        let denom = norm_inf(&self.a) * sup_norm(&x) + sup_norm(b);
        let backward_error = if denom > 0.0 { residual / denom } else { 0.0 };
        Ok(LinearSolve {
            x,
            condition_estimate: self.condition_estimate(),
            residual,
            backward_error,
        })
    }

    /// Hager's 1-norm estimator for ||A^{-1}||_1, times ||A||_1.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.a.nrows();
        if n == 0 {
            return 1.0;
        }
        let mut x = CVec::from_element(n, Complex64::new(1.0 / n as f64, 0.0));
        let mut est = 0.0f64;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let Some(y) = self.lu.solve(&x) else {
                return f64::INFINITY;
            };
            est = est.max(y.iter().map(|z| z.norm()).sum::<f64>());
            let xi = y.map(|z| if z.norm() > 0.0 { z / z.norm() } else { ONE });
            let Some(z) = self.lu_adj.solve(&xi) else {
                return f64::INFINITY;
            };
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let ztx = z.dotc(&x).re;
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = cvec_zeros(n);
            x[j] = ONE;
        }
        est * norm1(&self.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_expm(a: &CMat, terms: usize) -> CMat {
        let n = a.nrows();
        let mut sum = CMat::identity(n, n);
        let mut term = CMat::identity(n, n);
        for k in 1..terms {
            term = &term * a / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    #[test]
    fn expm_matches_taylor_series_at_small_norm() {
        let a = CMat::from_fn(3, 3, |i, j| {
            Complex64::new(0.1 * (i as f64 - j as f64), 0.05 * (i + j) as f64)
        });
        let diff = expm(&a) - taylor_expm(&a, 30);
        assert!(diff.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn expm_rotation_and_diagonal_closed_forms() {
        let t = 7.3;
        let rot = CMat::from_row_slice(
            2,
            2,
            &[ZERO, Complex64::new(-t, 0.0), Complex64::new(t, 0.0), ZERO],
        );
        let e = expm(&rot);
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-13);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-13);

        let d = CMat::from_diagonal(&CVec::from_vec(vec![
            Complex64::new(-3.0, 1.0),
            Complex64::new(2.0, 0.0),
        ]));
        let e = expm(&d);
        assert!((e[(0, 0)] - Complex64::new(-3.0, 1.0).exp()).norm() < 1e-13);
        assert!((e[(1, 1)] - Complex64::new(2.0f64.exp(), 0.0)).norm() < 1e-12);
        assert!(e[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn solve_with_refinement_has_small_backward_error() {
        let a = CMat::from_fn(5, 5, |i, j| {
            Complex64::new(
                1.0 / (1.0 + i as f64 + j as f64),
                if i == j { 2.0 } else { 0.0 },
            )
        });
        let b = CVec::from_fn(5, |i, _| Complex64::new(i as f64, 1.0));
        let sol = Factored::new(a.clone()).solve(&b).unwrap();
        assert!(sol.backward_error < 1e-15);
        assert!(sup_norm(&(&a * &sol.x - &b)) < 1e-13);
        assert!(sol.condition_estimate >= 1.0);
    }

    #[test]
    fn condition_estimate_is_exact_for_diagonal() {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![
            Complex64::new(1e-4, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
        ]));
        let k = Factored::new(a).condition_estimate();
        assert!((k - 2e4).abs() < 1e-6);
    }

    #[test]
    fn eigenvalues_of_rotation() {
        let rot = CMat::from_row_slice(2, 2, &[ZERO, -ONE, ONE, ZERO]);
        let mut ev = eigenvalues(&rot).unwrap();
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((ev[0] + I).norm() < 1e-14);
        assert!((ev[1] - I).norm() < 1e-14);
    }
}
