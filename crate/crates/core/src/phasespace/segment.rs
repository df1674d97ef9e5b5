use std::sync::Arc;

use num_complex::Complex64;

use super::cheb::ChebGrid;
use crate::error::{Error, Result};
use crate::linalg::{cvec_zeros, sup_norm, CVec, ONE};

/// Anything that can be evaluated as a history segment `theta -> x(t + theta)`
/// on `[-r, 0]`.
///
/// [`Segment`] is the discretized phase-space element; other implementors
/// provide closed-form histories (zero, the tent embedding, or a function
/// evaluated from a known solution) so the integrator can read them exactly.
pub trait History: Sync {
    fn dim(&self) -> usize;
    fn at(&self, theta: f64) -> CVec;
}

/// Element of the discretized phase space `C([-r, 0], C^n)`: values at the
/// Chebyshev–Gauss–Lobatto nodes of a [`ChebGrid`].
///
/// Coordinates are stored node-major: entry `j * n + i` is component `i` at
/// node `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    grid: Arc<ChebGrid>,
    dim: usize,
    data: CVec,
}

impl Segment {
    pub fn zeros(grid: Arc<ChebGrid>, dim: usize) -> Self {
        let len = grid.len() * dim;
        Segment {
            grid,
            dim,
            data: cvec_zeros(len),
        }
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: Arc<ChebGrid>, dim: usize, f: impl Fn(f64) -> CVec) -> Self {
        let mut data = cvec_zeros(grid.len() * dim);
        for (j, &theta) in grid.nodes().iter().enumerate() {
            let v = f(theta);
            assert_eq!(v.len(), dim, "sampled value has wrong dimension");
            data.rows_mut(j * dim, dim).copy_from(&v);
        }
        Segment { grid, dim, data }
    }

    /// Samples any history at the grid nodes.
    pub fn sample(grid: Arc<ChebGrid>, history: &dyn History) -> Self {
        let dim = history.dim();
        Self::from_fn(grid, dim, |theta| history.at(theta))
    }

    pub fn from_coords(grid: Arc<ChebGrid>, dim: usize, data: CVec) -> Result<Self> {
        if data.len() != grid.len() * dim {
            return Err(Error::Domain(format!(
                "coordinate vector of length {} does not match {} nodes x {dim}",
                data.len(),
                grid.len()
            )));
        }
        Ok(Segment { grid, dim, data })
    }

    /// Canonical basis segment: coordinate `index` set to one.
    pub fn basis(grid: Arc<ChebGrid>, dim: usize, index: usize) -> Self {
        let mut s = Self::zeros(grid, dim);
        s.data[index] = ONE;
        s
    }

    pub fn grid(&self) -> &Arc<ChebGrid> {
        &self.grid
    }

    pub fn coords(&self) -> &CVec {
        &self.data
    }

    pub fn into_coords(self) -> CVec {
        self.data
    }

    pub fn node_value(&self, j: usize) -> CVec {
        self.data.rows(j * self.dim, self.dim).into_owned()
    }

    /// Value at `theta = 0`.
    pub fn head(&self) -> CVec {
        self.node_value(self.grid.len() - 1)
    }

    /// Barycentric interpolation at `theta` in `[-r, 0]`.
    pub fn interpolate(&self, theta: f64) -> Result<CVec> {
        let r = self.grid.horizon();
        let slack = 1e-12 * r.max(1.0);
        if theta < -r - slack || theta > slack || theta.is_nan() {
            return Err(Error::Domain(format!("theta = {theta} outside [-{r}, 0]")));
        }
        Ok(self.eval_clamped(theta.clamp(-r, 0.0)))
    }

    fn eval_clamped(&self, theta: f64) -> CVec {
        let coeffs = self.grid.lagrange_coefficients(theta);
        let mut out = cvec_zeros(self.dim);
        for (j, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                out.axpy(
                    Complex64::new(c, 0.0),
                    &self.data.rows(j * self.dim, self.dim),
                    ONE,
                );
            }
        }
        out
    }

    /// Largest node-value difference in the max norm.
    pub fn sup_distance(&self, other: &Segment) -> f64 {
        sup_norm(&(&self.data - &other.data))
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.data)
    }

    pub fn scale(&self, factor: Complex64) -> Segment {
        Segment {
            grid: self.grid.clone(),
            dim: self.dim,
            data: &self.data * factor,
        }
    }

    pub fn add(&self, other: &Segment) -> Segment {
        assert_eq!(
            self.data.len(),
            other.data.len(),
            "segments on different grids"
        );
        Segment {
            grid: self.grid.clone(),
            dim: self.dim,
            data: &self.data + &other.data,
        }
    }
}

impl History for Segment {
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, theta: f64) -> CVec {
        let r = self.grid.horizon();
        self.eval_clamped(theta.clamp(-r, 0.0))
    }
}

/// The zero history.
#[derive(Debug, Clone, Copy)]
pub struct ZeroHistory {
    pub dim: usize,
}

impl History for ZeroHistory {
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, _theta: f64) -> CVec {
        cvec_zeros(self.dim)
    }
}

/// History given by a closure `theta -> value`.
pub struct FnHistory<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64) -> CVec + Sync> FnHistory<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnHistory { dim, f }
    }
}

impl<F: Fn(f64) -> CVec + Sync> History for FnHistory<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, theta: f64) -> CVec {
        (self.f)(theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;

    fn scalar(v: f64) -> CVec {
        CVec::from_element(1, Complex64::new(v, 0.0))
    }

    fn grid(r: f64, m: usize) -> Arc<ChebGrid> {
        Arc::new(ChebGrid::new(r, m).unwrap())
    }

    #[test]
    fn constants_are_reproduced() {
        let c = Complex64::new(2.0, -1.0);
        let s = Segment::from_fn(grid(3.0, 5), 1, |_| CVec::from_element(1, c));
        let v = s.interpolate(-1.0).unwrap();
        assert!((v[0] - c).norm() < 1e-15);
    }

    #[test]
    fn quadratic_is_reproduced() {
        let s = Segment::from_fn(grid(1.0, 2), 1, |t| scalar(t * t));
        assert!((s.interpolate(-0.5).unwrap()[0].re - 0.25).abs() < 1e-15);
        let s = Segment::from_fn(grid(1.0, 7), 1, |t| scalar(t * t));
        assert!((s.interpolate(-0.5).unwrap()[0].re - 0.25).abs() < 1e-14);
    }

    #[test]
    fn exponential_is_resolved_at_m16() {
        let s = Segment::from_fn(grid(1.0, 16), 1, |t| scalar(t.exp()));
        let v = s.interpolate(-0.3).unwrap();
        assert!((v[0].re - (-0.3f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn interpolation_error_decays_geometrically() {
        let err = |m: usize| {
            let s = Segment::from_fn(grid(1.0, m), 1, |t| scalar(t.exp()));
            (0..200)
                .map(|k| -1.0 + k as f64 / 199.0)
                .map(|t| (s.interpolate(t).unwrap()[0].re - t.exp()).abs())
                .fold(0.0, f64::max)
        };
        let (e4, e16) = (err(4), err(16));
        assert!(e16 < 1e-10 * e4, "e4 = {e4:e}, e16 = {e16:e}");
    }

    #[test]
    fn head_and_endpoint() {
        let s = Segment::from_fn(grid(1.0, 6), 1, scalar);
        assert_eq!(s.head()[0], ZERO);
        assert_eq!(s.head(), s.interpolate(0.0).unwrap());
        let e = Segment::from_fn(grid(1.0, 8), 1, |t| scalar((-(1.0 + t)).exp()));
        assert!((e.head()[0].re - (-1f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn out_of_range_is_a_domain_error() {
        let s = Segment::zeros(grid(1.0, 4), 2);
        assert!(matches!(s.interpolate(0.1), Err(Error::Domain(_))));
        assert!(matches!(s.interpolate(-1.5), Err(Error::Domain(_))));
    }
}
