use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Chebyshev–Gauss–Lobatto nodes mapped to `[-r, 0]`, in increasing order,
/// with barycentric interpolation weights and Clenshaw–Curtis quadrature
/// weights on the same nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebGrid {
    horizon: f64,
    nodes: Vec<f64>,
    bary: Vec<f64>,
    quad: Vec<f64>,
}

impl ChebGrid {
    /// Grid with `m + 1` nodes on `[-horizon, 0]`.
    pub fn new(horizon: f64, m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::Config(
                "a segment grid needs at least 2 nodes".into(),
            ));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Config(format!(
                "delay horizon must be positive, got {horizon}"
            )));
        }
        let nodes = (0..=m)
            .map(|j| {
                if j == m {
                    0.0
                } else if j == 0 {
                    -horizon
                } else {
                    -0.5 * horizon * (1.0 + (j as f64 * PI / m as f64).cos())
                }
            })
            .collect();
        let bary = (0..=m)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == m {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let quad = clenshaw_curtis(m)
            .into_iter()
            .map(|w| 0.5 * horizon * w)
            .collect();
        Ok(ChebGrid {
            horizon,
            nodes,
            bary,
            quad,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Polynomial degree `m` (one less than the node count).
    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.quad
    }

    /// Barycentric interpolation coefficients `l_j(theta)` for all nodes.
    ///
    /// At a node the coefficients are the unit vector, so node values are
    /// reproduced exactly.
    pub fn lagrange_coefficients(&self, theta: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        if let Some(j) = self.nodes.iter().position(|&x| x == theta) {
            out[j] = 1.0;
            return out;
        }
        let mut denom = 0.0;
        for (j, (&x, &w)) in self.nodes.iter().zip(&self.bary).enumerate() {
            let c = w / (theta - x);
            out[j] = c;
            denom += c;
        }
        for c in &mut out {
            *c /= denom;
        }
        out
    }
}

/// Clenshaw–Curtis weights on `cos(j pi / m)`, `j = 0..=m`, for `[-1, 1]`.
fn clenshaw_curtis(m: usize) -> Vec<f64> {
    let n = m as f64;
    let mut w = vec![0.0; m + 1];
    if m == 1 {
        return vec![1.0, 1.0];
    }
    let theta: Vec<f64> = (0..=m).map(|j| j as f64 * PI / n).collect();
    let mut v = vec![1.0; m - 1];
    if m.is_multiple_of(2) {
        w[0] = 1.0 / (n * n - 1.0);
        w[m] = w[0];
        for k in 1..m / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (n * theta[i + 1]).cos() / (n * n - 1.0);
        }
    } else {
        w[0] = 1.0 / (n * n);
        w[m] = w[0];
        for k in 1..=(m - 1) / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (i, vi) in v.into_iter().enumerate() {
        w[i + 1] = 2.0 * vi / n;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_increasing_and_span_the_horizon() {
        let g = ChebGrid::new(2.5, 8).unwrap();
        assert_eq!(g.nodes()[0], -2.5);
        assert_eq!(*g.nodes().last().unwrap(), 0.0);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn quadrature_integrates_polynomials() {
        for m in [1usize, 2, 5, 8, 32] {
            let g = ChebGrid::new(1.5, m).unwrap();
            for p in 0..=m.min(6) {
                let q: f64 = g
                    .nodes()
                    .iter()
                    .zip(g.quadrature_weights())
                    .map(|(x, w)| w * x.powi(p as i32))
                    .sum();
                let exact = -(-1.5f64).powi(p as i32 + 1) / (p as f64 + 1.0);
                assert!((q - exact).abs() < 1e-13, "m={m} p={p}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn lagrange_coefficients_match_direct_product_formula() {
        let g = ChebGrid::new(1.0, 6).unwrap();
        let theta = -0.4321;
        let bary = g.lagrange_coefficients(theta);
        for (j, b) in bary.iter().enumerate() {
            let direct: f64 = (0..g.len())
                .filter(|&k| k != j)
                .map(|k| (theta - g.nodes()[k]) / (g.nodes()[j] - g.nodes()[k]))
                .product();
            assert!((b - direct).abs() < 1e-13);
        }
    }
}
