use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use super::cheb::ChebGrid;
use super::segment::History;
use crate::apfun::TrigPolynomial;
use crate::error::{Error, Result};
use crate::linalg::{cvec_zeros, CMat, CVec, ONE};

/// A 1-periodic matrix-valued function of time.
#[derive(Clone)]
pub enum MatrixFn {
    Constant(CMat),
    /// `sum_k M_k exp(2 pi i k t)`, listed as `(k, M_k)`.
    Fourier(Vec<(i32, CMat)>),
    Closure {
        dim: usize,
        f: Arc<dyn Fn(f64) -> CMat + Send + Sync>,
    },
}

impl MatrixFn {
    pub fn scalar(v: f64) -> Self {
        MatrixFn::Constant(CMat::from_element(1, 1, Complex64::new(v, 0.0)))
    }

    pub fn closure(dim: usize, f: impl Fn(f64) -> CMat + Send + Sync + 'static) -> Self {
        MatrixFn::Closure {
            dim,
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, t: f64) -> CMat {
        match self {
            MatrixFn::Constant(m) => m.clone(),
            MatrixFn::Fourier(terms) => {
                let (r, c) = terms[0].1.shape();
                let mut out = CMat::zeros(r, c);
                for (k, m) in terms {
                    out += m * Complex64::from_polar(1.0, TAU * *k as f64 * t);
                }
                out
            }
            MatrixFn::Closure { f, .. } => f(t),
        }
    }

    /// Constant in time (time-independent coefficient).
    pub fn is_constant(&self) -> bool {
        match self {
            MatrixFn::Constant(_) => true,
            MatrixFn::Fourier(terms) => terms.iter().all(|(k, _)| *k == 0),
            MatrixFn::Closure { .. } => false,
        }
    }

    fn shape(&self) -> Result<(usize, usize)> {
        match self {
            MatrixFn::Constant(m) => Ok(m.shape()),
            MatrixFn::Fourier(terms) => {
                let first = terms
                    .first()
                    .ok_or_else(|| Error::Domain("empty Fourier coefficient list".into()))?
                    .1
                    .shape();
                if terms.iter().any(|(_, m)| m.shape() != first) {
                    return Err(Error::Domain("Fourier coefficients differ in shape".into()));
                }
                Ok(first)
            }
            MatrixFn::Closure { dim, .. } => Ok((*dim, *dim)),
        }
    }

    /// `t -> factor * A(period * t)`, with harmonics unchanged.
    fn rescaled(&self, period: f64) -> MatrixFn {
        let s = Complex64::new(period, 0.0);
        match self {
            MatrixFn::Constant(m) => MatrixFn::Constant(m * s),
            MatrixFn::Fourier(terms) => {
                MatrixFn::Fourier(terms.iter().map(|(k, m)| (*k, m * s)).collect())
            }
            MatrixFn::Closure { dim, f } => {
                let f = f.clone();
                MatrixFn::Closure {
                    dim: *dim,
                    f: Arc::new(move |t| f(period * t) * s),
                }
            }
        }
    }
}

impl fmt::Debug for MatrixFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixFn::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            MatrixFn::Fourier(t) => f.debug_tuple("Fourier").field(t).finish(),
            MatrixFn::Closure { dim, .. } => write!(f, "Closure({dim}x{dim})"),
        }
    }
}

/// Kernel `K(t, theta)` of the distributed delay, 1-periodic in `t`.
#[derive(Clone)]
pub enum KernelFn {
    /// `sum M exp(2 pi i k t) theta^p`, listed as `(k, p, M)`.
    Terms(Vec<(i32, u32, CMat)>),
    Closure {
        dim: usize,
        f: Arc<dyn Fn(f64, f64) -> CMat + Send + Sync>,
    },
}

impl KernelFn {
    pub fn closure(dim: usize, f: impl Fn(f64, f64) -> CMat + Send + Sync + 'static) -> Self {
        KernelFn::Closure {
            dim,
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, t: f64, theta: f64) -> CMat {
        match self {
            KernelFn::Terms(terms) => {
                let (r, c) = terms[0].2.shape();
                let mut out = CMat::zeros(r, c);
                for (k, p, m) in terms {
                    let w = Complex64::from_polar(theta.powi(*p as i32), TAU * *k as f64 * t);
                    out += m * w;
                }
                out
            }
            KernelFn::Closure { f, .. } => f(t, theta),
        }
    }

    fn rescaled(&self, period: f64) -> KernelFn {
        // K(t, theta) = p^2 K'(p t, p theta)
        match self {
            KernelFn::Terms(terms) => KernelFn::Terms(
                terms
                    .iter()
                    .map(|(k, pw, m)| {
                        (
                            *k,
                            *pw,
                            m * Complex64::new(period.powi(*pw as i32 + 2), 0.0),
                        )
                    })
                    .collect(),
            ),
            KernelFn::Closure { dim, f } => {
                let f = f.clone();
                KernelFn::Closure {
                    dim: *dim,
                    f: Arc::new(move |t, th| {
                        f(period * t, period * th) * Complex64::new(period * period, 0.0)
                    }),
                }
            }
        }
    }
}

impl fmt::Debug for KernelFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFn::Terms(t) => f.debug_tuple("Terms").field(t).finish(),
            KernelFn::Closure { dim, .. } => write!(f, "Closure({dim}x{dim})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteDelay {
    pub tau: f64,
    pub coefficient: MatrixFn,
}

/// Absolutely continuous part of the delay functional, integrated by
/// Clenshaw–Curtis quadrature of the given order on `[-r, 0]`.
#[derive(Debug, Clone)]
pub struct DistributedKernel {
    pub kernel: KernelFn,
    pub order: usize,
    grid: Arc<ChebGrid>,
}

impl DistributedKernel {
    pub fn quadrature_grid(&self) -> &ChebGrid {
        &self.grid
    }
}

/// Atoms at `-tau_j` plus an optional distributed kernel.
#[derive(Debug, Clone, Default)]
pub struct DelayStructure {
    pub discrete: Vec<DiscreteDelay>,
    pub distributed: Option<DistributedKernel>,
}

impl DelayStructure {
    pub fn min_lag(&self) -> Option<f64> {
        self.discrete
            .iter()
            .map(|d| d.tau)
            .fold(None, |acc, t| Some(acc.map_or(t, |a: f64| a.min(t))))
    }
}

/// `dx/dt = A(t) x + F(t) x_t + f(t)` with 1-periodic `A`, `F` and a
/// trigonometric-polynomial forcing `f`.
#[derive(Debug, Clone)]
pub struct FdeModel {
    dim: usize,
    horizon: f64,
    state: MatrixFn,
    delays: DelayStructure,
    forcing: TrigPolynomial,
}

impl FdeModel {
    pub fn builder(dim: usize, horizon: f64) -> FdeModelBuilder {
        FdeModelBuilder {
            dim,
            horizon,
            period: 1.0,
            state: None,
            discrete: Vec::new(),
            kernel: None,
            forcing: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Delay horizon `r`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn state(&self) -> &MatrixFn {
        &self.state
    }

    pub fn delays(&self) -> &DelayStructure {
        &self.delays
    }

    pub fn forcing(&self) -> &TrigPolynomial {
        &self.forcing
    }

    /// Same homogeneous part with a different forcing.
    pub fn with_forcing(&self, forcing: TrigPolynomial) -> Result<FdeModel> {
        if forcing.dim() != self.dim {
            return Err(Error::Domain(format!(
                "forcing of dimension {} for a dimension-{} model",
                forcing.dim(),
                self.dim
            )));
        }
        let mut m = self.clone();
        m.forcing = forcing;
        Ok(m)
    }

    /// True when neither `A` nor the delay coefficients depend on time.
    pub fn is_autonomous(&self) -> bool {
        self.state.is_constant()
            && self
                .delays
                .discrete
                .iter()
                .all(|d| d.coefficient.is_constant())
            && self
                .delays
                .distributed
                .as_ref()
                .is_none_or(|k| match &k.kernel {
                    KernelFn::Terms(t) => t.iter().all(|(h, _, _)| *h == 0),
                    KernelFn::Closure { .. } => false,
                })
    }

    /// `F(t) phi = sum_j B_j(t) phi(-tau_j) + int K(t, theta) phi(theta) dtheta`.
    pub fn apply_delay(&self, t: f64, phi: &dyn History) -> CVec {
        let mut out = cvec_zeros(self.dim);
        for d in &self.delays.discrete {
            let b = d.coefficient.eval(t);
            out.gemv(ONE, &b, &phi.at(-d.tau), ONE);
        }
        if let Some(k) = &self.delays.distributed {
            for (&theta, &w) in k.grid.nodes().iter().zip(k.grid.quadrature_weights()) {
                let m = k.kernel.eval(t, theta);
                out.gemv(Complex64::new(w, 0.0), &m, &phi.at(theta), ONE);
            }
        }
        out
    }

    /// Stable digest of the model, computed from coefficient samples.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |x: f64| h.update(x.to_le_bytes());
        put(self.dim as f64);
        put(self.horizon);
        let samples = [0.0, 0.125, 0.25, 0.5, 0.75];
        let put_mat = |m: &CMat, put: &mut dyn FnMut(f64)| {
            for z in m.iter() {
                put(z.re);
                put(z.im);
            }
        };
        for &t in &samples {
            put_mat(&self.state.eval(t), &mut put);
            for d in &self.delays.discrete {
                put(d.tau);
                put_mat(&d.coefficient.eval(t), &mut put);
            }
            if let Some(k) = &self.delays.distributed {
                put(k.order as f64);
                for &th in &[-self.horizon, -0.5 * self.horizon, 0.0] {
                    put_mat(&k.kernel.eval(t, th), &mut put);
                }
            }
        }
        for term in self.forcing.terms() {
            put(term.frequency.0);
            for z in term.coefficient.iter() {
                put(z.re);
                put(z.im);
            }
        }
        hex::encode(h.finalize())
    }
}

pub struct FdeModelBuilder {
    dim: usize,
    horizon: f64,
    period: f64,
    state: Option<MatrixFn>,
    discrete: Vec<DiscreteDelay>,
    kernel: Option<(KernelFn, Option<usize>)>,
    forcing: Option<TrigPolynomial>,
}

/// Default quadrature order for distributed kernels.
pub const DEFAULT_KERNEL_ORDER: usize = 32;

impl FdeModelBuilder {
    pub fn state(mut self, a: MatrixFn) -> Self {
        self.state = Some(a);
        self
    }

    pub fn delay(mut self, tau: f64, b: MatrixFn) -> Self {
        self.discrete.push(DiscreteDelay {
            tau,
            coefficient: b,
        });
        self
    }

    pub fn kernel(mut self, k: KernelFn, order: Option<usize>) -> Self {
        self.kernel = Some((k, order));
        self
    }

    pub fn forcing(mut self, f: TrigPolynomial) -> Self {
        self.forcing = Some(f);
        self
    }

    /// Period of the coefficients in the caller's time unit; the built model
    /// is rescaled to period 1.
    pub fn period(mut self, p: f64) -> Self {
        self.period = p;
        self
    }

    pub fn build(self) -> Result<FdeModel> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::Domain("model dimension must be positive".into()));
        }
        let p = self.period;
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Domain(format!("period must be positive, got {p}")));
        }
        let horizon = self.horizon / p;
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Domain(format!(
                "delay horizon must be positive, got {}",
                self.horizon
            )));
        }

        let check = |name: &str, m: &MatrixFn| -> Result<()> {
            let shape = m.shape()?;
            if shape != (n, n) {
                return Err(Error::Domain(format!(
                    "{name} has shape {shape:?}, expected ({n}, {n})"
                )));
            }
            check_periodic_and_bounded(name, |t| m.eval(t))
        };

        let state = self
            .state
            .unwrap_or_else(|| MatrixFn::Constant(CMat::zeros(n, n)));
        check("state operator A", &state)?;
        let state = if p == 1.0 { state } else { state.rescaled(p) };

        let mut discrete = Vec::with_capacity(self.discrete.len());
        for d in self.discrete {
            let tau = d.tau / p;
            if !(tau > 0.0) || tau > horizon * (1.0 + 1e-12) {
                return Err(Error::Domain(format!(
                    "delay {} must lie in (0, {}]",
                    d.tau, self.horizon
                )));
            }
            check(
                &format!("delay coefficient at lag {}", d.tau),
                &d.coefficient,
            )?;
            let coefficient = if p == 1.0 {
                d.coefficient
            } else {
                d.coefficient.rescaled(p)
            };
            discrete.push(DiscreteDelay {
                tau: tau.min(horizon),
                coefficient,
            });
        }

        let distributed = match self.kernel {
            None => None,
            Some((k, order)) => {
                let order = order.unwrap_or(DEFAULT_KERNEL_ORDER);
                let kernel = if p == 1.0 { k } else { k.rescaled(p) };
                let grid = Arc::new(ChebGrid::new(horizon, order)?);
                for &th in grid.nodes() {
                    let m = kernel.eval(0.0, th);
                    if m.shape() != (n, n) {
                        return Err(Error::Domain(format!(
                            "kernel has shape {:?}, expected ({n}, {n})",
                            m.shape()
                        )));
                    }
                    check_periodic_and_bounded("distributed kernel", |t| kernel.eval(t, th))?;
                }
                Some(DistributedKernel {
                    kernel,
                    order,
                    grid,
                })
            }
        };

        let forcing = self.forcing.unwrap_or_else(|| TrigPolynomial::zero(n));
        if forcing.dim() != n {
            return Err(Error::Domain(format!(
                "forcing of dimension {} for a dimension-{n} model",
                forcing.dim()
            )));
        }
        // f(t) -> p f'(p t)
        let forcing = if p == 1.0 {
            forcing
        } else {
            TrigPolynomial::new(
                n,
                forcing
                    .terms()
                    .iter()
                    .map(|t| (t.frequency.0 * p, &t.coefficient * Complex64::new(p, 0.0))),
            )?
        };

        Ok(FdeModel {
            dim: n,
            horizon,
            state,
            delays: DelayStructure {
                discrete,
                distributed,
            },
            forcing,
        })
    }
}

/// Samples a coefficient on a grid of one period and checks finiteness and
/// `M(t + 1) = M(t)`.
fn check_periodic_and_bounded(name: &str, f: impl Fn(f64) -> CMat) -> Result<()> {
    for k in 0..16 {
        let t = k as f64 / 16.0 + 0.013;
        let a = f(t);
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain(format!("{name} is not finite at t = {t}")));
        }
        let b = f(t + 1.0);
        let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if (a - b).iter().any(|z| z.norm() > 1e-9 * scale) {
            return Err(Error::Domain(format!(
                "{name} is not 1-periodic near t = {t}"
            )));
        }
    }
    Ok(())
}
