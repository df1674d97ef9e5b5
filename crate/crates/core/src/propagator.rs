//! Method-of-steps integration of mild solutions.
//!
//! Each unit of time is split into `substeps` equal steps of a fourth-order
//! one-step scheme. When `A` is constant the linear part is integrated
//! exactly through matrix exponentials (Lawson's integrating-factor RK4);
//! otherwise `A(t)` enters classic RK4. Delayed values come from the initial
//! history for times before the start and from cubic Hermite interpolation
//! of the computed steps afterwards.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::apfun::TrigPolynomial;
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::linalg::{cvec_zeros, expm, norm_inf, sup_norm, CMat, CVec, ONE};
use crate::phasespace::{ChebGrid, FdeModel, FnHistory, History, Segment, ZeroHistory};

pub const DEFAULT_SUBSTEPS: usize = 256;
pub const DEFAULT_H_OUT: f64 = 1.0 / 512.0;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepperConfig {
    /// Integrator steps per unit time.
    pub substeps: usize,
    /// Spacing of the exported dense output.
    pub h_out: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            substeps: DEFAULT_SUBSTEPS,
            h_out: DEFAULT_H_OUT,
        }
    }
}

impl StepperConfig {
    pub fn with_substeps(substeps: usize) -> Self {
        StepperConfig {
            substeps,
            ..Default::default()
        }
    }

    pub fn validate(&self, model: &FdeModel) -> Result<()> {
        if self.substeps < 16 {
            return Err(Error::Config(format!(
                "substeps must be at least 16, got {}",
                self.substeps
            )));
        }
        let min_lag = model.delays().min_lag().unwrap_or(f64::INFINITY);
        let cap = 1.0 / (4.0 * 1f64.max(1.0 / min_lag));
        if !(self.h_out > 0.0) || self.h_out > cap {
            return Err(Error::Config(format!(
                "output step {} must lie in (0, {cap}]",
                self.h_out
            )));
        }
        if 1.0 / self.substeps as f64 > min_lag * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "step 1/{} exceeds the shortest delay {min_lag}",
                self.substeps
            )));
        }
        Ok(())
    }
}

/// Forcing applied during a propagation.
#[derive(Debug, Clone, Copy)]
pub enum Forcing<'a> {
    Off,
    Poly(&'a TrigPolynomial),
    /// `c exp(i lambda t)`.
    Single {
        frequency: f64,
        coefficient: &'a CVec,
    },
}

impl Forcing<'_> {
    fn add_to(&self, t: f64, out: &mut CVec) {
        match self {
            Forcing::Off => {}
            Forcing::Poly(p) => *out += p.eval(t),
            Forcing::Single {
                frequency,
                coefficient,
            } => out.axpy(Complex64::from_polar(1.0, frequency * t), coefficient, ONE),
        }
    }
}

/// Numerical mild solution on `[start - r, end]`.
///
/// Stores the step values and derivatives on `[start, end]`; values before
/// `start` come from the initial segment when one was recorded.
#[derive(Debug, Clone)]
pub struct Trajectory {
    start: f64,
    end: f64,
    step: f64,
    dim: usize,
    horizon: f64,
    values: Vec<CVec>,
    derivs: Vec<CVec>,
    initial: Option<Segment>,
    config: StepperConfig,
    fingerprint: String,
}

impl Trajectory {
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn initial(&self) -> Option<&Segment> {
        self.initial.as_ref()
    }

    pub fn end_value(&self) -> CVec {
        self.values
            .last()
            .expect("trajectory has at least one value")
            .clone()
    }

    pub fn model_fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Value on `[start, end]` from the step data (cubic Hermite).
    pub fn eval_steps(&self, time: f64) -> CVec {
        if self.values.len() == 1 {
            return self.values[0].clone();
        }
        let x = ((time - self.start) / self.step).clamp(0.0, (self.values.len() - 1) as f64);
        let k = (x.floor() as usize).min(self.values.len() - 2);
        hermite(
            &self.values[k],
            &self.derivs[k],
            &self.values[k + 1],
            &self.derivs[k + 1],
            self.step,
            x - k as f64,
        )
    }

    /// Value anywhere on `[start - r, end]`.
    pub fn eval(&self, time: f64) -> Result<CVec> {
        let slack = 1e-12 * self.end.abs().max(1.0);
        if time >= self.start {
            if time > self.end + slack {
                return Err(Error::Domain(format!(
                    "time {time} beyond trajectory end {}",
                    self.end
                )));
            }
            return Ok(self.eval_steps(time));
        }
        match &self.initial {
            Some(seg) => seg.interpolate(time - self.start),
            None => Err(Error::Domain(format!(
                "time {time} precedes the start {} and no initial segment was recorded",
                self.start
            ))),
        }
    }

    /// Value at `time`, reading the part before `start` from `history`.
    pub fn eval_with(&self, time: f64, history: &dyn History) -> CVec {
        if time >= self.start {
            self.eval_steps(time)
        } else {
            history.at((time - self.start).max(-self.horizon))
        }
    }

    /// Segment `u_time` sampled on `grid`, with values before the start read
    /// from `history`.
    pub fn segment_at_with(
        &self,
        time: f64,
        grid: Arc<ChebGrid>,
        history: &dyn History,
    ) -> Segment {
        Segment::from_fn(grid, self.dim, |theta| {
            self.eval_with(time + theta, history)
        })
    }

    /// Segment `u_time` on the grid of the recorded initial segment.
    pub fn segment_at(&self, time: f64) -> Result<Segment> {
        let init = self
            .initial
            .as_ref()
            .ok_or_else(|| Error::Domain("trajectory carries no initial segment".into()))?;
        if time < self.start - 1e-12 || time > self.end + 1e-12 {
            return Err(Error::Domain(format!(
                "segment time {time} outside [{}, {}]",
                self.start, self.end
            )));
        }
        Ok(self.segment_at_with(time, init.grid().clone(), init))
    }

    /// Samples on the uniform output grid of `[start - r, end]`.
    pub fn dense_output(&self) -> Result<Vec<(f64, CVec)>> {
        let from = self.start - self.horizon;
        let count = ((self.end - from) / self.config.h_out).ceil().max(1.0) as usize;
        (0..=count)
            .map(|k| {
                let t = if k == count {
                    self.end
                } else {
                    from + k as f64 * self.config.h_out
                };
                self.eval(t).map(|v| (t, v))
            })
            .collect()
    }

    /// CSV export: a comment line with the model digest and stepper
    /// configuration, a column header, then `t, re(u_1..u_n), im(u_1..u_n)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# model={} substeps={} h_out={}",
            self.fingerprint,
            self.config.substeps,
            fmt_f64(self.config.h_out)
        )?;
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("re_u{i}")));
        header.extend((1..=self.dim).map(|i| format!("im_u{i}")));
        writeln!(w, "{}", header.join(","))?;
        for (t, v) in self.dense_output()? {
            let mut row = vec![fmt_f64(t)];
            row.extend(v.iter().map(|z| fmt_f64(z.re)));
            row.extend(v.iter().map(|z| fmt_f64(z.im)));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn hermite(u0: &CVec, d0: &CVec, u1: &CVec, d1: &CVec, h: f64, x: f64) -> CVec {
    let x2 = x * x;
    let x3 = x2 * x;
    let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
    let h10 = (x3 - 2.0 * x2 + x) * h;
    let h01 = -2.0 * x3 + 3.0 * x2;
    let h11 = (x3 - x2) * h;
    let c = |v: f64| Complex64::new(v, 0.0);
    u0 * c(h00) + d0 * c(h10) + u1 * c(h01) + d1 * c(h11)
}

/// History seen by a stage of the integrator: the initial history before the
/// start, Hermite interpolation over completed steps, and the stage state at
/// the stage time itself.
struct StageHistory<'a> {
    start: f64,
    step: f64,
    horizon: f64,
    values: &'a [CVec],
    derivs: &'a [CVec],
    initial: &'a dyn History,
    time: f64,
    state: &'a CVec,
}

impl History for StageHistory<'_> {
    fn dim(&self) -> usize {
        self.state.len()
    }

    fn at(&self, theta: f64) -> CVec {
        let tiny = 1e-13 * self.step;
        if theta >= -tiny {
            return self.state.clone();
        }
        let time = self.time + theta;
        if time <= self.start + tiny {
            return self
                .initial
                .at((time - self.start).clamp(-self.horizon, 0.0));
        }
        let done = self.derivs.len();
        let last_t = self.start + (done - 1) as f64 * self.step;
        if time <= last_t + tiny {
            let x = ((time - self.start) / self.step).clamp(0.0, (done - 1) as f64);
            let k = (x.floor() as usize).min(done.saturating_sub(2));
            if done == 1 {
                return self.values[0].clone();
            }
            return hermite(
                &self.values[k],
                &self.derivs[k],
                &self.values[k + 1],
                &self.derivs[k + 1],
                self.step,
                x - k as f64,
            );
        }
        // Inside the current step: quadratic through the last completed value,
        // its derivative, and the stage state.
        let u = &self.values[done - 1];
        let d = &self.derivs[done - 1];
        let span = self.time - last_t;
        let x = time - last_t;
        let curv =
            (self.state - u - d * Complex64::new(span, 0.0)) / Complex64::new(span * span, 0.0);
        u + d * Complex64::new(x, 0.0) + curv * Complex64::new(x * x, 0.0)
    }
}

/// Integrates from the history `initial` at time `s` to time `t`.
pub fn propagate_history(
    model: &FdeModel,
    initial: &dyn History,
    s: f64,
    t: f64,
    forcing: Forcing<'_>,
    cfg: &StepperConfig,
) -> Result<Trajectory> {
    if !(t >= s) || !s.is_finite() || !t.is_finite() {
        return Err(Error::Domain(format!(
            "propagation requires t >= s, got s = {s}, t = {t}"
        )));
    }
    if initial.dim() != model.dim() {
        return Err(Error::Domain(format!(
            "initial history of dimension {} for a dimension-{} model",
            initial.dim(),
            model.dim()
        )));
    }
    cfg.validate(model)?;
    let n = model.dim();
    let steps = ((t - s) * cfg.substeps as f64 - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 {
        1.0 / cfg.substeps as f64
    } else {
        (t - s) / steps as f64
    };
    if let Some(min_lag) = model.delays().min_lag() {
        if h > min_lag * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "step {h} exceeds the shortest delay {min_lag}"
            )));
        }
    }

    let horizon = model.horizon();
    let mut values: Vec<CVec> = Vec::with_capacity(steps + 1);
    let mut derivs: Vec<CVec> = Vec::with_capacity(steps + 1);
    values.push(initial.at(0.0));

    let delay_part = |time: f64, state: &CVec, values: &[CVec], derivs: &[CVec]| -> CVec {
        let hist = StageHistory {
            start: s,
            step: h,
            horizon,
            values,
            derivs,
            initial,
            time,
            state,
        };
        let mut out = model.apply_delay(time, &hist);
        forcing.add_to(time, &mut out);
        out
    };

    let constant_a = model.state().is_constant();
    let c = |v: f64| Complex64::new(v, 0.0);
    if constant_a {
        let a = model.state().eval(0.0);
        let e_half = expm(&(&a * c(0.5 * h)));
        let e_full = &e_half * &e_half;
        for k in 0..steps {
            let tn = s + k as f64 * h;
            let u = values[k].clone();
            let k1 = delay_part(tn, &u, &values, &derivs);
            derivs.push(&a * &u + &k1);
            let y2 = &e_half * (&u + &k1 * c(0.5 * h));
            let k2 = delay_part(tn + 0.5 * h, &y2, &values, &derivs);
            let y3 = &e_half * &u + &k2 * c(0.5 * h);
            let k3 = delay_part(tn + 0.5 * h, &y3, &values, &derivs);
            let y4 = &e_full * &u + &e_half * &k3 * c(h);
            let k4 = delay_part(tn + h, &y4, &values, &derivs);
            let next =
                &e_full * &u + (&e_full * &k1 + &e_half * (&k2 + &k3) * c(2.0) + k4) * c(h / 6.0);
            values.push(next);
        }
    } else {
        let rhs = |time: f64, state: &CVec, values: &[CVec], derivs: &[CVec]| -> CVec {
            model.state().eval(time) * state + delay_part(time, state, values, derivs)
        };
        for k in 0..steps {
            let tn = s + k as f64 * h;
            let u = values[k].clone();
            let k1 = rhs_first(
                model, tn, &u, s, h, horizon, &values, &derivs, initial, forcing,
            );
            derivs.push(k1.clone());
            let k2 = rhs(tn + 0.5 * h, &(&u + &k1 * c(0.5 * h)), &values, &derivs);
            let k3 = rhs(tn + 0.5 * h, &(&u + &k2 * c(0.5 * h)), &values, &derivs);
            let k4 = rhs(tn + h, &(&u + &k3 * c(h)), &values, &derivs);
            let next = &u + (k1 + (k2 + k3) * c(2.0) + k4) * c(h / 6.0);
            values.push(next);
        }
    }
    let end_state = values[steps].clone();
    let last = rhs_first(
        model, t, &end_state, s, h, horizon, &values, &derivs, initial, forcing,
    );
    derivs.push(last);

    Ok(Trajectory {
        start: s,
        end: t,
        step: h,
        dim: n,
        horizon,
        values,
        derivs,
        initial: None,
        config: *cfg,
        fingerprint: model.fingerprint(),
    })
}

/// Full right-hand side at a step node, where the completed steps end at
/// the previous node.
#[allow(clippy::too_many_arguments)]
fn rhs_first(
    model: &FdeModel,
    time: f64,
    state: &CVec,
    s: f64,
    h: f64,
    horizon: f64,
    values: &[CVec],
    derivs: &[CVec],
    initial: &dyn History,
    forcing: Forcing<'_>,
) -> CVec {
    let hist = StageHistory {
        start: s,
        step: h,
        horizon,
        values: &values[..derivs.len().max(1)],
        derivs,
        initial,
        time,
        state,
    };
    let mut out = model.state().eval(time) * state + model.apply_delay(time, &hist);
    forcing.add_to(time, &mut out);
    out
}

/// Mild solution from the segment `phi` at time `s` to time `t`, with or
/// without the model's forcing.
pub fn propagate(
    model: &FdeModel,
    phi: &Segment,
    s: f64,
    t: f64,
    forcing_on: bool,
    cfg: &StepperConfig,
) -> Result<Trajectory> {
    let forcing = if forcing_on {
        Forcing::Poly(model.forcing())
    } else {
        Forcing::Off
    };
    propagate_segment(model, phi, s, t, forcing, cfg)
}

/// Like [`propagate`] with an arbitrary forcing.
pub fn propagate_segment(
    model: &FdeModel,
    phi: &Segment,
    s: f64,
    t: f64,
    forcing: Forcing<'_>,
    cfg: &StepperConfig,
) -> Result<Trajectory> {
    let mut traj = propagate_history(model, phi, s, t, forcing, cfg)?;
    traj.initial = Some(phi.clone());
    Ok(traj)
}

/// `U(t, s) phi`: the segment at `t` of the homogeneous solution, sampled on `grid`.
pub fn evolution_apply(
    model: &FdeModel,
    phi: &dyn History,
    grid: Arc<ChebGrid>,
    s: f64,
    t: f64,
    cfg: &StepperConfig,
) -> Result<Segment> {
    forced_segment(model, phi, grid, s, t, Forcing::Off, cfg)
}

fn forced_segment(
    model: &FdeModel,
    phi: &dyn History,
    grid: Arc<ChebGrid>,
    s: f64,
    t: f64,
    forcing: Forcing<'_>,
    cfg: &StepperConfig,
) -> Result<Segment> {
    let traj = propagate_history(model, phi, s, t, forcing, cfg)?;
    Ok(traj.segment_at_with(t, grid, phi))
}

/// Segment at `t0` of the solution on `[t0 - 1, t0]` that starts from the zero
/// segment and is driven by `c exp(i lambda t)`.
pub fn forced_response_zero_ic(
    model: &FdeModel,
    lambda: f64,
    c: &CVec,
    t0: f64,
    grid: Arc<ChebGrid>,
    cfg: &StepperConfig,
) -> Result<Segment> {
    let zero = ZeroHistory { dim: model.dim() };
    forced_segment(
        model,
        &zero,
        grid,
        t0 - 1.0,
        t0,
        Forcing::Single {
            frequency: lambda,
            coefficient: c,
        },
        cfg,
    )
}

/// Tent profile `(n theta + 1)` on `[-1/n, 0]`, zero before.
pub fn gamma_profile(n: u32, theta: f64) -> f64 {
    let nf = n as f64;
    if theta < -1.0 / nf {
        0.0
    } else {
        nf * theta + 1.0
    }
}

/// The exact tent segment `theta -> gamma_profile(n, theta) x`.
#[derive(Debug, Clone)]
pub struct GammaHistory {
    pub n: u32,
    pub x: CVec,
}

impl History for GammaHistory {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn at(&self, theta: f64) -> CVec {
        &self.x * Complex64::new(gamma_profile(self.n, theta), 0.0)
    }
}

/// The tent embedding sampled on `grid`.
pub fn gamma_embed(n: u32, x: &CVec, grid: Arc<ChebGrid>) -> Result<Segment> {
    if n == 0 || 1.0 / n as f64 > grid.horizon() {
        return Err(Error::Domain(format!(
            "tent width 1/{n} exceeds the delay horizon {}",
            grid.horizon()
        )));
    }
    let g = GammaHistory { n, x: x.clone() };
    Ok(Segment::sample(grid, &g))
}

/// Quadrature nodes used by [`vcf_gamma_oracle`] over one unit of time.
pub const VCF_QUADRATURE_NODES: usize = 1024;

/// `int_{t0-1}^{t0} U(t0, s) Gamma^n f(s) ds` for `f(s) = c exp(i lambda s)`,
/// by the composite trapezoid rule over `s` with one homogeneous propagation
/// per node. Only meant as an independent check of [`forced_response_zero_ic`].
pub fn vcf_gamma_oracle(
    model: &FdeModel,
    lambda: f64,
    c: &CVec,
    t0: f64,
    n: u32,
    grid: Arc<ChebGrid>,
    cfg: &StepperConfig,
) -> Result<Segment> {
    if n == 0 || 1.0 / n as f64 > model.horizon() {
        return Err(Error::Domain(format!(
            "tent width 1/{n} exceeds the delay horizon {}",
            model.horizon()
        )));
    }
    let k = VCF_QUADRATURE_NODES;
    let parts: Vec<Result<CVec>> = (0..=k)
        .into_par_iter()
        .map(|j| {
            let s = t0 - 1.0 + j as f64 / k as f64;
            let fs = c * Complex64::from_polar(1.0, lambda * s);
            let tent = GammaHistory { n, x: fs };
            let seg = evolution_apply(model, &tent, grid.clone(), s, t0, cfg)?;
            let w = if j == 0 || j == k { 0.5 } else { 1.0 } / k as f64;
            Ok(seg.into_coords() * Complex64::new(w, 0.0))
        })
        .collect();
    let mut acc = cvec_zeros(grid.len() * model.dim());
    for p in parts {
        acc += p?;
    }
    Segment::from_coords(grid, model.dim(), acc)
}

/// A `C_r`-valued function sampled at `start + k * step`.
#[derive(Debug, Clone)]
pub struct SegmentSeries {
    pub start: f64,
    pub step: f64,
    pub segments: Vec<Segment>,
}

impl SegmentSeries {
    fn at(&self, time: f64) -> Option<Segment> {
        let x = (time - self.start) / self.step;
        let last = (self.segments.len() - 1) as f64;
        if x < -1e-9 || x > last + 1e-9 {
            return None;
        }
        let x = x.clamp(0.0, last);
        let k = x.floor() as usize;
        let frac = x - k as f64;
        if frac < 1e-9 || k + 1 >= self.segments.len() {
            return Some(self.segments[k.min(self.segments.len() - 1)].clone());
        }
        if frac > 1.0 - 1e-9 {
            return Some(self.segments[k + 1].clone());
        }
        Some(
            self.segments[k]
                .scale(Complex64::new(1.0 - frac, 0.0))
                .add(&self.segments[k + 1].scale(Complex64::new(frac, 0.0))),
        )
    }
}

/// `(T^h g)(t) = U(t, t - h) g(t - h)` at every sample time `t` of `g` for
/// which `t - h` is still covered by the samples.
pub fn evolution_semigroup_apply(
    model: &FdeModel,
    g: &SegmentSeries,
    h: f64,
    cfg: &StepperConfig,
) -> Result<SegmentSeries> {
    if !(h >= 0.0) {
        return Err(Error::Domain(format!(
            "semigroup parameter must be >= 0, got {h}"
        )));
    }
    if g.segments.is_empty() {
        return Err(Error::Domain("empty sample series".into()));
    }
    let first = (h / g.step - 1e-9).ceil().max(0.0) as usize;
    if first >= g.segments.len() {
        return Err(Error::Domain(format!(
            "samples span {} but h = {h}",
            g.step * (g.segments.len() - 1) as f64
        )));
    }
    let out: Result<Vec<Segment>> = (first..g.segments.len())
        .into_par_iter()
        .map(|k| {
            let t = g.start + k as f64 * g.step;
            let src = g
                .at(t - h)
                .ok_or_else(|| Error::Domain(format!("no sample covers time {}", t - h)))?;
            evolution_apply(model, &src, src.grid().clone(), t - h, t, cfg)
        })
        .collect();
    Ok(SegmentSeries {
        start: g.start + first as f64 * g.step,
        step: g.step,
        segments: out?,
    })
}

/// Constants of an exponential bound `|U(t, s)| <= N exp(omega (t - s))`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GrowthBound {
    pub n_const: f64,
    pub omega: f64,
}

/// Estimates `N` and `omega` from the node-coordinate matrices of
/// `U(s0 + tau, s0)` for `tau` on a grid of `(0, 1]`, using
/// `omega = ln |U(s0 + 1, s0)|_inf` so that integer periods are covered exactly.
pub fn exponential_bound(
    model: &FdeModel,
    grid: Arc<ChebGrid>,
    s0: f64,
    cfg: &StepperConfig,
) -> Result<GrowthBound> {
    let n = model.dim() * grid.len();
    let taus: Vec<f64> = (1..=16).map(|k| k as f64 / 16.0).collect();
    let columns: Result<Vec<Vec<CVec>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let phi = Segment::basis(grid.clone(), model.dim(), j);
            let traj = propagate_history(model, &phi, s0, s0 + 1.0, Forcing::Off, cfg)?;
            Ok(taus
                .iter()
                .map(|&tau| {
                    traj.segment_at_with(s0 + tau, grid.clone(), &phi)
                        .into_coords()
                })
                .collect())
        })
        .collect();
    let columns = columns?;
    let norms: Vec<f64> = (0..taus.len())
        .map(|i| norm_inf(&CMat::from_fn(n, n, |r, c| columns[c][i][r])))
        .collect();
    let period_norm = *norms.last().unwrap();
    let omega = period_norm.max(1e-300).ln();
    let n_const = taus
        .iter()
        .zip(&norms)
        .map(|(&tau, &nrm)| nrm * (-omega * tau).exp())
        .fold(1.0, f64::max);
    Ok(GrowthBound { n_const, omega })
}

/// Re-integrates a trajectory over single substeps starting from its own
/// dense output and returns the largest mismatch.
pub fn trajectory_residual(
    model: &FdeModel,
    traj: &Trajectory,
    forcing: Forcing<'_>,
    cfg: &StepperConfig,
) -> Result<f64> {
    let delta = 1.0 / cfg.substeps as f64;
    let span = traj.end() - traj.start();
    if span < 2.0 * delta {
        return Ok(0.0);
    }
    let samples = 32usize;
    let mut worst = 0.0f64;
    for k in 0..samples {
        let t = traj.start() + delta * 1.5 + (span - 2.0 * delta) * k as f64 / (samples - 1) as f64;
        let s = t - delta;
        let hist = FnHistory::new(traj.dim(), |theta| {
            traj.eval(s + theta)
                .unwrap_or_else(|_| cvec_zeros(traj.dim()))
        });
        let re = propagate_history(model, &hist, s, t, forcing, cfg)?;
        worst = worst.max(sup_norm(&(re.end_value() - traj.eval_steps(t))));
    }
    Ok(worst)
}
