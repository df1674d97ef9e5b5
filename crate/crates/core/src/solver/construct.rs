use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{check_resonance_with, ApFunction, Classification, ResonanceReport, SolverConfig};
use crate::apfun::TrigPolynomial;
use crate::error::{Error, Result};
use crate::linalg::{cvec_zeros, CVec, ONE};
use crate::monodromy::MonodromyOperator;
use crate::phasespace::{ChebGrid, FdeModel, Segment};
use crate::propagator::{
    forced_response_zero_ic, propagate_segment, Forcing, StepperConfig, Trajectory,
};

/// The part of the solution driven by one forcing term `c exp(i lambda t)`.
///
/// `trajectory` is the solution on `[0, 1]` started from `phi` at time 0;
/// its segment at time 1 is `exp(i lambda) phi`, so the component on all of
/// R is `exp(i lambda floor(t)) y({t})`.
#[derive(Debug, Clone)]
pub struct ApComponent {
    pub frequency: f64,
    pub coefficient: CVec,
    pub phi: Segment,
    pub trajectory: Trajectory,
    /// Condition estimate of the solve that produced `phi`, when solved.
    pub condition_estimate: Option<f64>,
}

impl ApComponent {
    fn value(&self, t: f64) -> CVec {
        let n = t.floor();
        let frac = t - n;
        self.trajectory.eval_steps(frac) * Complex64::from_polar(1.0, self.frequency * n)
    }

    /// Mean of `y(t) exp(-i lambda t)` over one period: the Bohr coefficient
    /// of this component at its own frequency.
    pub fn amplitude(&self) -> CVec {
        self.fourier_coefficient(0, 256)
    }

    /// Coefficient of `exp(i (lambda + 2 pi j) t)`, from `samples` trapezoid
    /// nodes of the periodic function `y(t) exp(-i lambda t)`.
    fn fourier_coefficient(&self, j: i64, samples: usize) -> CVec {
        let mut acc = cvec_zeros(self.coefficient.len());
        for k in 0..samples {
            let t = k as f64 / samples as f64;
            let phase = -(self.frequency + std::f64::consts::TAU * j as f64) * t;
            acc.axpy(
                Complex64::from_polar(1.0, phase),
                &self.trajectory.eval_steps(t),
                ONE,
            );
        }
        acc / Complex64::new(samples as f64, 0.0)
    }

    /// `|y(1) - exp(i lambda) phi|` over the segment nodes.
    pub fn fixed_point_gap(&self) -> Result<f64> {
        let end = self.trajectory.segment_at(1.0)?;
        let z = Complex64::from_polar(1.0, self.frequency);
        Ok(end.sup_distance(&self.phi.scale(z)))
    }
}

/// Almost periodic solution `u = sum_k u^(k)`, one component per forcing
/// frequency.
#[derive(Debug, Clone)]
pub struct ApSolution {
    dim: usize,
    model: FdeModel,
    components: Vec<ApComponent>,
    stepper: StepperConfig,
    report: Option<ResonanceReport>,
}

impl ApSolution {
    /// Rebuilds a solution from its initial segments by integrating each
    /// component over one period.
    pub fn from_segments(
        model: &FdeModel,
        parts: Vec<(f64, CVec, Segment)>,
        stepper: &StepperConfig,
    ) -> Result<ApSolution> {
        let components: Result<Vec<ApComponent>> = parts
            .into_par_iter()
            .map(|(frequency, coefficient, phi)| {
                if coefficient.len() != model.dim() || phi.coords().len() % model.dim() != 0 {
                    return Err(Error::Domain("component dimension mismatch".into()));
                }
                let trajectory = propagate_segment(
                    model,
                    &phi,
                    0.0,
                    1.0,
                    Forcing::Single {
                        frequency,
                        coefficient: &coefficient,
                    },
                    stepper,
                )?;
                Ok(ApComponent {
                    frequency,
                    coefficient,
                    phi,
                    trajectory,
                    condition_estimate: None,
                })
            })
            .collect();
        Ok(ApSolution {
            dim: model.dim(),
            model: model.clone(),
            components: components?,
            stepper: *stepper,
            report: None,
        })
    }

    pub fn model(&self) -> &FdeModel {
        &self.model
    }

    pub fn components(&self) -> &[ApComponent] {
        &self.components
    }

    pub fn stepper(&self) -> &StepperConfig {
        &self.stepper
    }

    /// The resonance report the solve was based on.
    pub fn report(&self) -> Option<&ResonanceReport> {
        self.report.as_ref()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.frequency).collect()
    }

    pub fn eval(&self, t: f64) -> CVec {
        let mut out = cvec_zeros(self.dim);
        for c in &self.components {
            out += c.value(t);
        }
        out
    }

    /// Bohr coefficient at the component frequency closest to `frequency`.
    pub fn amplitude(&self, frequency: f64) -> Option<CVec> {
        self.components
            .iter()
            .find(|c| (c.frequency - frequency).abs() <= 1e-10 * frequency.abs().max(1.0))
            .map(ApComponent::amplitude)
    }

    /// Trigonometric polynomial with the harmonics `lambda_k + 2 pi j`,
    /// `|j| <= harmonics`, dropping coefficients below `drop_tol`.
    pub fn to_trig_polynomial(&self, harmonics: usize, drop_tol: f64) -> Result<TrigPolynomial> {
        let samples = (4 * harmonics + 4).max(256);
        let mut terms = Vec::new();
        for c in &self.components {
            for j in -(harmonics as i64)..=(harmonics as i64) {
                let a = c.fourier_coefficient(j, samples);
                if a.iter().any(|z| z.norm() > drop_tol) {
                    terms.push((c.frequency + std::f64::consts::TAU * j as f64, a));
                }
            }
        }
        TrigPolynomial::new(self.dim, terms)
    }

    /// Largest fixed-point gap over the components.
    pub fn fixed_point_gap(&self) -> Result<f64> {
        self.components
            .iter()
            .map(ApComponent::fixed_point_gap)
            .try_fold(0.0f64, |acc, g| g.map(|g| acc.max(g)))
    }
}

impl ApFunction for ApSolution {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, t: f64) -> CVec {
        self.eval(t)
    }
}

/// Classifies, then solves `(exp(i lambda_k) I - M) phi_k = G_k` for every
/// forcing term and integrates each component over one period.
pub fn solve_ap(model: &FdeModel, cfg: &SolverConfig) -> Result<ApSolution> {
    let m = MonodromyOperator::assemble(model, 1.0, &cfg.monodromy)?;
    solve_ap_with(&m, cfg)
}

/// Same as [`solve_ap`] with an operator assembled at base time 1.
pub fn solve_ap_with(m: &MonodromyOperator, cfg: &SolverConfig) -> Result<ApSolution> {
    if (m.base_time() - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "operator assembled at base time {}, expected 1",
            m.base_time()
        )));
    }
    let model = m.model();
    let report = check_resonance_with(m, model.forcing(), cfg)?;
    match report.classification {
        Classification::Resonant => {
            let worst = report
                .per_frequency
                .iter()
                .min_by(|a, b| a.separation.total_cmp(&b.separation))
                .expect("resonance implies a forcing term");
            return Err(Error::Resonant {
                frequency: worst.frequency,
                angle: worst.angle,
                multiplier_angle: worst.nearest_multiplier.unwrap_or(f64::NAN),
            });
        }
        Classification::NearResonant if !cfg.force => {
            return Err(Error::NearResonant {
                separation: report.min_separation,
            });
        }
        _ => {}
    }
    let grid: Arc<ChebGrid> = m.grid().clone();
    let stepper = m.config().stepper;
    let components: Result<Vec<ApComponent>> = model
        .forcing()
        .terms()
        .par_iter()
        .map(|term| {
            let lambda = term.frequency.0;
            let g = forced_response_zero_ic(
                model,
                lambda,
                &term.coefficient,
                1.0,
                grid.clone(),
                &stepper,
            )?;
            let z = Complex64::from_polar(1.0, lambda);
            let sol = m.resolvent_solve_guarded(z, &g, cfg.guard)?;
            let trajectory = propagate_segment(
                model,
                &sol.phi,
                0.0,
                1.0,
                Forcing::Single {
                    frequency: lambda,
                    coefficient: &term.coefficient,
                },
                &stepper,
            )?;
            let component = ApComponent {
                frequency: lambda,
                coefficient: term.coefficient.clone(),
                phi: sol.phi,
                trajectory,
                condition_estimate: Some(sol.condition_estimate),
            };
            let gap = component.fixed_point_gap()?;
            if gap > cfg.solve_tol {
                log::warn!(
                    "fixed-point gap {gap:e} at frequency {lambda} exceeds {:e}",
                    cfg.solve_tol
                );
            }
            Ok(component)
        })
        .collect();
    Ok(ApSolution {
        dim: model.dim(),
        model: model.clone(),
        components: components?,
        stepper,
        report: Some(report),
    })
}
