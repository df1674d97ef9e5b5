//! Resonance classification, construction of the almost periodic solution
//! one forcing frequency at a time, and its verification.

mod construct;
mod verify;

use num_complex::Complex64;
use serde::Serialize;

pub use construct::{solve_ap, solve_ap_with, ApComponent, ApSolution};
pub use verify::{
    ap_certificate, decompose_solution, fixed_point_gap, residual, spectrum_containment_check,
    uniqueness_check, ApCertificate, UniquenessReport, CONTAINMENT_SAMPLES_PER_UNIT,
};

use crate::apfun::{circle_distance, circle_image, CircleSet, TrigPolynomial, ANGLE_MERGE_TOL};
use crate::error::Result;
use crate::linalg::{CMat, CVec, Factored};
use crate::monodromy::{MonodromyConfig, MonodromyOperator, DEFAULT_RESOLVENT_GUARD};
use crate::phasespace::FdeModel;

pub const DEFAULT_RESONANCE_TOL: f64 = 1e-3;
pub const DEFAULT_SOLVE_TOL: f64 = 1e-8;

/// Anything that can be evaluated as a C^n-valued function of time.
pub trait ApFunction: Sync {
    fn dim(&self) -> usize;
    fn value(&self, t: f64) -> CVec;
}

impl ApFunction for TrigPolynomial {
    fn dim(&self) -> usize {
        TrigPolynomial::dim(self)
    }

    fn value(&self, t: f64) -> CVec {
        self.eval(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub monodromy: MonodromyConfig,
    /// Circle distance separating `non_resonant` from `near_resonant`.
    pub resonance_tol: f64,
    /// Circle distance at or below which two points coincide (`resonant`).
    pub angle_merge_tol: f64,
    pub solve_tol: f64,
    /// Smallest admissible distance from `exp(i lambda)` to the spectrum.
    pub guard: f64,
    /// Solve near-resonant problems anyway.
    pub force: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            monodromy: MonodromyConfig::default(),
            resonance_tol: DEFAULT_RESONANCE_TOL,
            angle_merge_tol: ANGLE_MERGE_TOL,
            solve_tol: DEFAULT_SOLVE_TOL,
            guard: DEFAULT_RESOLVENT_GUARD,
            force: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    NonResonant,
    NearResonant,
    Resonant,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::NonResonant => "non_resonant",
            Classification::NearResonant => "near_resonant",
            Classification::Resonant => "resonant",
        }
    }
}

/// Per forcing frequency: where it lands on the circle and how well posed
/// its linear solve is.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyCondition {
    pub frequency: f64,
    pub angle: f64,
    /// Circle distance to the nearest unit-circle multiplier.
    pub separation: f64,
    /// Angle of that multiplier, if any.
    pub nearest_multiplier: Option<f64>,
    /// Condition estimate of `exp(i lambda) I - M`.
    pub condition_estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResonanceReport {
    pub sigma_gamma: CircleSet,
    pub forcing_image: CircleSet,
    /// Infinite when either set is empty.
    pub min_separation: f64,
    pub classification: Classification,
    pub per_frequency: Vec<FrequencyCondition>,
    /// Unit-band eigenvalues rejected by the cross-resolution check.
    pub spurious: Vec<Complex64>,
}

/// Classifies the forcing of `model` against the unit-circle multipliers.
pub fn check_resonance(model: &FdeModel, cfg: &SolverConfig) -> Result<ResonanceReport> {
    let m = MonodromyOperator::assemble(model, 1.0, &cfg.monodromy)?;
    check_resonance_with(&m, model.forcing(), cfg)
}

/// Same as [`check_resonance`] with an already assembled operator.
pub fn check_resonance_with(
    m: &MonodromyOperator,
    forcing: &TrigPolynomial,
    cfg: &SolverConfig,
) -> Result<ResonanceReport> {
    let unit = m.unit_circle_report()?;
    let sigma_gamma = unit.set;
    let forcing_image = circle_image(&forcing.bohr_spectrum());
    let n = m.matrix().nrows();
    let per_frequency = forcing
        .terms()
        .iter()
        .map(|term| {
            let angle = term.frequency.angle();
            let nearest =
                sigma_gamma.angles().iter().copied().min_by(|a, b| {
                    circle_distance(*a, angle).total_cmp(&circle_distance(*b, angle))
                });
            let separation = nearest.map_or(f64::INFINITY, |a| circle_distance(a, angle));
            let z = Complex64::from_polar(1.0, term.frequency.0);
            let condition_estimate =
                Factored::new(CMat::identity(n, n) * z - m.matrix()).condition_estimate();
            FrequencyCondition {
                frequency: term.frequency.0,
                angle,
                separation,
                nearest_multiplier: nearest,
                condition_estimate,
            }
        })
        .collect::<Vec<_>>();
    let min_separation = sigma_gamma.min_separation(&forcing_image);
    Ok(ResonanceReport {
        classification: classify(min_separation, cfg),
        sigma_gamma,
        forcing_image,
        min_separation,
        per_frequency,
        spurious: unit.spurious,
    })
}

fn classify(separation: f64, cfg: &SolverConfig) -> Classification {
    if separation <= cfg.angle_merge_tol {
        Classification::Resonant
    } else if separation > cfg.resonance_tol {
        Classification::NonResonant
    } else {
        Classification::NearResonant
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_boundaries() {
        let cfg = SolverConfig::default();
        assert_eq!(classify(f64::INFINITY, &cfg), Classification::NonResonant);
        assert_eq!(classify(0.0, &cfg), Classification::Resonant);
        assert_eq!(classify(1e-9, &cfg), Classification::Resonant);
        assert_eq!(classify(1e-3, &cfg), Classification::NearResonant);
        assert_eq!(classify(2e-3, &cfg), Classification::NonResonant);
    }

    #[test]
    fn widening_the_tolerance_never_unresonates() {
        for &sep in &[0.0, 1e-10, 1e-6, 1e-3, 0.1, 1.0] {
            let mut last = classify(sep, &SolverConfig::default());
            for &tol in &[1e-3, 1e-2, 0.5, 4.0] {
                let cfg = SolverConfig {
                    resonance_tol: tol,
                    ..Default::default()
                };
                let c = classify(sep, &cfg);
                if last != Classification::NonResonant {
                    assert_ne!(c, Classification::NonResonant);
                }
                last = c;
            }
        }
    }
}
