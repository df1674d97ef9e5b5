use rayon::prelude::*;
use serde::Serialize;

use super::{solve_ap, ApFunction, ApSolution, Classification, SolverConfig};
use crate::apfun::{
    bohr_mean_quadrature, search_epsilon_period, CircleSet, Frequency, MeanWindow, TrigPolynomial,
    UniformSamples, FREQ_MERGE_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::sup_norm;
use crate::monodromy::MonodromyConfig;
use crate::phasespace::{FdeModel, FnHistory};
use crate::propagator::{propagate_history, Forcing, StepperConfig};

/// Length of the re-integration window used by [`residual`].
const RESIDUAL_WINDOW: f64 = 1.0 / 16.0;
const RESIDUAL_POINTS_PER_UNIT: usize = 64;
pub const CONTAINMENT_SAMPLES_PER_UNIT: usize = 32;

/// Sup over a grid of `[0, horizon]` of `|u(t) - (U(t, s) u_s + forced part)|`
/// with `s = t - 1/16`, the bracket integrated from the evaluated `u`.
pub fn residual(
    model: &FdeModel,
    u: &dyn ApFunction,
    horizon: f64,
    stepper: &StepperConfig,
) -> Result<f64> {
    if !(horizon >= 1.0) {
        return Err(Error::Precondition(format!(
            "residual horizon must be >= 1, got {horizon}"
        )));
    }
    if u.dim() != model.dim() {
        return Err(Error::Domain(format!(
            "function of dimension {} for a dimension-{} model",
            u.dim(),
            model.dim()
        )));
    }
    let count = (horizon * RESIDUAL_POINTS_PER_UNIT as f64).ceil() as usize;
    let worst: Result<Vec<f64>> = (0..=count)
        .into_par_iter()
        .map(|k| {
            let t = horizon * k as f64 / count as f64;
            let s = t - RESIDUAL_WINDOW;
            let hist = FnHistory::new(u.dim(), |theta| u.value(s + theta));
            let traj =
                propagate_history(model, &hist, s, t, Forcing::Poly(model.forcing()), stepper)?;
            Ok(sup_norm(&(u.value(t) - traj.end_value())))
        })
        .collect();
    Ok(worst?.into_iter().fold(0.0, f64::max))
}

/// Largest Bohr-mean magnitude of `u` over the probe frequencies, averaged
/// over `[-T, T]` with a Blackman-Harris window.
///
/// `spectrum` lists the frequencies `u` is meant to contain; probes must
/// stay away from them.
pub fn spectrum_containment_check(
    u: &dyn ApFunction,
    spectrum: &[f64],
    probes: &[f64],
    half_width: f64,
) -> Result<f64> {
    spectrum_containment_check_windowed(u, spectrum, probes, half_width, MeanWindow::BlackmanHarris)
}

pub fn spectrum_containment_check_windowed(
    u: &dyn ApFunction,
    spectrum: &[f64],
    probes: &[f64],
    half_width: f64,
    window: MeanWindow,
) -> Result<f64> {
    for &p in probes {
        if let Some(&hit) = spectrum.iter().find(|&&l| (l - p).abs() <= FREQ_MERGE_TOL) {
            return Err(Error::Precondition(format!(
                "probe {p} coincides with the spectral frequency {hit}"
            )));
        }
    }
    if probes.is_empty() {
        return Ok(0.0);
    }
    let fastest = probes.iter().fold(1f64, |a, p| a.max(p.abs()));
    let per_unit =
        CONTAINMENT_SAMPLES_PER_UNIT.max((8.0 * fastest / std::f64::consts::PI).ceil() as usize);
    let samples = UniformSamples::symmetric(half_width, per_unit, |t| u.value(t));
    let mut worst = 0.0f64;
    for &p in probes {
        let mean = bohr_mean_quadrature(&samples, Frequency(p), half_width, window)?;
        worst = worst.max(sup_norm(&mean));
    }
    Ok(worst)
}

/// Splits `u` into the part whose circle image lies in `forcing_image` and
/// the part in `sigma_gamma` minus `forcing_image`.
pub fn decompose_solution(
    u: &TrigPolynomial,
    forcing_image: &CircleSet,
    sigma_gamma: &CircleSet,
    guard: f64,
) -> Result<(TrigPolynomial, TrigPolynomial)> {
    let homogeneous = sigma_gamma.difference(forcing_image, guard);
    u.split_by_circle_sets(forcing_image, &homogeneous, guard)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApCertificate {
    pub tau: f64,
    /// `sum_k |c_k| |exp(i lambda_k tau) - 1|` for the forcing (and the
    /// coefficients, when they depend on time).
    pub forcing_bound: f64,
    /// `sup_{t in [0, 1]} |u(t + tau) - u(t)|` on a grid.
    pub witness: f64,
    /// `witness / forcing_bound`, or zero when both vanish.
    pub gain: f64,
}

/// Finds an `eps`-almost period of the forcing below `horizon` and measures
/// how far `u` moves under that shift.
pub fn ap_certificate(
    u: &dyn ApFunction,
    model: &FdeModel,
    eps: f64,
    horizon: f64,
) -> Result<ApCertificate> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let mut spectrum = model.forcing().weighted_spectrum();
    if !model.is_autonomous() {
        let scale = spectrum.iter().map(|&(_, w)| w).sum::<f64>().max(1.0);
        spectrum.push((std::f64::consts::TAU, scale));
    }
    let (tau, forcing_bound) = search_epsilon_period(&spectrum, eps, 1.0, horizon)
        .ok_or(Error::SearchFailure { horizon })?;
    let witness = (0..=256)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 / 256.0;
            sup_norm(&(u.value(t + tau) - u.value(t)))
        })
        .reduce(|| 0.0, f64::max);
    let gain = if forcing_bound > 0.0 {
        witness / forcing_bound
    } else if witness == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(ApCertificate {
        tau,
        forcing_bound,
        witness,
        gain,
    })
}

/// Largest fixed-point gap `|y_k(1) - exp(i lambda_k) phi_k|` of a solution.
pub fn fixed_point_gap(sol: &ApSolution) -> Result<f64> {
    sol.fixed_point_gap()
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub classification: Classification,
    /// Sup over `[0, 2]` of the difference of the two solutions.
    pub difference: f64,
    /// Largest per-frequency condition estimate of the coarse solve.
    pub max_condition: f64,
    pub coarse: (usize, usize),
    pub fine: (usize, usize),
}

/// Solves at `(m, substeps)` and `(2m, 2 substeps)` and compares.
///
/// Near-resonant models are solved regardless and the difference is only
/// informational.
pub fn uniqueness_check(model: &FdeModel, cfg: &SolverConfig) -> Result<UniquenessReport> {
    let coarse_cfg = SolverConfig {
        force: true,
        ..*cfg
    };
    let fine_cfg = SolverConfig {
        monodromy: MonodromyConfig {
            m: 2 * cfg.monodromy.m,
            stepper: StepperConfig {
                substeps: 2 * cfg.monodromy.stepper.substeps,
                ..cfg.monodromy.stepper
            },
            ..cfg.monodromy
        },
        ..coarse_cfg
    };
    let coarse = solve_ap(model, &coarse_cfg)?;
    let fine = solve_ap(model, &fine_cfg)?;
    let difference = (0..=256)
        .map(|k| {
            let t = 2.0 * k as f64 / 256.0;
            sup_norm(&(coarse.eval(t) - fine.eval(t)))
        })
        .fold(0.0, f64::max);
    let report = coarse.report().expect("solve_ap attaches its report");
    let max_condition = report
        .per_frequency
        .iter()
        .map(|f| f.condition_estimate)
        .fold(0.0, f64::max);
    Ok(UniquenessReport {
        classification: report.classification,
        difference,
        max_condition,
        coarse: (cfg.monodromy.m, cfg.monodromy.stepper.substeps),
        fine: (fine_cfg.monodromy.m, fine_cfg.monodromy.stepper.substeps),
    })
}
