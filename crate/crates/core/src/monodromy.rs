//! The period map `U(t0, t0 - 1)` as a dense matrix on segment coordinates.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::apfun::{CircleSet, ANGLE_MERGE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, min_singular_value, norm_inf, CMat, Factored};
use crate::phasespace::{ChebGrid, FdeModel, Segment, DEFAULT_M};
use crate::propagator::{evolution_apply, StepperConfig};

pub const DEFAULT_UNIT_BAND_TOL: f64 = 1e-6;
pub const DEFAULT_RESOLVENT_GUARD: f64 = 1e-8;
/// Eigenvalues at or below this modulus are left out of invariance checks.
pub const SMALL_MULTIPLIER: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonodromyConfig {
    /// Chebyshev intervals per segment.
    pub m: usize,
    pub stepper: StepperConfig,
    pub unit_band_tol: f64,
}

impl Default for MonodromyConfig {
    fn default() -> Self {
        MonodromyConfig {
            m: DEFAULT_M,
            stepper: StepperConfig::default(),
            unit_band_tol: DEFAULT_UNIT_BAND_TOL,
        }
    }
}

impl MonodromyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=256).contains(&self.m) {
            return Err(Error::Config(format!(
                "m must lie in [2, 256], got {}",
                self.m
            )));
        }
        if !(self.unit_band_tol > 0.0) {
            return Err(Error::Config("unit band tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Dense realization of `U(t0, t0 - 1)` with its eigenvalues.
#[derive(Debug, Clone)]
pub struct MonodromyOperator {
    base_time: f64,
    matrix: CMat,
    eigenvalues: Vec<Complex64>,
    grid: Arc<ChebGrid>,
    model: FdeModel,
    config: MonodromyConfig,
}

/// Unit-circle eigenvalues after the cross-resolution check.
#[derive(Debug, Clone, Serialize)]
pub struct UnitCircleReport {
    pub set: CircleSet,
    /// Band eigenvalues that were reproduced at twice the resolution.
    pub confirmed: Vec<Complex64>,
    /// Band eigenvalues that were not.
    pub spurious: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvarianceReport {
    /// Hausdorff distance between the eigenvalues of modulus above
    /// [`SMALL_MULTIPLIER`] at the two base times.
    pub hausdorff: f64,
    /// `|M(t0 + 1) - M(t0)|_inf`.
    pub periodicity_gap: f64,
}

/// Solution of `(z I - M) phi = g`.
#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub phi: Segment,
    pub condition_estimate: f64,
    pub backward_error: f64,
    /// `min |z - mu|` over the eigenvalues.
    pub distance: f64,
}

impl MonodromyOperator {
    /// Builds the matrix column by column: column `j` holds the coordinates of
    /// `U(t0, t0 - 1)` applied to the `j`-th basis segment.
    pub fn assemble(model: &FdeModel, t0: f64, cfg: &MonodromyConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = Arc::new(ChebGrid::new(model.horizon(), cfg.m)?);
        let n = model.dim() * grid.len();
        let columns: Result<Vec<Segment>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let phi = Segment::basis(grid.clone(), model.dim(), j);
                evolution_apply(model, &phi, grid.clone(), t0 - 1.0, t0, &cfg.stepper)
            })
            .collect();
        let columns = columns?;
        let matrix = CMat::from_fn(n, n, |r, c| columns[c].coords()[r]);
        let eigenvalues = eigenvalues(&matrix)?;
        Ok(MonodromyOperator {
            base_time: t0,
            matrix,
            eigenvalues,
            grid,
            model: model.clone(),
            config: *cfg,
        })
    }

    pub fn base_time(&self) -> f64 {
        self.base_time
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn grid(&self) -> &Arc<ChebGrid> {
        &self.grid
    }

    pub fn config(&self) -> &MonodromyConfig {
        &self.config
    }

    pub fn model(&self) -> &FdeModel {
        &self.model
    }

    /// Eigenvalues sorted by decreasing modulus.
    pub fn leading_eigenvalues(&self, count: usize) -> Vec<Complex64> {
        let mut ev = self.eigenvalues.clone();
        ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        ev.truncate(count);
        ev
    }

    /// `max_mu sigma_min(M - mu I) / |M|_inf`.
    pub fn eigen_backward_error(&self) -> Result<f64> {
        let scale = norm_inf(&self.matrix).max(f64::MIN_POSITIVE);
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for &mu in &self.eigenvalues {
            let shifted = &self.matrix - CMat::identity(n, n) * mu;
            worst = worst.max(min_singular_value(&shifted)? / scale);
        }
        Ok(worst)
    }

    fn band_candidates(&self) -> Vec<Complex64> {
        let tol = self.config.unit_band_tol;
        self.eigenvalues
            .iter()
            .copied()
            .filter(|mu| (mu.norm() - 1.0).abs() <= tol)
            .collect()
    }

    /// Band eigenvalues `||mu| - 1| <= tol`, each confirmed against the
    /// spectrum recomputed at twice the resolution.
    pub fn unit_circle_report(&self) -> Result<UnitCircleReport> {
        let candidates = self.band_candidates();
        if candidates.is_empty() {
            return Ok(UnitCircleReport {
                set: CircleSet::empty(),
                confirmed: Vec::new(),
                spurious: Vec::new(),
            });
        }
        let fine_cfg = MonodromyConfig {
            m: 2 * self.config.m,
            ..self.config
        };
        let fine = MonodromyOperator::assemble(&self.model, self.base_time, &fine_cfg)?;
        let reach = 10.0 * self.config.unit_band_tol;
        let (confirmed, spurious): (Vec<Complex64>, Vec<Complex64>) = candidates
            .into_iter()
            .partition(|mu| fine.eigenvalues.iter().any(|nu| (mu - nu).norm() <= reach));
        for mu in &spurious {
            log::warn!(
                "eigenvalue {mu} near the unit circle was not reproduced at m = {}; treated as spurious",
                fine_cfg.m
            );
        }
        let set = CircleSet::from_angles(confirmed.iter().map(|mu| mu.arg()), ANGLE_MERGE_TOL);
        Ok(UnitCircleReport {
            set,
            confirmed,
            spurious,
        })
    }

    /// Angles of the confirmed unit-circle eigenvalues.
    pub fn unit_circle_spectrum(&self) -> Result<CircleSet> {
        Ok(self.unit_circle_report()?.set)
    }

    /// Distance from `z` to the computed spectrum.
    pub fn spectral_distance(&self, z: Complex64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|mu| (z - mu).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// `(z I - M)^{-1} g` with the default guard.
    pub fn resolvent_solve(&self, z: Complex64, g: &Segment) -> Result<ResolventSolution> {
        self.resolvent_solve_guarded(z, g, DEFAULT_RESOLVENT_GUARD)
    }

    /// `(z I - M)^{-1} g`, refused when `z` lies within `guard` of an eigenvalue.
    pub fn resolvent_solve_guarded(
        &self,
        z: Complex64,
        g: &Segment,
        guard: f64,
    ) -> Result<ResolventSolution> {
        if g.coords().len() != self.matrix.nrows() {
            return Err(Error::Domain(format!(
                "segment with {} coordinates for a {}-dimensional operator",
                g.coords().len(),
                self.matrix.nrows()
            )));
        }
        let distance = self.spectral_distance(z);
        if distance <= guard {
            return Err(Error::NearSingular { distance, guard });
        }
        let n = self.matrix.nrows();
        let a = CMat::identity(n, n) * z - &self.matrix;
        let solve = Factored::new(a).solve(g.coords()).map_err(|e| match e {
            Error::NearSingular { .. } => Error::NearSingular { distance, guard },
            other => other,
        })?;
        Ok(ResolventSolution {
            phi: Segment::from_coords(self.grid.clone(), self.model.dim(), solve.x)?,
            condition_estimate: solve.condition_estimate,
            backward_error: solve.backward_error,
            distance,
        })
    }
}

/// Hausdorff distance between two finite point sets (infinite when exactly
/// one is empty).
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let one_way = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| {
                y.iter()
                    .map(|q| (p - q).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Compares the nonzero spectra of `M(t0)` and `M(t1)` and measures how far
/// `M(t0 + 1)` is from `M(t0)`.
pub fn multiplier_invariance_check(
    model: &FdeModel,
    t0: f64,
    t1: f64,
    cfg: &MonodromyConfig,
) -> Result<InvarianceReport> {
    let m0 = MonodromyOperator::assemble(model, t0, cfg)?;
    let m1 = MonodromyOperator::assemble(model, t1, cfg)?;
    let big = |m: &MonodromyOperator| -> Vec<Complex64> {
        m.eigenvalues
            .iter()
            .copied()
            .filter(|mu| mu.norm() > SMALL_MULTIPLIER)
            .collect()
    };
    let hausdorff = hausdorff(&big(&m0), &big(&m1));
    let shifted = MonodromyOperator::assemble(model, t0 + 1.0, cfg)?;
    let periodicity_gap = norm_inf(&(shifted.matrix - &m0.matrix));
    Ok(InvarianceReport {
        hausdorff,
        periodicity_gap,
    })
}
