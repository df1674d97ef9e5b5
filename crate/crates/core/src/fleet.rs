//! Reference models with closed-form answers, used by `demo` and the tests.
//!
//! | key | model |
//! |-----|-------|
//! | a | `x' = -x` |
//! | b | `x' = (-1 + cos 2 pi t) x` |
//! | c | `x' = -x(t - 1)` |
//! | d | `x' = -(pi/2) x(t - 1)` |
//! | e | `x' = -x + exp(i t)` |
//! | f | `x' = -0.5 x(t - 1) + exp(i t) + 0.4 exp(i sqrt2 t)` |

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use crate::apfun::TrigPolynomial;
use crate::error::Result;
use crate::linalg::{CMat, I, ONE};
use crate::monodromy::MonodromyOperator;
use crate::phasespace::{FdeModel, MatrixFn};
use crate::solver::{solve_ap, SolverConfig};

pub const KEYS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn model_a() -> FdeModel {
    FdeModel::builder(1, 1.0)
        .state(MatrixFn::scalar(-1.0))
        .build()
        .expect("valid model")
}

pub fn model_b() -> FdeModel {
    let m = |v: f64| CMat::from_element(1, 1, c(v, 0.0));
    FdeModel::builder(1, 1.0)
        .state(MatrixFn::Fourier(vec![
            (-1, m(0.5)),
            (0, m(-1.0)),
            (1, m(0.5)),
        ]))
        .build()
        .expect("valid model")
}

pub fn model_c() -> FdeModel {
    delay_model(-1.0, &[])
}

pub fn model_d() -> FdeModel {
    delay_model(-FRAC_PI_2, &[])
}

pub fn model_e() -> FdeModel {
    FdeModel::builder(1, 1.0)
        .state(MatrixFn::scalar(-1.0))
        .forcing(TrigPolynomial::scalar(&[(1.0, ONE)]))
        .build()
        .expect("valid model")
}

pub fn model_f() -> FdeModel {
    delay_model(-0.5, &[(1.0, ONE), (SQRT_2, c(0.4, 0.0))])
}

/// `x' = 1`: the constant forcing sits on the multiplier 1.
pub fn constant_forcing() -> FdeModel {
    FdeModel::builder(1, 1.0)
        .forcing(TrigPolynomial::scalar(&[(0.0, ONE)]))
        .build()
        .expect("valid model")
}

/// Model (d) driven by `exp(i lambda t)`.
pub fn model_d_forced(lambda: f64) -> FdeModel {
    delay_model(-FRAC_PI_2, &[(lambda, ONE)])
}

/// `x' = b x(t - 1) + sum c_k exp(i lambda_k t)` with `r = 1`.
pub fn delay_model(b: f64, forcing: &[(f64, Complex64)]) -> FdeModel {
    FdeModel::builder(1, 1.0)
        .delay(1.0, MatrixFn::scalar(b))
        .forcing(TrigPolynomial::scalar(forcing))
        .build()
        .expect("valid model")
}

pub fn model(key: &str) -> Option<FdeModel> {
    Some(match key {
        "a" => model_a(),
        "b" => model_b(),
        "c" => model_c(),
        "d" => model_d(),
        "e" => model_e(),
        "f" => model_f(),
        _ => return None,
    })
}

/// Root of `lambda = -exp(-lambda)` in the upper half plane near
/// `-0.3181 + 1.3372 i`, by complex Newton iteration.
pub fn delay_root() -> Complex64 {
    let mut z = c(-0.3, 1.3);
    for _ in 0..50 {
        let e = (-z).exp();
        let step = (z + e) / (ONE - e);
        z -= step;
        if step.norm() < 1e-16 {
            break;
        }
    }
    z
}

/// Amplitude of `exp(i lambda t)` in the periodic response of
/// `x' = a x + b x(t - 1) + c exp(i lambda t)`: `c / (i lambda - a - b exp(-i lambda))`.
pub fn harmonic_amplitude(a: f64, b: f64, lambda: f64, coeff: Complex64) -> Complex64 {
    coeff / (I * lambda - a - b * Complex64::from_polar(1.0, -lambda))
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoRow {
    pub model: String,
    pub quantity: String,
    pub oracle: Complex64,
    pub computed: Complex64,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn row(
    model: &str,
    quantity: &str,
    oracle: Complex64,
    computed: Complex64,
    tolerance: f64,
) -> DemoRow {
    let error = (oracle - computed).norm();
    DemoRow {
        model: model.into(),
        quantity: quantity.into(),
        oracle,
        computed,
        error,
        tolerance,
        pass: error <= tolerance,
    }
}

fn nearest(eigs: &[Complex64], target: Complex64) -> Complex64 {
    *eigs
        .iter()
        .min_by(|a, b| (*a - target).norm().total_cmp(&(*b - target).norm()))
        .expect("nonempty spectrum")
}

/// Runs one fleet model and compares against its oracle.
pub fn demo_row(key: &str, cfg: &SolverConfig) -> Result<Option<DemoRow>> {
    let Some(model) = model(key) else {
        return Ok(None);
    };
    let e1 = c((-1f64).exp(), 0.0);
    let out = match key {
        "a" | "b" => {
            let m = MonodromyOperator::assemble(&model, 1.0, &cfg.monodromy)?;
            row(
                key,
                "leading multiplier",
                e1,
                m.leading_eigenvalues(1)[0],
                1e-8,
            )
        }
        "c" => {
            let m = MonodromyOperator::assemble(&model, 1.0, &cfg.monodromy)?;
            let target = delay_root().exp();
            row(
                key,
                "dominant multiplier",
                target,
                nearest(m.eigenvalues(), target),
                1e-6,
            )
        }
        "d" => {
            let m = MonodromyOperator::assemble(&model, 1.0, &cfg.monodromy)?;
            row(key, "multiplier at i", I, nearest(m.eigenvalues(), I), 1e-6)
        }
        "e" => {
            let sol = solve_ap(&model, cfg)?;
            let amp = sol.amplitude(1.0).map_or(c(f64::NAN, f64::NAN), |v| v[0]);
            row(
                key,
                "amplitude at 1",
                harmonic_amplitude(-1.0, 0.0, 1.0, ONE),
                amp,
                1e-7,
            )
        }
        "f" => {
            let sol = solve_ap(&model, cfg)?;
            let a1 = sol.amplitude(1.0).map_or(c(f64::NAN, f64::NAN), |v| v[0]);
            let a2 = sol
                .amplitude(SQRT_2)
                .map_or(c(f64::NAN, f64::NAN), |v| v[0]);
            let o1 = harmonic_amplitude(0.0, -0.5, 1.0, ONE);
            let o2 = harmonic_amplitude(0.0, -0.5, SQRT_2, c(0.4, 0.0));
            // Report the worse of the two amplitudes.
            if (a2 - o2).norm() > (a1 - o1).norm() {
                row(key, "amplitude at sqrt2", o2, a2, 1e-6)
            } else {
                row(key, "amplitude at 1", o1, a1, 1e-6)
            }
        }
        _ => unreachable!(),
    };
    Ok(Some(out))
}

/// Runs the fleet, optionally restricted to `only`.
pub fn run_demo(cfg: &SolverConfig, only: Option<&[String]>) -> Result<Vec<DemoRow>> {
    let mut rows = Vec::new();
    for key in KEYS {
        if only.is_some_and(|o| !o.iter().any(|k| k == key)) {
            continue;
        }
        if let Some(r) = demo_row(key, cfg)? {
            rows.push(r);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_root_satisfies_the_characteristic_equation() {
        let z = delay_root();
        assert!((z + (-z).exp()).norm() < 1e-14);
        assert!((z.re + 0.318_131_505).abs() < 1e-9 && (z.im - 1.337_235_701).abs() < 1e-9);
    }

    #[test]
    fn quarter_wave_root_by_substitution() {
        let z = I * FRAC_PI_2;
        assert!((z + FRAC_PI_2 * (-z).exp()).norm() < 1e-15);
    }

    #[test]
    fn amplitude_oracles() {
        let e = harmonic_amplitude(-1.0, 0.0, 1.0, ONE);
        assert!((e - ONE / (ONE + I)).norm() < 1e-15);
        let f1 = harmonic_amplitude(0.0, -0.5, 1.0, ONE);
        assert!((f1 - ONE / (I + 0.5 * Complex64::from_polar(1.0, -1.0))).norm() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_skipped() {
        assert!(model("z").is_none());
        let rows = run_demo(&SolverConfig::default(), Some(&[])).unwrap();
        assert!(rows.is_empty());
    }
}
