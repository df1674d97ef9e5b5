use std::f64::consts::{FRAC_PI_2, SQRT_2, TAU};

use floquet_ap::apfun::{circle_image, CircleSet, Frequency, TrigPolynomial};
use floquet_ap::linalg::{CVec, I, ONE};
use floquet_ap::phasespace::{FdeModel, MatrixFn};
use floquet_ap::solver::*;
use floquet_ap::{fleet, Error};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

/// `c / (i lambda - a - b exp(-i lambda))`, written out here rather than
/// taken from the fleet module.
fn amplitude(a: f64, b: f64, lambda: f64, coeff: Complex64) -> Complex64 {
    coeff / (I * lambda - a - b * Complex64::from_polar(1.0, -lambda))
}

fn sup_over(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (0..=400)
        .map(|k| f(a + (b - a) * k as f64 / 400.0))
        .fold(0.0, f64::max)
}

#[test]
fn classification_examples() {
    let r = check_resonance(&fleet::constant_forcing(), &cfg()).unwrap();
    assert_eq!(r.classification, Classification::Resonant);
    assert_eq!(r.sigma_gamma.angles(), &[0.0]);
    assert_eq!(r.forcing_image.angles(), &[0.0]);
    let r = check_resonance(&fleet::model_e(), &cfg()).unwrap();
    assert_eq!(r.classification, Classification::NonResonant);
    assert!(r.sigma_gamma.is_empty());
    let r = check_resonance(&fleet::model_d_forced(FRAC_PI_2), &cfg()).unwrap();
    assert_eq!(r.classification, Classification::Resonant);
    let r = check_resonance(&fleet::model_d_forced(FRAC_PI_2 + 5e-4), &cfg()).unwrap();
    assert_eq!(r.classification, Classification::NearResonant);
    let r = check_resonance(&fleet::model_d_forced(1.0), &cfg()).unwrap();
    assert_eq!(r.classification, Classification::NonResonant);
}

#[test]
fn closed_form_solutions() {
    let sol = solve_ap(&fleet::model_e(), &cfg()).unwrap();
    let a = amplitude(-1.0, 0.0, 1.0, ONE);
    let err = sup_over(
        |t| (sol.eval(t)[0] - a * Complex64::from_polar(1.0, t)).norm(),
        -3.0,
        3.0,
    );
    assert!(err <= 1e-7, "{err}");
    let model = fleet::delay_model(-0.5, &[(1.0, ONE)]);
    let sol = solve_ap(&model, &cfg()).unwrap();
    let a = amplitude(0.0, -0.5, 1.0, ONE);
    assert!((sol.amplitude(1.0).unwrap()[0] - a).norm() <= 1e-6);
    let zero = solve_ap(&fleet::model_c(), &cfg()).unwrap();
    assert!(zero.components().is_empty());
    assert_eq!(zero.eval(0.7)[0], c(0.0, 0.0));
}

#[test]
fn resonant_and_near_resonant_solves() {
    assert!(matches!(
        solve_ap(&fleet::constant_forcing(), &cfg()),
        Err(Error::Resonant { .. })
    ));
    let near = fleet::model_d_forced(FRAC_PI_2 + 5e-4);
    assert!(matches!(
        solve_ap(&near, &cfg()),
        Err(Error::NearResonant { .. })
    ));
    let forced = SolverConfig {
        force: true,
        ..cfg()
    };
    let sol = solve_ap(&near, &forced).unwrap();
    let a = amplitude(0.0, -FRAC_PI_2, FRAC_PI_2 + 5e-4, ONE);
    let rel = (sol.amplitude(FRAC_PI_2 + 5e-4).unwrap()[0] - a).norm() / a.norm();
    assert!(rel < 1e-4, "{rel}");
}

#[test]
fn superposition() {
    let f1 = fleet::delay_model(-0.5, &[(1.0, ONE)]);
    let f2 = fleet::delay_model(-0.5, &[(SQRT_2, c(0.4, 0.0))]);
    let both = fleet::model_f();
    let (s1, s2, s) = (
        solve_ap(&f1, &cfg()).unwrap(),
        solve_ap(&f2, &cfg()).unwrap(),
        solve_ap(&both, &cfg()).unwrap(),
    );
    let err = sup_over(
        |t| (s.eval(t) - s1.eval(t) - s2.eval(t))[0].norm(),
        -2.0,
        4.0,
    );
    assert!(err < 1e-12, "{err}");
}

#[test]
fn spectrum_of_the_solution_lies_in_the_forcing_image() {
    let model = fleet::model_b()
        .with_forcing(TrigPolynomial::scalar(&[(1.0, ONE)]))
        .unwrap();
    let sol = solve_ap(&model, &cfg()).unwrap();
    let poly = sol.to_trig_polynomial(6, 1e-12).unwrap();
    assert!(
        poly.terms().len() > 1,
        "periodic coefficients create side bands"
    );
    let image = circle_image(&[Frequency(1.0)]);
    for term in poly.terms() {
        assert!(
            image.contains(term.frequency.angle(), 1e-9),
            "{}",
            term.frequency.0
        );
    }
    // the truncated series reproduces the solution
    let err = sup_over(|t| (poly.eval(t) - sol.eval(t))[0].norm(), 0.0, 2.0);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn residuals() {
    let model = fleet::model_e();
    let stepper = cfg().monodromy.stepper;
    let exact = TrigPolynomial::scalar(&[(1.0, amplitude(-1.0, 0.0, 1.0, ONE))]);
    assert!(residual(&model, &exact, 2.0, &stepper).unwrap() <= 1e-8);
    let sol = solve_ap(&model, &cfg()).unwrap();
    let parts: Vec<_> = sol
        .components()
        .iter()
        .map(|k| {
            let bumped = CVec::from_fn(k.phi.coords().len(), |i, _| k.phi.coords()[i] + 0.1);
            let phi = floquet_ap::phasespace::Segment::from_coords(k.phi.grid().clone(), 1, bumped)
                .unwrap();
            (k.frequency, k.coefficient.clone(), phi)
        })
        .collect();
    let bad = ApSolution::from_segments(&model, parts, &stepper).unwrap();
    assert!(residual(&model, &bad, 2.0, &stepper).unwrap() >= 1e-3);
    assert!(residual(&model, &sol, 0.5, &stepper).is_err());
    for key in fleet::KEYS {
        let m = fleet::model(key).unwrap();
        let s = solve_ap(&m, &cfg()).unwrap();
        assert!(residual(&m, &s, 2.0, &stepper).unwrap() <= 1e-7, "{key}");
    }
}

#[test]
fn containment() {
    let sol = solve_ap(&fleet::model_f(), &cfg()).unwrap();
    let probes = [0.0, FRAC_PI_2, 3f64.sqrt()];
    assert!(spectrum_containment_check(&sol, &sol.frequencies(), &probes, 200.0).unwrap() <= 1e-4);
    let zero = TrigPolynomial::zero(1);
    assert_eq!(
        spectrum_containment_check(&zero, &[], &probes, 50.0).unwrap(),
        0.0
    );
    let e = solve_ap(&fleet::model_e(), &cfg()).unwrap();
    assert!(matches!(
        spectrum_containment_check(&e, &e.frequencies(), &[1.0], 50.0),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn decomposition() {
    let model = fleet::model_d_forced(1.0);
    let sol = solve_ap(&model, &cfg()).unwrap();
    let report = sol.report().unwrap();
    let w = sol.to_trig_polynomial(0, 0.0).unwrap();
    let u = w
        .add(&TrigPolynomial::scalar(&[(FRAC_PI_2, c(0.3, 0.0))]))
        .unwrap();
    let (pu, rest) =
        decompose_solution(&u, &report.forcing_image, &report.sigma_gamma, 1e-6).unwrap();
    assert_eq!(pu, w);
    assert_eq!(rest, TrigPolynomial::scalar(&[(FRAC_PI_2, c(0.3, 0.0))]));
    // P is a projection
    let (ppu, none) =
        decompose_solution(&pu, &report.forcing_image, &report.sigma_gamma, 1e-6).unwrap();
    assert_eq!(ppu, pu);
    assert!(none.is_zero());
    let (all, zero) =
        decompose_solution(&w, &report.forcing_image, &report.sigma_gamma, 1e-6).unwrap();
    assert_eq!(all, w);
    assert!(zero.is_zero());
    let clash = CircleSet::from_angles([1.0 + 1e-7], 1e-9);
    assert!(decompose_solution(&u, &report.forcing_image, &clash, 1e-6).is_err());
}

#[test]
fn almost_periods() {
    let e = solve_ap(&fleet::model_e(), &cfg()).unwrap();
    let cert = ap_certificate(&e, &fleet::model_e(), 1e-10, 100.0).unwrap();
    assert!((cert.tau - TAU).abs() < 1e-9, "{cert:?}");
    assert!(cert.witness <= 1e-9);
    let f = solve_ap(&fleet::model_f(), &cfg()).unwrap();
    let cert = ap_certificate(&f, &fleet::model_f(), 0.05, 1e4).unwrap();
    assert!(cert.tau <= 1e4 && cert.forcing_bound <= 0.05);
    assert!(cert.witness <= 0.1, "{cert:?}");
    let zero = TrigPolynomial::zero(1);
    let cert = ap_certificate(&zero, &fleet::model_c(), 0.05, 10.0).unwrap();
    assert_eq!(cert.witness, 0.0);
}

#[test]
fn uniqueness() {
    for key in ["e", "f"] {
        let r = uniqueness_check(&fleet::model(key).unwrap(), &cfg()).unwrap();
        assert!(r.difference <= 1e-6, "{key}: {r:?}");
    }
    let r = uniqueness_check(&fleet::model_c(), &cfg()).unwrap();
    assert_eq!(r.difference, 0.0);
    let near = uniqueness_check(&fleet::model_d_forced(FRAC_PI_2 + 5e-4), &cfg()).unwrap();
    assert_eq!(near.classification, Classification::NearResonant);
    assert!(near.max_condition > 1e3);
    assert!(near.difference.is_finite());
}

#[test]
fn two_dimensional_system() {
    // x1' = -x1 + x2(t - 1), x2' = -2 x2 + exp(2 i t)
    use floquet_ap::linalg::CMat;
    let a = CMat::from_row_slice(
        2,
        2,
        &[c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0)],
    );
    let b = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let model = FdeModel::builder(2, 1.0)
        .state(MatrixFn::Constant(a))
        .delay(1.0, MatrixFn::Constant(b))
        .forcing(TrigPolynomial::new(2, [(2.0, CVec::from_vec(vec![c(0.0, 0.0), ONE]))]).unwrap())
        .build()
        .unwrap();
    let sol = solve_ap(&model, &cfg()).unwrap();
    let x2 = ONE / (2.0 * I + 2.0);
    let x1 = x2 * Complex64::from_polar(1.0, -2.0) / (2.0 * I + 1.0);
    let amp = sol.amplitude(2.0).unwrap();
    assert!(
        (amp[0] - x1).norm() < 1e-7 && (amp[1] - x2).norm() < 1e-7,
        "{amp}"
    );
}
