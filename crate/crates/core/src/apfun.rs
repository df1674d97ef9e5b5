//! Almost periodic functions represented as finite trigonometric polynomials.
//!
//! A [`TrigPolynomial`] is a finite sum `sum_k c_k exp(i lambda_k t)` with
//! vector coefficients. For such functions the Bohr spectrum is the set of
//! exponents, the Fourier (Bohr) coefficients are read off the terms, and
//! the circular spectrum is the image of the exponents on the unit circle.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cvec_zeros, sup_norm, CVec, ONE, ZERO};

/// Frequencies closer than this are the same frequency.
pub const FREQ_MERGE_TOL: f64 = 1e-10;
/// Angles on the unit circle closer than this are the same point.
pub const ANGLE_MERGE_TOL: f64 = 1e-9;

/// A real frequency in radians per unit time.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(pub f64);

impl Frequency {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Image of this frequency on the unit circle, as an angle in `[0, 2pi)`.
    pub fn angle(self) -> f64 {
        normalize_angle(self.0)
    }
}

impl From<f64> for Frequency {
    fn from(v: f64) -> Self {
        Frequency(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub frequency: Frequency,
    pub coefficient: CVec,
}

/// Finite trigonometric polynomial with values in C^n.
///
/// Terms are kept sorted by frequency, with pairwise distinct frequencies
/// and no identically zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    dim: usize,
    terms: Vec<Term>,
}

impl TrigPolynomial {
    pub fn zero(dim: usize) -> Self {
        TrigPolynomial {
            dim,
            terms: Vec::new(),
        }
    }

    /// Builds a canonical polynomial, merging frequencies within [`FREQ_MERGE_TOL`].
    pub fn new(dim: usize, terms: impl IntoIterator<Item = (f64, CVec)>) -> Result<Self> {
        Self::with_merge_tol(dim, terms, FREQ_MERGE_TOL)
    }

    pub fn with_merge_tol(
        dim: usize,
        terms: impl IntoIterator<Item = (f64, CVec)>,
        merge_tol: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain(
                "trig polynomial dimension must be positive".into(),
            ));
        }
        let mut raw: Vec<(f64, CVec)> = Vec::new();
        for (freq, c) in terms {
            if !freq.is_finite() {
                return Err(Error::Domain(format!("non-finite frequency {freq}")));
            }
            if c.len() != dim {
                return Err(Error::Domain(format!(
                    "coefficient of length {} in a dimension-{dim} polynomial",
                    c.len()
                )));
            }
            if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Domain(format!(
                    "non-finite coefficient at frequency {freq}"
                )));
            }
            raw.push((freq, c));
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut merged: Vec<Term> = Vec::with_capacity(raw.len());
        for (freq, c) in raw {
            match merged.last_mut() {
                Some(last) if (freq - last.frequency.0).abs() <= merge_tol => {
                    last.coefficient += c;
                }
                _ => merged.push(Term {
                    frequency: Frequency(freq),
                    coefficient: c,
                }),
            }
        }
        merged.retain(|t| t.coefficient.iter().any(|z| *z != ZERO));
        Ok(TrigPolynomial { dim, terms: merged })
    }

    /// Scalar polynomial from (frequency, coefficient) pairs.
    pub fn scalar(terms: &[(f64, Complex64)]) -> Self {
        Self::new(1, terms.iter().map(|&(f, c)| (f, CVec::from_element(1, c))))
            .expect("finite scalar terms")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, t: f64) -> CVec {
        let mut out = cvec_zeros(self.dim);
        for term in &self.terms {
            let phase = Complex64::from_polar(1.0, term.frequency.0 * t);
            out.axpy(phase, &term.coefficient, ONE);
        }
        out
    }

    /// Bohr coefficient `a(lambda, f)`; zero off the spectrum.
    pub fn fourier_coeff(&self, lambda: Frequency) -> CVec {
        self.terms
            .iter()
            .find(|t| (t.frequency.0 - lambda.0).abs() <= FREQ_MERGE_TOL)
            .map(|t| t.coefficient.clone())
            .unwrap_or_else(|| cvec_zeros(self.dim))
    }

    pub fn bohr_spectrum(&self) -> Vec<Frequency> {
        self.terms.iter().map(|t| t.frequency).collect()
    }

    /// The translate `t -> f(t + tau)`.
    pub fn translate(&self, tau: f64) -> Self {
        TrigPolynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    frequency: t.frequency,
                    coefficient: &t.coefficient * Complex64::from_polar(1.0, t.frequency.0 * tau),
                })
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Domain(
                "adding polynomials of different dimension".into(),
            ));
        }
        Self::new(
            self.dim,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|t| (t.frequency.0, t.coefficient.clone())),
        )
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::new(
            self.dim,
            self.terms
                .iter()
                .map(|t| (t.frequency.0, &t.coefficient * factor)),
        )
        .expect("scaling preserves validity")
    }

    /// Upper bound of `sup_t |f(t + tau) - f(t)|` from the coefficients.
    pub fn translation_bound(&self, tau: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| sup_norm(&t.coefficient) * chord(t.frequency.0 * tau))
            .sum()
    }

    /// Whether `tau` is an epsilon-period, judged by the coefficient bound.
    pub fn epsilon_period_check(&self, tau: f64, eps: f64) -> Result<EpsilonPeriodCheck> {
        if !(eps > 0.0) {
            return Err(Error::Precondition(format!(
                "epsilon must be positive, got {eps}"
            )));
        }
        let witness = self.translation_bound(tau);
        Ok(EpsilonPeriodCheck {
            holds: witness <= eps,
            witness,
        })
    }

    /// Sup-norm weights and frequencies, the input of [`search_epsilon_period`].
    pub fn weighted_spectrum(&self) -> Vec<(f64, f64)> {
        self.terms
            .iter()
            .map(|t| (t.frequency.0, sup_norm(&t.coefficient)))
            .collect()
    }

    /// Splits the terms by which circle set their frequency image lies near.
    ///
    /// The first output keeps terms within `guard` of `s1`, the second those
    /// within `guard` of `s2`. A term near neither or both is an error.
    pub fn split_by_circle_sets(
        &self,
        s1: &CircleSet,
        s2: &CircleSet,
        guard: f64,
    ) -> Result<(TrigPolynomial, TrigPolynomial)> {
        let sep = s1.min_separation(s2);
        if sep <= 2.0 * guard {
            return Err(Error::Precondition(format!(
                "circle sets are {sep:e} apart, need more than twice the guard {guard:e}"
            )));
        }
        let mut first = Vec::new();
        let mut second = Vec::new();
        for term in &self.terms {
            let angle = term.frequency.angle();
            let near1 = s1.distance_to(angle) <= guard;
            let near2 = s2.distance_to(angle) <= guard;
            match (near1, near2) {
                (true, false) => first.push(term.clone()),
                (false, true) => second.push(term.clone()),
                (true, true) => {
                    return Err(Error::Classification {
                        frequency: term.frequency.0,
                        reason: "image lies within guard of both sets".into(),
                    })
                }
                (false, false) => {
                    return Err(Error::Classification {
                        frequency: term.frequency.0,
                        reason: format!(
                            "image at angle {angle} is farther than {guard} from both sets"
                        ),
                    })
                }
            }
        }
        Ok((
            TrigPolynomial {
                dim: self.dim,
                terms: first,
            },
            TrigPolynomial {
                dim: self.dim,
                terms: second,
            },
        ))
    }
}

/// `|exp(i x) - 1|`.
fn chord(x: f64) -> f64 {
    2.0 * (0.5 * x).sin().abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonPeriodCheck {
    pub holds: bool,
    pub witness: f64,
}

/// Finds the smallest `tau >= tau_min` (up to `horizon`) where
/// `sum_k w_k |exp(i lambda_k tau) - 1| <= eps`.
///
/// A grid fine enough to sample every local minimum is scanned, and each
/// promising grid minimum is refined by golden-section search. Returns the
/// shift and the achieved bound.
pub fn search_epsilon_period(
    spectrum: &[(f64, f64)],
    eps: f64,
    tau_min: f64,
    horizon: f64,
) -> Option<(f64, f64)> {
    let bound = |tau: f64| -> f64 { spectrum.iter().map(|&(l, w)| w * chord(l * tau)).sum() };
    let lipschitz: f64 = spectrum.iter().map(|&(l, w)| w * l.abs()).sum();
    if lipschitz == 0.0 {
        return Some((tau_min, bound(tau_min)));
    }
    let lmax = spectrum.iter().map(|&(l, _)| l.abs()).fold(0.0, f64::max);
    let step = (PI / (8.0 * lmax)).min(0.05);
    let count = ((horizon - tau_min) / step).floor() as usize;
    if count < 2 {
        return None;
    }
    let at = |k: usize| tau_min + k as f64 * step;

    // Bisect for the entry into the sublevel set, given bound(a) > eps >= bound(b).
    let entry = |mut a: f64, mut b: f64| -> (f64, f64) {
        let mut fb = bound(b);
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let fm = bound(mid);
            if fm <= eps {
                b = mid;
                fb = fm;
            } else {
                a = mid;
            }
        }
        (b, fb)
    };

    let b0 = bound(at(0));
    if b0 <= eps {
        return Some((at(0), b0));
    }
    let mut prev = b0;
    let mut cur = bound(at(1));
    for k in 1..count {
        let next = bound(at(k + 1));
        if cur <= eps {
            return Some(entry(at(k - 1), at(k)));
        }
        if cur <= prev && cur <= next && cur - lipschitz * step <= eps {
            let (tau, b) = golden_min(&bound, at(k - 1), at(k + 1));
            if b <= eps {
                return Some(entry(at(k - 1), tau));
            }
        }
        prev = cur;
        cur = next;
    }
    None
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * b.abs().max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maps an angle into `[0, 2pi)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Arc distance between two points of the unit circle given by angles.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (normalize_angle(a) - normalize_angle(b)).abs();
    d.min(TAU - d)
}

/// Finite subset of the unit circle, stored as sorted angles in `[0, 2pi)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CircleSet {
    angles: Vec<f64>,
}

impl CircleSet {
    pub fn empty() -> Self {
        CircleSet::default()
    }

    /// Builds a set from angles, merging points within `merge_tol` (modulo 2pi).
    pub fn from_angles(angles: impl IntoIterator<Item = f64>, merge_tol: f64) -> Self {
        let mut a: Vec<f64> = angles.into_iter().map(normalize_angle).collect();
        a.sort_by(|x, y| x.total_cmp(y));
        let mut out: Vec<f64> = Vec::with_capacity(a.len());
        for x in a {
            match out.last() {
                Some(&last) if x - last <= merge_tol => {}
                _ => out.push(x),
            }
        }
        if out.len() > 1 {
            let first = out[0];
            let last = *out.last().unwrap();
            if TAU - last + first <= merge_tol {
                out.pop();
            }
        }
        CircleSet { angles: out }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Distance from `angle` to the nearest point; infinite for the empty set.
    pub fn distance_to(&self, angle: f64) -> f64 {
        self.angles
            .iter()
            .map(|&a| circle_distance(a, angle))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, angle: f64, tol: f64) -> bool {
        self.distance_to(angle) <= tol
    }

    /// Smallest distance between a point of `self` and a point of `other`.
    pub fn min_separation(&self, other: &CircleSet) -> f64 {
        self.angles
            .iter()
            .map(|&a| other.distance_to(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Points of `self` farther than `tol` from every point of `other`.
    pub fn difference(&self, other: &CircleSet, tol: f64) -> CircleSet {
        CircleSet {
            angles: self
                .angles
                .iter()
                .copied()
                .filter(|&a| other.distance_to(a) > tol)
                .collect(),
        }
    }
}

/// `{ lambda mod 2pi }` for the given frequencies, merged by [`ANGLE_MERGE_TOL`].
pub fn circle_image(freqs: &[Frequency]) -> CircleSet {
    CircleSet::from_angles(freqs.iter().map(|f| f.0), ANGLE_MERGE_TOL)
}

/// Weighting applied to a finite-window mean.
///
/// `Rectangular` is the plain trapezoid mean with `O(1/T)` leakage. The
/// tapered windows are Bochner-Fejér style summation kernels that converge to
/// the same Bohr mean while suppressing leakage from nearby frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MeanWindow {
    #[default]
    Rectangular,
    Hann,
    BlackmanHarris,
}

impl MeanWindow {
    /// Window value at `x` in `[0, 1]`.
    fn weight(self, x: f64) -> f64 {
        match self {
            MeanWindow::Rectangular => 1.0,
            MeanWindow::Hann => 0.5 - 0.5 * (TAU * x).cos(),
            MeanWindow::BlackmanHarris => {
                0.35875 - 0.48829 * (TAU * x).cos() + 0.14128 * (2.0 * TAU * x).cos()
                    - 0.01168 * (3.0 * TAU * x).cos()
            }
        }
    }
}

/// Samples of a C^n-valued function on the uniform grid `start + k * step`.
#[derive(Debug, Clone)]
pub struct UniformSamples {
    pub start: f64,
    pub step: f64,
    pub values: Vec<CVec>,
}

impl UniformSamples {
    /// Samples `f` on `[-half_width, half_width]` with `per_unit` points per unit time.
    pub fn symmetric(half_width: f64, per_unit: usize, f: impl Fn(f64) -> CVec) -> Self {
        let count = (2.0 * half_width * per_unit as f64).round().max(1.0) as usize;
        let step = 2.0 * half_width / count as f64;
        let values = (0..=count)
            .map(|k| f(-half_width + k as f64 * step))
            .collect();
        UniformSamples {
            start: -half_width,
            step,
            values,
        }
    }
}

/// Trapezoid approximation of `(1/2T) int_{-T}^{T} f(t) exp(-i lambda t) dt`.
///
/// With a tapered window the weights are renormalized so that a pure
/// exponential at `lambda` has mean exactly its coefficient.
pub fn bohr_mean_quadrature(
    samples: &UniformSamples,
    lambda: Frequency,
    half_width: f64,
    window: MeanWindow,
) -> Result<CVec> {
    let n = samples.values.len();
    if n < 3 {
        return Err(Error::Sampling(format!(
            "{n} samples cannot resolve a mean"
        )));
    }
    let dim = samples.values[0].len();
    let end = samples.start + (n - 1) as f64 * samples.step;
    let slack = 1e-9 * half_width.max(1.0);
    if (samples.start + half_width).abs() > slack || (end - half_width).abs() > slack {
        return Err(Error::Sampling(format!(
            "samples cover [{}, {end}], expected [-{half_width}, {half_width}]",
            samples.start
        )));
    }
    if samples.step * lambda.0.abs().max(1.0) > PI / 4.0 || samples.step > 0.25 {
        return Err(Error::Sampling(format!(
            "step {} too coarse for frequency {}",
            samples.step, lambda.0
        )));
    }
    let mut acc = cvec_zeros(dim);
    let mut wsum = 0.0;
    for (k, v) in samples.values.iter().enumerate() {
        let t = samples.start + k as f64 * samples.step;
        let trap = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let w = trap * window.weight(k as f64 / (n - 1) as f64);
        wsum += w;
        acc.axpy(Complex64::from_polar(w, -lambda.0 * t), v, ONE);
    }
    if wsum == 0.0 {
        return Ok(acc);
    }
    Ok(acc / Complex64::new(wsum, 0.0))
}

// JSON form: {"dimension": n, "terms": [{"frequency": f, "re": [..], "im": [..]}]}
#[derive(Serialize, Deserialize)]
struct TermRepr {
    frequency: f64,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TrigRepr {
    dimension: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for TrigPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TrigRepr {
            dimension: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| TermRepr {
                    frequency: t.frequency.0,
                    re: t.coefficient.iter().map(|z| z.re).collect(),
                    im: t.coefficient.iter().map(|z| z.im).collect(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrigPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TrigRepr::deserialize(d)?;
        let mut terms = Vec::with_capacity(repr.terms.len());
        for t in repr.terms {
            if t.re.len() != repr.dimension || t.im.len() != repr.dimension {
                return Err(serde::de::Error::custom(format!(
                    "term at frequency {} does not have {} components",
                    t.frequency, repr.dimension
                )));
            }
            let c = CVec::from_iterator(
                repr.dimension,
                t.re.iter().zip(&t.im).map(|(&r, &i)| Complex64::new(r, i)),
            );
            terms.push((t.frequency, c));
        }
        TrigPolynomial::new(repr.dimension, terms).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let f = TrigPolynomial::scalar(&[(2.0, c(3.0, 0.0))]);
        assert_eq!(f.eval(0.0)[0], c(3.0, 0.0));

        let g = TrigPolynomial::scalar(&[(1.0, c(1.0, 0.0)), (-1.0, c(1.0, 0.0))]);
        assert!((g.eval(PI)[0] - c(-2.0, 0.0)).norm() < 1e-15);

        let s2 = 2f64.sqrt();
        let h = TrigPolynomial::scalar(&[(s2, c(1.0, 0.0))]);
        let want = c(s2.cos(), s2.sin());
        assert!((h.eval(1.0)[0] - want).norm() < 1e-15);
    }

    #[test]
    fn fourier_coeff_examples() {
        let f = TrigPolynomial::scalar(&[(2.0, c(3.0, 0.0))]);
        assert_eq!(f.fourier_coeff(Frequency(2.0))[0], c(3.0, 0.0));
        assert_eq!(f.fourier_coeff(Frequency(1.0))[0], ZERO);
        let s2 = 2f64.sqrt();
        let g = TrigPolynomial::scalar(&[(s2, c(1.0, 0.0)), (-s2, c(5.0, 0.0))]);
        assert_eq!(g.fourier_coeff(Frequency(-s2))[0], c(5.0, 0.0));
    }

    #[test]
    fn bohr_spectrum_examples() {
        let s2 = 2f64.sqrt();
        let f = TrigPolynomial::scalar(&[(2.0, c(3.0, 0.0)), (-s2, c(1.0, 0.0))]);
        assert_eq!(f.bohr_spectrum(), vec![Frequency(-s2), Frequency(2.0)]);
        assert!(TrigPolynomial::zero(1).bohr_spectrum().is_empty());
        let cancel = TrigPolynomial::scalar(&[(1.0, c(1.0, 0.0)), (1.0, c(-1.0, 0.0))]);
        assert!(cancel.bohr_spectrum().is_empty());
        assert!(cancel.is_zero());
    }

    #[test]
    fn merge_within_tolerance() {
        let f = TrigPolynomial::scalar(&[(1.0, c(1.0, 0.0)), (1.0 + 1e-12, c(2.0, 0.0))]);
        assert_eq!(f.terms().len(), 1);
        assert_eq!(f.terms()[0].coefficient[0], c(3.0, 0.0));
    }

    #[test]
    fn bohr_mean_closed_forms() {
        let f = TrigPolynomial::scalar(&[(1.0, c(1.0, 0.0))]);
        let s = UniformSamples::symmetric(200.0, 32, |t| f.eval(t));
        let on = bohr_mean_quadrature(&s, Frequency(1.0), 200.0, MeanWindow::Rectangular).unwrap();
        assert!((on[0] - c(1.0, 0.0)).norm() < 0.01);
        let off = bohr_mean_quadrature(&s, Frequency(2.0), 200.0, MeanWindow::Rectangular).unwrap();
        // closed form |sin((2-1)T) / ((2-1)T)|
        let exact = (200f64.sin() / 200.0).abs();
        assert!(off[0].norm() <= 0.01);
        assert!((off[0].norm() - exact).abs() < 1e-4);

        let z = UniformSamples::symmetric(50.0, 8, |_| cvec_zeros(2));
        let m = bohr_mean_quadrature(&z, Frequency(0.7), 50.0, MeanWindow::Hann).unwrap();
        assert_eq!(m, cvec_zeros(2));
    }

    #[test]
    fn bohr_mean_rejects_coarse_sampling() {
        let s = UniformSamples::symmetric(10.0, 2, |_| cvec_zeros(1));
        assert!(matches!(
            bohr_mean_quadrature(&s, Frequency(1.0), 10.0, MeanWindow::Rectangular),
            Err(Error::Sampling(_))
        ));
        let s = UniformSamples::symmetric(10.0, 64, |_| cvec_zeros(1));
        assert!(bohr_mean_quadrature(&s, Frequency(1.0), 20.0, MeanWindow::Rectangular).is_err());
    }

    #[test]
    fn tapered_window_suppresses_leakage() {
        let f = TrigPolynomial::scalar(&[(1.0, c(1.0, 0.0))]);
        let s = UniformSamples::symmetric(200.0, 32, |t| f.eval(t));
        let bh =
            bohr_mean_quadrature(&s, Frequency(0.0), 200.0, MeanWindow::BlackmanHarris).unwrap();
        assert!(bh[0].norm() < 1e-5);
        let on =
            bohr_mean_quadrature(&s, Frequency(1.0), 200.0, MeanWindow::BlackmanHarris).unwrap();
        assert!((on[0] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn circle_image_examples() {
        assert_eq!(circle_image(&[Frequency(TAU)]).angles(), &[0.0]);
        assert_eq!(circle_image(&[Frequency(0.0)]).angles(), &[0.0]);
        let s = circle_image(&[Frequency(1.0), Frequency(1.0 + TAU)]);
        assert_eq!(s.len(), 1);
        assert!((s.angles()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_set_merges_across_zero() {
        let s = CircleSet::from_angles([1e-12, TAU - 1e-12], ANGLE_MERGE_TOL);
        assert_eq!(s.len(), 1);
        assert!(circle_distance(0.1, TAU - 0.1) < 0.2 + 1e-12);
    }

    #[test]
    fn epsilon_period_examples() {
        let f = TrigPolynomial::scalar(&[(1.0, c(1.0, 0.0))]);
        let r = f.epsilon_period_check(TAU, 1e-12).unwrap();
        assert!(r.holds);
        let r = f.epsilon_period_check(PI, 0.1).unwrap();
        assert!(!r.holds);
        assert!((r.witness - 2.0).abs() < 1e-15);
        assert!(f.epsilon_period_check(1.0, 0.0).is_err());
    }

    #[test]
    fn epsilon_period_search_matches_brute_force_grid() {
        let s2 = 2f64.sqrt();
        let f = TrigPolynomial::scalar(&[(1.0, c(1.0, 0.0)), (s2, c(1.0, 0.0))]);
        let eps = 0.05;
        // Oracle: plain scan of the coefficient bound on a fine grid.
        let mut first = None;
        let mut tau = 1.0;
        while tau < 1e4 {
            if f.translation_bound(tau) <= eps {
                first = Some(tau);
                break;
            }
            tau += 2e-4;
        }
        let first = first.expect("brute-force grid finds an epsilon-period below 1e4");
        let (found, bound) =
            search_epsilon_period(&f.weighted_spectrum(), eps, 1.0, 1e4).expect("search succeeds");
        assert!(bound <= eps);
        assert!(f.epsilon_period_check(found, eps).unwrap().holds);
        assert!(found <= first + 1e-3, "found {found}, brute force {first}");
    }

    #[test]
    fn epsilon_period_search_finds_exact_period() {
        let f = TrigPolynomial::scalar(&[(1.0, c(0.5, 0.5))]);
        let (tau, b) = search_epsilon_period(&f.weighted_spectrum(), 1e-10, 1.0, 100.0).unwrap();
        assert!((tau - TAU).abs() < 1e-9);
        assert!(b <= 1e-10);
    }

    #[test]
    fn split_examples() {
        let f = TrigPolynomial::scalar(&[(1.0, c(1.0, 0.0)), (PI / 2.0, c(1.0, 0.0))]);
        let s1 = CircleSet::from_angles([1.0], ANGLE_MERGE_TOL);
        let s2 = CircleSet::from_angles([PI / 2.0], ANGLE_MERGE_TOL);
        let (a, b) = f.split_by_circle_sets(&s1, &s2, 0.1).unwrap();
        assert_eq!(a, TrigPolynomial::scalar(&[(1.0, c(1.0, 0.0))]));
        assert_eq!(b, TrigPolynomial::scalar(&[(PI / 2.0, c(1.0, 0.0))]));

        let g = TrigPolynomial::scalar(&[(1.0, c(2.0, 0.0)), (1.0 + TAU, c(1.0, 0.0))]);
        let (a, b) = g.split_by_circle_sets(&s1, &s2, 0.1).unwrap();
        assert_eq!(a, g);
        assert!(b.is_zero());

        let h = TrigPolynomial::scalar(&[(1.05, c(1.0, 0.0))]);
        let s2b = CircleSet::from_angles([2.0], ANGLE_MERGE_TOL);
        match h.split_by_circle_sets(&s1, &s2b, 0.01) {
            Err(Error::Classification { frequency, .. }) => assert_eq!(frequency, 1.05),
            other => panic!("expected classification error, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip_and_schema() {
        let f = TrigPolynomial::new(2, [(0.5, CVec::from_vec(vec![c(1.0, -1.0), c(0.0, 2.0)]))])
            .unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"dimension":2,"terms":[{"frequency":0.5,"re":[1.0,0.0],"im":[-1.0,2.0]}]}"#
        );
        let back: TrigPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let bad = r#"{"dimension":2,"terms":[{"frequency":0.5,"re":[1.0],"im":[0.0]}]}"#;
        assert!(serde_json::from_str::<TrigPolynomial>(bad).is_err());
    }

    fn arb_poly() -> impl Strategy<Value = TrigPolynomial> {
        proptest::collection::vec((-20.0f64..20.0, -2.0f64..2.0, -2.0f64..2.0), 0..6).prop_map(
            |v| {
                TrigPolynomial::scalar(
                    &v.into_iter()
                        .map(|(f, re, im)| (f, c(re, im)))
                        .collect::<Vec<_>>(),
                )
            },
        )
    }

    proptest! {
        #[test]
        fn stored_terms_are_exact_fourier_coefficients(f in arb_poly(), mu in -30.0f64..30.0) {
            for t in f.terms() {
                prop_assert_eq!(f.fourier_coeff(t.frequency), t.coefficient.clone());
            }
            if f.terms().iter().all(|t| (t.frequency.0 - mu).abs() > FREQ_MERGE_TOL) {
                prop_assert_eq!(f.fourier_coeff(Frequency(mu))[0], ZERO);
            }
        }

        #[test]
        fn translation_keeps_spectrum(f in arb_poly(), tau in -50.0f64..50.0) {
            prop_assert_eq!(f.translate(tau).bohr_spectrum(), f.bohr_spectrum());
            let t = 0.37;
            let lhs = f.translate(tau).eval(t);
            let rhs = f.eval(t + tau);
            prop_assert!((lhs - rhs).norm() < 1e-10);
        }

        #[test]
        fn circle_image_ignores_full_turns(l in -40.0f64..40.0, k in -5i32..5) {
            let a = circle_image(&[Frequency(l)]);
            let b = circle_image(&[Frequency(l + k as f64 * TAU)]);
            prop_assert_eq!(a.len(), 1);
            prop_assert!(circle_distance(a.angles()[0], b.angles()[0]) < 1e-9);
        }

        #[test]
        fn split_parts_sum_to_input(f in arb_poly()) {
            let angles: Vec<f64> = f.terms().iter().map(|t| t.frequency.angle()).collect();
            let s1 = CircleSet::from_angles(angles.iter().copied().filter(|&a| a < PI), 1e-9);
            let s2 = CircleSet::from_angles(angles.iter().copied().filter(|&a| a >= PI), 1e-9);
            if s1.min_separation(&s2) > 2e-6 {
                let (a, b) = f.split_by_circle_sets(&s1, &s2, 1e-6).unwrap();
                prop_assert_eq!(a.add(&b).unwrap(), f.clone());
                for x in a.bohr_spectrum() {
                    prop_assert!(!b.bohr_spectrum().contains(&x));
                }
            }
        }

        #[test]
        fn empty_spectrum_iff_zero(f in arb_poly()) {
            prop_assert_eq!(f.bohr_spectrum().is_empty(), f.is_zero());
            if f.is_zero() {
                prop_assert_eq!(f.eval(1.3)[0], ZERO);
            }
        }

        #[test]
        fn quadrature_agrees_with_coefficients(l1 in -3.0f64..3.0, l2 in -3.0f64..3.0, mu in -3.0f64..3.0) {
            // the O(1/T) leakage bound needs mu off the spectrum by a margin or on it
            for l in [l1, l2] {
                let d = (l - mu).abs();
                prop_assume!(d > 0.5);
            }
            let f = TrigPolynomial::scalar(&[(l1, c(1.0, 0.5)), (l2, c(-0.3, 0.2))]);
            let t = 100.0;
            let s = UniformSamples::symmetric(t, 16, |x| f.eval(x));
            let q = bohr_mean_quadrature(&s, Frequency(mu), t, MeanWindow::Rectangular).unwrap();
            let exact = f.fourier_coeff(Frequency(mu));
            prop_assert!((q[0] - exact[0]).norm() <= 10.0 / t);
            let on = bohr_mean_quadrature(&s, Frequency(l1), t, MeanWindow::Rectangular).unwrap();
            prop_assume!((l1 - l2).abs() > 0.5);
            prop_assert!((on[0] - c(1.0, 0.5)).norm() <= 10.0 / t);
        }
    }
}
