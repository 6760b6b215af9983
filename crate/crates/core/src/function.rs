//! Scalar functions with derivatives and periodic coefficient fields.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quadrature::{self, unit_breaks};

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A real function of one variable together with its derivative.
///
/// Houses energies, tilts, linear loadings and the mobility profiles of the
/// membrane problem.
#[derive(Clone)]
pub struct ScalarFunction {
    value: Fn1,
    derivative: Fn1,
    label: String,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("label", &self.label)
            .finish()
    }
}

impl ScalarFunction {
    pub fn new(
        label: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            label: label.into(),
        }
    }

    /// Derivative by central differences with step `h`.
    pub fn with_numeric_derivative(
        label: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        h: f64,
    ) -> Self {
        let value: Fn1 = Arc::new(value);
        let f = value.clone();
        Self {
            value,
            derivative: Arc::new(move |x| (f(x + h) - f(x - h)) / (2.0 * h)),
            label: label.into(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c, |_| 0.0)
    }

    /// `q ↦ slope·q`.
    pub fn linear(slope: f64) -> Self {
        Self::new(format!("{slope}*q"), move |q| slope * q, move |_| slope)
    }

    /// `q ↦ k q²/2`.
    pub fn quadratic(k: f64) -> Self {
        Self::new(format!("{k}*q^2/2"), move |q| 0.5 * k * q * q, move |q| k * q)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Pointwise sum; the derivative is evaluated as `f' + g'`.
    pub fn plus(&self, other: &ScalarFunction) -> ScalarFunction {
        let (f, g) = (self.value.clone(), other.value.clone());
        let (df, dg) = (self.derivative.clone(), other.derivative.clone());
        ScalarFunction {
            value: Arc::new(move |x| f(x) + g(x)),
            derivative: Arc::new(move |x| df(x) + dg(x)),
            label: format!("({}) + ({})", self.label, other.label),
        }
    }

    pub fn negated(&self) -> ScalarFunction {
        let (f, df) = (self.value.clone(), self.derivative.clone());
        ScalarFunction {
            value: Arc::new(move |x| -f(x)),
            derivative: Arc::new(move |x| -df(x)),
            label: format!("-({})", self.label),
        }
    }

    /// Largest relative disagreement between the supplied derivative and a
    /// central difference with step `h`, over `points` seeded random points
    /// in `[lo, hi]`.
    pub fn derivative_mismatch(&self, lo: f64, hi: f64, points: usize, h: f64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..points)
            .map(|_| {
                let x = rng.random_range(lo..hi);
                let fd = (self.eval(x + h) - self.eval(x - h)) / (2.0 * h);
                let d = self.deriv(x);
                (fd - d).abs() / d.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Checks derivative consistency at 20 random points (step 1e-5,
    /// relative tolerance 1e-6).
    pub fn check_derivative(&self, lo: f64, hi: f64) -> Result<()> {
        let err = self.derivative_mismatch(lo, hi, 20, 1e-5, 0x5eed);
        if err <= 1e-6 {
            Ok(())
        } else {
            Err(Error::InvariantViolation(format!(
                "derivative of `{}` disagrees with finite differences by {err:e}",
                self.label
            )))
        }
    }
}

/// A mobility field `μ(q, y)`, 1-periodic in `y`, with certified bounds.
#[derive(Clone)]
pub struct PeriodicCoefficient {
    eval: Fn2,
    lower: f64,
    upper: f64,
    /// Kinks of `μ(q, ·)` inside `[0, 1)`, used as quadrature breakpoints.
    kinks: Vec<f64>,
    label: String,
}

impl fmt::Debug for PeriodicCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicCoefficient")
            .field("label", &self.label)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish()
    }
}

impl PeriodicCoefficient {
    /// Wraps `eval`, sampling it to confirm periodicity and the stated
    /// bounds on `q ∈ q_range`.
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        lower: f64,
        upper: f64,
        kinks: Vec<f64>,
        q_range: (f64, f64),
    ) -> Result<Self> {
        if !(lower > 0.0 && upper.is_finite() && lower <= upper) {
            return Err(Error::InvalidInput(format!(
                "coefficient bounds must satisfy 0 < lower <= upper < inf, got [{lower}, {upper}]"
            )));
        }
        let coef = Self {
            eval: Arc::new(eval),
            lower,
            upper,
            kinks,
            label: label.into(),
        };
        coef.validate(q_range)?;
        Ok(coef)
    }

    /// `base + amplitude·cos(2πy)`, independent of `q`.
    pub fn cosine(base: f64, amplitude: f64) -> Result<Self> {
        Self::new(
            format!("{base}+{amplitude}cos(2πy)"),
            move |_, y| base + amplitude * (2.0 * PI * y).cos(),
            base - amplitude.abs(),
            base + amplitude.abs(),
            vec![],
            (-1.0, 1.0),
        )
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(format!("{c}"), move |_, _| c, c, c, vec![], (-1.0, 1.0))
    }

    /// `alpha + |2{y} - 1|^gamma` with `{y}` the fractional part.
    pub fn power_kink(alpha: f64, gamma: f64) -> Result<Self> {
        Self::new(
            format!("{alpha}+|2y-1|^{gamma}"),
            move |_, y| alpha + (2.0 * y.rem_euclid(1.0) - 1.0).abs().powf(gamma),
            alpha,
            alpha + 1.0,
            vec![0.5],
            (-1.0, 1.0),
        )
    }

    /// `(1 + c q²)·(base + amplitude·cos 2πy)` for `q` in `q_range`.
    pub fn state_scaled_cosine(c: f64, base: f64, amplitude: f64, q_range: (f64, f64)) -> Result<Self> {
        let qmax = q_range.0.abs().max(q_range.1.abs());
        Self::new(
            format!("(1+{c}q^2)({base}+{amplitude}cos(2πy))"),
            move |q, y| (1.0 + c * q * q) * (base + amplitude * (2.0 * PI * y).cos()),
            base - amplitude.abs(),
            (1.0 + c.max(0.0) * qmax * qmax) * (base + amplitude.abs()),
            vec![],
            q_range,
        )
    }

    #[inline]
    pub fn eval(&self, q: f64, y: f64) -> f64 {
        (self.eval)(q, y)
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Quadrature breakpoints of `[0, 1]`.
    pub fn breaks(&self) -> Vec<f64> {
        unit_breaks(&self.kinks)
    }

    /// Samples periodicity (1e-12) and the bounds on a 17 × 129 grid.
    pub fn validate(&self, q_range: (f64, f64)) -> Result<()> {
        for i in 0..17 {
            let q = q_range.0 + (q_range.1 - q_range.0) * i as f64 / 16.0;
            for k in 0..129 {
                let y = k as f64 / 128.0;
                let m = self.eval(q, y);
                let shifted = self.eval(q, y + 1.0);
                if (m - shifted).abs() > 1e-12 * m.abs().max(1.0) {
                    return Err(Error::InvariantViolation(format!(
                        "`{}` is not 1-periodic at (q, y) = ({q}, {y})",
                        self.label
                    )));
                }
                let slack = 1e-12 * self.upper;
                if !(m >= self.lower - slack && m <= self.upper + slack) {
                    return Err(Error::InvariantViolation(format!(
                        "`{}` = {m} leaves [{}, {}] at (q, y) = ({q}, {y})",
                        self.label, self.lower, self.upper
                    )));
                }
            }
        }
        Ok(())
    }

    /// `μ̄(q) = ∫₀¹ μ(q, y) dy`.
    pub fn mean(&self, q: f64) -> f64 {
        quadrature::integrate_pieces(|y| self.eval(q, y), &self.breaks())
    }

    /// Harmonic mean `(∫₀¹ 1/μ(q, y) dy)⁻¹`.
    pub fn harmonic_mean(&self, q: f64) -> f64 {
        1.0 / quadrature::integrate_pieces(|y| 1.0 / self.eval(q, y), &self.breaks())
    }

    /// `μ_{1/2}(q) = (∫₀¹ √μ(q, y) dy)²`.
    pub fn half_moment(&self, q: f64) -> f64 {
        quadrature::integrate_pieces(|y| self.eval(q, y).sqrt(), &self.breaks()).powi(2)
    }

    /// `μ_max(q)` by dense sampling and golden-section refinement.
    pub fn max(&self, q: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for piece in self.breaks().windows(2) {
            let (_, v) = quadrature::dense_max(|y| self.eval(q, y), piece[0], piece[1], 512);
            best = best.max(v).max(self.eval(q, piece[0])).max(self.eval(q, piece[1]));
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_derivative_is_consistent() {
        let e = ScalarFunction::quadratic(3.0);
        assert!(e.check_derivative(-2.0, 2.0).is_ok());
        assert_eq!(e.eval(2.0), 6.0);
    }

    #[test]
    fn wrong_derivative_is_rejected() {
        let bad = ScalarFunction::new("bad", |x| x * x, |x| x);
        assert!(bad.check_derivative(-1.0, 1.0).is_err());
    }

    #[test]
    fn plus_and_negation_cancel_in_derivative() {
        let f = ScalarFunction::new("sin", f64::sin, f64::cos);
        let s = f.plus(&f.negated());
        for x in [0.1, 1.3, -2.0] {
            assert_eq!(s.deriv(x), 0.0);
        }
    }

    #[test]
    fn cosine_coefficient_bounds_and_moments() {
        let mu = PeriodicCoefficient::cosine(1.0, 0.8).unwrap();
        assert!((mu.mean(0.0) - 1.0).abs() < 1e-13);
        assert!((mu.max(0.0) - 1.8).abs() < 1e-12);
        assert!(mu.half_moment(0.0) < 1.0);
    }

    #[test]
    fn bound_violation_is_detected() {
        let res = PeriodicCoefficient::new("x", |_, y| 1.0 + (2.0 * PI * y).sin(), 0.5, 2.0, vec![], (0.0, 1.0));
        assert!(res.is_err());
    }

    #[test]
    fn non_periodic_field_is_detected() {
        let res = PeriodicCoefficient::new("x", |_, y| 1.0 + 0.1 * y, 0.5, 2.0, vec![], (0.0, 1.0));
        assert!(matches!(res, Err(Error::InvariantViolation(_))));
    }
}
