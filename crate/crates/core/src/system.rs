use std::sync::Arc;

use crate::dissipation::DissipationPotential;
use crate::function::ScalarFunction;

/// A gradient system `(ℝ, ℰ + Σ ℱ, R)` on the real line.
///
/// Tilts are kept as a separate list rather than folded into the energy so
/// that tilting by `ℱ` and then by `−ℱ` gives back the original force field
/// bit for bit.
#[derive(Debug, Clone)]
pub struct GradientSystem1D {
    energy: ScalarFunction,
    dissipation: Arc<DissipationPotential>,
    tilts: Vec<ScalarFunction>,
    epsilon: Option<f64>,
}

impl GradientSystem1D {
    pub fn new(energy: ScalarFunction, dissipation: DissipationPotential) -> Self {
        Self {
            energy,
            dissipation: Arc::new(dissipation),
            tilts: Vec::new(),
            epsilon: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn energy(&self) -> &ScalarFunction {
        &self.energy
    }

    pub fn dissipation(&self) -> &DissipationPotential {
        &self.dissipation
    }

    pub fn dissipation_arc(&self) -> &Arc<DissipationPotential> {
        &self.dissipation
    }

    pub fn tilts(&self) -> &[ScalarFunction] {
        &self.tilts
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    fn tilt_slope(&self, q: f64) -> f64 {
        let mut it = self.tilts.iter();
        match it.next() {
            None => 0.0,
            Some(first) => it.fold(first.deriv(q), |acc, f| acc + f.deriv(q)),
        }
    }

    /// Total energy `ℰ(q) + Σ ℱ(q)`.
    pub fn total_energy(&self, q: f64) -> f64 {
        self.energy.eval(q) + self.tilts.iter().map(|f| f.eval(q)).sum::<f64>()
    }

    /// Derivative of the total energy.
    pub fn total_slope(&self, q: f64) -> f64 {
        if self.tilts.is_empty() {
            self.energy.deriv(q)
        } else {
            self.energy.deriv(q) + self.tilt_slope(q)
        }
    }

    /// Driving force `−(ℰ′(q) + Σ ℱ′(q))`.
    pub fn force(&self, q: f64) -> f64 {
        -self.total_slope(q)
    }

    /// Adds the tilt `ℱ` to the energy, sharing the dissipation object.
    pub fn tilt(&self, f: ScalarFunction) -> Self {
        let mut tilted = self.clone();
        tilted.tilts.push(f);
        tilted
    }

    /// The system with energy replaced by `energy`, sharing the dissipation.
    pub fn with_energy(&self, energy: ScalarFunction) -> Self {
        Self {
            energy,
            dissipation: self.dissipation.clone(),
            tilts: Vec::new(),
            epsilon: self.epsilon,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> GradientSystem1D {
        GradientSystem1D::new(ScalarFunction::quadratic(1.0), DissipationPotential::constant_quadratic(1.0))
    }

    #[test]
    fn zero_tilt_keeps_forces() {
        let s = base();
        let t = s.tilt(ScalarFunction::zero());
        for q in [-1.0, 0.0, 0.7] {
            assert_eq!(s.force(q), t.force(q));
        }
        assert!(Arc::ptr_eq(s.dissipation_arc(), t.dissipation_arc()));
    }

    #[test]
    fn linear_tilt_shifts_force() {
        let t = base().tilt(ScalarFunction::linear(1.0));
        for q in [-1.0, 0.0, 0.7] {
            assert_eq!(t.force(q), -(q + 1.0));
        }
    }

    #[test]
    fn double_tilt_is_bit_equal() {
        let s = base();
        let f = ScalarFunction::new("sin", |q: f64| q.sin() * 0.3, |q: f64| q.cos() * 0.3);
        let back = s.tilt(f.clone()).tilt(f.negated());
        for k in 0..50 {
            let q = -2.0 + 0.0813 * k as f64;
            assert_eq!(back.force(q).to_bits(), s.force(q).to_bits());
        }
    }
}
