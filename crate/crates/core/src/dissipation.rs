//! Dissipation potentials, their duals and kinetic relations.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function::{Fn1, Fn2, PeriodicCoefficient};
use crate::legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DissipationKind {
    /// `R(q, v) = μ(q) v²/2`.
    QuadraticWithCoefficient,
    /// State-independent, given by convex samples of `v ↦ R(v)`.
    GeneralSampled,
    /// Primal, dual and kinetic relation supplied in closed form.
    ClosedForm,
}

/// A state-dependent dissipation potential `R(q, ·)` with its Legendre dual
/// `R*(q, ·)`.
///
/// `rate(q, ξ)` evaluates the kinetic relation `v ∈ ∂_ξ R*(q, ξ)`, which is
/// what the gradient-flow integrator consumes.
#[derive(Clone)]
pub struct DissipationPotential {
    kind: DissipationKind,
    primal: Fn2,
    dual: Fn2,
    rate: Fn2,
    mobility: Option<Fn1>,
    label: String,
    invertible: bool,
}

impl fmt::Debug for DissipationPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DissipationPotential")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .finish()
    }
}

impl DissipationPotential {
    /// `R(q, v) = μ(q) v²/2`, `R*(q, ξ) = ξ²/(2μ(q))`, `v = ξ/μ(q)`.
    pub fn quadratic(label: impl Into<String>, mobility: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let mobility: Fn1 = Arc::new(mobility);
        let (m1, m2, m3) = (mobility.clone(), mobility.clone(), mobility.clone());
        Self {
            kind: DissipationKind::QuadraticWithCoefficient,
            primal: Arc::new(move |q, v| 0.5 * m1(q) * v * v),
            dual: Arc::new(move |q, xi| 0.5 * xi * xi / m2(q)),
            rate: Arc::new(move |q, xi| xi / m3(q)),
            mobility: Some(mobility),
            label: label.into(),
            invertible: true,
        }
    }

    pub fn constant_quadratic(mu: f64) -> Self {
        Self::quadratic(format!("{mu}v^2/2"), move |_| mu)
    }

    /// The oscillating quadratic potential `μ(q, q/ε) v²/2`.
    pub fn wiggly(coefficient: &PeriodicCoefficient, epsilon: f64) -> Self {
        let c = coefficient.clone();
        Self::quadratic(
            format!("{}|y=q/{epsilon} v^2/2", coefficient.label()),
            move |q| c.eval(q, q / epsilon),
        )
    }

    pub fn closed_form(
        label: impl Into<String>,
        primal: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dual: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        rate: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: DissipationKind::ClosedForm,
            primal: Arc::new(primal),
            dual: Arc::new(dual),
            rate: Arc::new(rate),
            mobility: None,
            label: label.into(),
            invertible: true,
        }
    }

    /// A state-independent potential from samples `(rates[i], values[i])`.
    ///
    /// The primal is the piecewise-linear interpolant, the dual its discrete
    /// conjugate, and the kinetic relation the conjugate's maximizer. Samples
    /// whose difference quotients are not non-decreasing are accepted but
    /// marked non-invertible; integrating with them fails.
    pub fn sampled(rates: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if rates.len() != values.len() || rates.len() < 2 {
            return Err(Error::DegenerateGrid);
        }
        if rates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("sample rates must be strictly increasing".into()));
        }
        let slopes: Vec<f64> = rates
            .windows(2)
            .zip(values.windows(2))
            .map(|(r, f)| (f[1] - f[0]) / (r[1] - r[0]))
            .collect();
        let scale = slopes.iter().fold(1.0_f64, |m, s| m.max(s.abs()));
        let invertible = slopes.windows(2).all(|s| s[1] >= s[0] - 1e-10 * scale);
        let rates = Arc::new(rates);
        let values = Arc::new(values);
        let (r1, f1) = (rates.clone(), values.clone());
        let (r2, f2) = (rates.clone(), values.clone());
        let (r3, f3) = (rates, values);
        Ok(Self {
            kind: DissipationKind::GeneralSampled,
            primal: Arc::new(move |_, v| legendre::interpolate(&r1, &f1, v)),
            dual: Arc::new(move |_, xi| legendre::conjugate_at(&r2, &f2, xi).0),
            rate: Arc::new(move |_, xi| legendre::conjugate_at(&r3, &f3, xi).1),
            mobility: None,
            label: "sampled".into(),
            invertible,
        })
    }

    pub fn kind(&self) -> DissipationKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn primal(&self, q: f64, v: f64) -> f64 {
        (self.primal)(q, v)
    }

    #[inline]
    pub fn dual(&self, q: f64, xi: f64) -> f64 {
        (self.dual)(q, xi)
    }

    /// `μ(q)` for quadratic potentials.
    pub fn mobility(&self, q: f64) -> Option<f64> {
        self.mobility.as_ref().map(|m| m(q))
    }

    /// Rate generated by the force `ξ` through the kinetic relation.
    pub fn rate(&self, q: f64, xi: f64) -> Result<f64> {
        if !self.invertible {
            return Err(Error::NonInvertibleKineticRelation(format!(
                "samples of `{}` are not convex",
                self.label
            )));
        }
        Ok((self.rate)(q, xi))
    }

    pub fn is_invertible(&self) -> bool {
        self.invertible
    }

    /// Checks normalization, non-negativity, midpoint convexity and the
    /// Fenchel-Young inequality at state `q` on the given grids.
    pub fn check_invariants(&self, q: f64, v_grid: &[f64], xi_grid: &[f64]) -> Result<()> {
        let r0 = self.primal(q, 0.0);
        if r0.abs() > 1e-12 {
            return Err(Error::InvariantViolation(format!("R(q, 0) = {r0} != 0")));
        }
        for &v in v_grid {
            if self.primal(q, v) < -1e-12 {
                return Err(Error::InvariantViolation(format!("R(q, {v}) < 0")));
            }
        }
        for w in v_grid.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let lhs = self.primal(q, mid);
            let rhs = 0.5 * (self.primal(q, w[0]) + self.primal(q, w[1]));
            if lhs > rhs + 1e-9 * rhs.abs().max(1.0) {
                return Err(Error::InvariantViolation(format!(
                    "R(q, ·) not midpoint convex on [{}, {}]",
                    w[0], w[1]
                )));
            }
        }
        for &v in v_grid {
            for &xi in xi_grid {
                let gap = fenchel_young_gap(self, q, v, xi);
                if gap < -1e-9 {
                    return Err(Error::InvariantViolation(format!(
                        "Fenchel-Young gap {gap:e} < 0 at (v, ξ) = ({v}, {xi})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Finite superlinearity proxy: `R(q, v)/|v|` at both ends of the rate
    /// window exceeds the largest force magnitude of the force window.
    pub fn superlinear_on_window(&self, q: f64, v_grid: &[f64], xi_grid: &[f64]) -> bool {
        let xi_max = xi_grid.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        match (v_grid.first(), v_grid.last()) {
            (Some(&lo), Some(&hi)) if lo != 0.0 && hi != 0.0 => {
                self.primal(q, lo) / lo.abs() > xi_max && self.primal(q, hi) / hi.abs() > xi_max
            }
            _ => false,
        }
    }
}

/// `R(q, v) + R*(q, ξ) − ξ v`; non-negative for any valid potential.
pub fn fenchel_young_gap(r: &DissipationPotential, q: f64, v: f64, xi: f64) -> f64 {
    r.primal(q, v) + r.dual(q, xi) - xi * v
}

/// Three gradient structures for the same spring-damper relaxation
/// `μ q̇ = −k q` with spring energy `k q²/2`.
pub mod spring_damper {
    use super::*;

    /// The damper's own potential `μ v²/2`.
    pub fn viscous(mu: f64) -> DissipationPotential {
        DissipationPotential::constant_quadratic(mu)
    }

    fn newton_increasing(f: impl Fn(f64) -> (f64, f64), target: f64) -> f64 {
        // f is strictly increasing and convex on v >= 0; odd in v.
        let sign = target.signum();
        let t = target.abs();
        let mut v = 0.0_f64;
        let mut hi = 1.0_f64;
        while f(hi).0 < t {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let (fv, dv) = f(v);
            let mut next = v - (fv - t) / dv;
            if fv < t {
                lo = v;
            } else {
                hi = v;
            }
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - v).abs() <= 1e-15 * next.abs().max(1e-300) {
                v = next;
                break;
            }
            v = next;
        }
        sign * v
    }

    /// `μ/(1 + α k² q²/μ²) · (v²/2 + α v⁴/4)`.
    pub fn quartic(k: f64, mu: f64, alpha: f64) -> DissipationPotential {
        let phi = move |q: f64| mu / (1.0 + alpha * k * k * q * q / (mu * mu));
        // ψ(v) = v²/2 + αv⁴/4, ψ'(v) = v + αv³; R = φψ, R* = φψ*(ξ/φ).
        let psi_prime = move |v: f64| (v + alpha * v.powi(3), 1.0 + 3.0 * alpha * v * v);
        let inverse = move |eta: f64| newton_increasing(psi_prime, eta);
        DissipationPotential::closed_form(
            format!("spring-damper quartic (k={k}, mu={mu}, alpha={alpha})"),
            move |q, v| phi(q) * (0.5 * v * v + 0.25 * alpha * v.powi(4)),
            move |q, xi| {
                let p = phi(q);
                let v = inverse(xi / p);
                p * (xi / p * v - (0.5 * v * v + 0.25 * alpha * v.powi(4)))
            },
            move |q, xi| inverse(xi / phi(q)),
        )
    }

    /// `kq/(1 − e^{−kq/μ}) · (eᵛ − v − 1)`.
    pub fn exponential(k: f64, mu: f64) -> DissipationPotential {
        let phi = move |q: f64| {
            let s = k * q / mu;
            if s.abs() < 1e-8 {
                mu * (1.0 + 0.5 * s)
            } else {
                k * q / (-(-s).exp_m1())
            }
        };
        // ψ(v) = eᵛ − v − 1, ψ*(η) = (1+η)log(1+η) − η for η > −1.
        let psi_star = |eta: f64| {
            if eta <= -1.0 {
                if eta == -1.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                (1.0 + eta) * eta.ln_1p() - eta
            }
        };
        DissipationPotential::closed_form(
            format!("spring-damper exponential (k={k}, mu={mu})"),
            move |q, v| phi(q) * (v.exp_m1() - v),
            move |q, xi| {
                let p = phi(q);
                p * psi_star(xi / p)
            },
            move |q, xi| (xi / phi(q)).ln_1p(),
        )
    }
}
