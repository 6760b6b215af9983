//! Scalar gradient flows `q̇ = ∂_ξR*(q, −ℰ′(q))` with an energy-dissipation
//! ledger.
//!
//! The integrator is the Dormand–Prince 5(4) pair applied to the augmented
//! state `(q, ∫ℛ dt, ∫ℛ* dt)`, so the ledger is integrated to the same
//! accuracy as the state. When a wiggly coefficient is present, steps are
//! limited so that every period `ε` in `q` is covered by at least
//! `points_per_period` steps.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::dissipation::DissipationPotential;
use crate::error::{Error, Result};
use crate::function::{PeriodicCoefficient, ScalarFunction};
use crate::system::GradientSystem1D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControls {
    pub rtol: f64,
    pub atol: f64,
    pub max_dt: f64,
    pub min_dt: f64,
    pub points_per_period: usize,
}

impl Default for StepControls {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-8,
            max_dt: 0.05,
            min_dt: 1e-12,
            points_per_period: 50,
        }
    }
}

impl StepControls {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }

    /// Tolerance the ledger residual is measured against.
    pub fn tolerance(&self) -> f64 {
        self.rtol.max(self.atol)
    }
}

/// Ledger record at one time node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub energy: f64,
    /// `∫₀ᵗ ℛ(q, q̇) ds`.
    pub int_r: f64,
    /// `∫₀ᵗ ℛ*(q, −ℰ′(q)) ds`.
    pub int_rstar: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub rates: Vec<f64>,
    pub ledger: Vec<LedgerEntry>,
    /// Steps taken by the implicit-midpoint fallback.
    pub fallback_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    /// Builds the ledger for a prescribed curve by the trapezoid rule. Used
    /// to evaluate the energy-dissipation balance of curves that are not
    /// solutions.
    pub fn from_curve(sys: &GradientSystem1D, times: Vec<f64>, states: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let n = times.len();
        if n < 2 || states.len() != n || rates.len() != n {
            return Err(Error::InvalidInput("curve needs matching times, states and rates".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("times must be strictly increasing".into()));
        }
        let r = sys.dissipation();
        let dens = |i: usize| {
            let q = states[i];
            (r.primal(q, rates[i]), r.dual(q, sys.force(q)))
        };
        let mut ledger = Vec::with_capacity(n);
        let (mut ir, mut irs) = (0.0, 0.0);
        let mut prev = dens(0);
        ledger.push(LedgerEntry {
            energy: sys.total_energy(states[0]),
            int_r: 0.0,
            int_rstar: 0.0,
        });
        for i in 1..n {
            let cur = dens(i);
            let dt = times[i] - times[i - 1];
            ir += 0.5 * dt * (prev.0 + cur.0);
            irs += 0.5 * dt * (prev.1 + cur.1);
            ledger.push(LedgerEntry {
                energy: sys.total_energy(states[i]),
                int_r: ir,
                int_rstar: irs,
            });
            prev = cur;
        }
        Ok(Self {
            times,
            states,
            rates,
            ledger,
            fallback_steps: 0,
            rejected_steps: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    pub fn final_state(&self) -> f64 {
        *self.states.last().expect("non-empty trajectory")
    }

    /// `𝔇ᵀ = ∫₀ᵀ ℛ + ℛ* dt`.
    pub fn dissipation(&self) -> f64 {
        let last = self.ledger.last().expect("non-empty trajectory");
        last.int_r + last.int_rstar
    }

    /// Running balance `ℰ(q(t)) + 𝔇ᵗ − ℰ(q(0))` at node `i`.
    pub fn running_residual(&self, i: usize) -> f64 {
        let e = &self.ledger[i];
        e.energy + e.int_r + e.int_rstar - self.ledger[0].energy
    }

    /// Cubic Hermite interpolation of `q` from the stored states and rates.
    pub fn state_at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.states[0];
        }
        if t >= self.times[n - 1] {
            return self.states[n - 1];
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let (y0, y1) = (self.states[k], self.states[k + 1]);
        let (d0, d1) = (self.rates[k] * h, self.rates[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1
    }

    /// `max_i |q(tᵢ) − f(tᵢ)|` over the stored nodes.
    pub fn sup_distance(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, &q)| (q - f(t)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest trapezoidal defect `|Δq − ½(q̇ᵢ + q̇ᵢ₊₁)Δt|` over the steps.
    pub fn consistency_defect(&self) -> f64 {
        (1..self.len())
            .map(|i| {
                let dt = self.times[i] - self.times[i - 1];
                (self.states[i] - self.states[i - 1] - 0.5 * dt * (self.rates[i] + self.rates[i - 1])).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Number of strict local maxima of `|q̇|` along the stored nodes.
    pub fn speed_maxima(&self) -> usize {
        self.rates
            .windows(3)
            .filter(|w| w[1].abs() > w[0].abs() && w[1].abs() > w[2].abs())
            .count()
    }

    /// Writes `t,q,qdot,E,intR,intRstar,residual` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,q,qdot,E,intR,intRstar,residual")?;
        for i in 0..self.len() {
            let l = &self.ledger[i];
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i],
                self.states[i],
                self.rates[i],
                l.energy,
                l.int_r,
                l.int_rstar,
                self.running_residual(i)
            )?;
        }
        Ok(())
    }
}

/// Right-hand side of the augmented system at `q`: `(q̇, ℛ, ℛ*)`.
fn augmented(sys: &GradientSystem1D, q: f64) -> Result<[f64; 3]> {
    let r = sys.dissipation();
    let xi = sys.force(q);
    let v = r.rate(q, xi)?;
    Ok([v, r.primal(q, v), r.dual(q, xi)])
}

/// Dormand–Prince stage coefficients; the autonomous right-hand side needs
/// no stage times.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct StepResult {
    y: [f64; 3],
    k_last: [f64; 3],
    err: f64,
}

fn dopri_step(sys: &GradientSystem1D, y: [f64; 3], k1: [f64; 3], h: f64, ctrl: &StepControls) -> StepResult {
    let mut k = [[0.0; 3]; 7];
    k[0] = k1;
    for s in 0..6 {
        let mut q = y[0];
        for j in 0..=s {
            q += h * A[s][j] * k[j][0];
        }
        k[s + 1] = augmented(sys, q).unwrap_or([f64::NAN; 3]);
    }
    let mut y_new = y;
    for c in 0..3 {
        for j in 0..6 {
            y_new[c] += h * A[5][j] * k[j][c];
        }
    }
    let mut err: f64 = 0.0;
    for c in 0..3 {
        let e: f64 = (0..7).map(|j| E[j] * k[j][c]).sum::<f64>() * h;
        let sc = ctrl.atol + ctrl.rtol * y[c].abs().max(y_new[c].abs());
        err = err.max((e / sc).abs());
    }
    if y_new.iter().any(|v| !v.is_finite()) {
        err = f64::NAN;
    }
    StepResult {
        y: y_new,
        k_last: k[6],
        err,
    }
}

/// One implicit-midpoint step of size `h`, solved by Newton with a
/// difference-quotient Jacobian.
fn midpoint_step(sys: &GradientSystem1D, y: [f64; 3], h: f64) -> Option<[f64; 3]> {
    let rate = |q: f64| augmented(sys, q).ok().map(|r| r[0]);
    let mut q1 = y[0] + h * rate(y[0])?;
    for _ in 0..50 {
        let qm = 0.5 * (y[0] + q1);
        let g = q1 - y[0] - h * rate(qm)?;
        let d = 1e-7 * qm.abs().max(1.0);
        let dg = 1.0 - 0.5 * h * (rate(qm + d)? - rate(qm - d)?) / (2.0 * d);
        let step = g / dg;
        if !step.is_finite() {
            return None;
        }
        q1 -= step;
        if step.abs() <= 1e-14 * q1.abs().max(1.0) {
            let m = augmented(sys, 0.5 * (y[0] + q1)).ok()?;
            return Some([q1, y[1] + h * m[1], y[2] + h * m[2]]);
        }
    }
    None
}

/// Integrates `q̇ = ∂_ξR*(q, −ℰ′(q))` from `q0` over `[0, T]`.
pub fn integrate(sys: &GradientSystem1D, q0: f64, t_end: f64, ctrl: &StepControls) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidInput(format!("T must be positive, got {t_end}")));
    }
    if !(ctrl.min_dt > 0.0 && ctrl.min_dt <= ctrl.max_dt && ctrl.points_per_period > 0) {
        return Err(Error::InvalidInput("inconsistent step controls".into()));
    }
    if !sys.dissipation().is_invertible() {
        // Surfaces the same error the first rate evaluation would.
        sys.dissipation().rate(q0, 0.0)?;
    }
    let mut y = [q0, 0.0, 0.0];
    let mut k1 = augmented(sys, q0)?;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![q0],
        rates: vec![k1[0]],
        ledger: vec![LedgerEntry {
            energy: sys.total_energy(q0),
            int_r: 0.0,
            int_rstar: 0.0,
        }],
        fallback_steps: 0,
        rejected_steps: 0,
    };
    let period_cap = |v: f64| match sys.epsilon() {
        Some(eps) if v != 0.0 => eps / (ctrl.points_per_period as f64 * v.abs()),
        _ => f64::INFINITY,
    };
    let mut t = 0.0;
    let mut h = (1e-3 * t_end).min(ctrl.max_dt);
    while t < t_end {
        let remaining = t_end - t;
        let cap = ctrl.max_dt.min(period_cap(k1[0]));
        h = h.min(cap);
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let (accepted, h_used) = if h < ctrl.min_dt && !last {
            let hm = ctrl.min_dt.min(remaining);
            let y_new = midpoint_step(sys, y, hm).ok_or(Error::StiffnessFailure { t, min_dt: ctrl.min_dt })?;
            traj.fallback_steps += 1;
            (y_new, hm)
        } else {
            let step = dopri_step(sys, y, k1, h, ctrl);
            if !(step.err <= 1.0) {
                traj.rejected_steps += 1;
                let shrink = if step.err.is_finite() {
                    (0.9 * step.err.powf(-0.2)).max(0.2)
                } else {
                    0.25
                };
                h *= shrink;
                continue;
            }
            let grow = if step.err > 0.0 {
                (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            let h_used = h;
            y = step.y;
            k1 = step.k_last;
            t = if last { t_end } else { t + h_used };
            traj.record(sys, t, y, k1[0]);
            h = h_used * grow;
            continue;
        };
        y = accepted;
        k1 = augmented(sys, y[0])?;
        t = if h_used >= remaining { t_end } else { t + h_used };
        traj.record(sys, t, y, k1[0]);
        h = ctrl.min_dt * 2.0;
    }
    Ok(traj)
}

impl Trajectory {
    fn record(&mut self, sys: &GradientSystem1D, t: f64, y: [f64; 3], v: f64) {
        self.times.push(t);
        self.states.push(y[0]);
        self.rates.push(v);
        self.ledger.push(LedgerEntry {
            energy: sys.total_energy(y[0]),
            int_r: y[1],
            int_rstar: y[2],
        });
    }
}

/// `ℰ(q(T)) + 𝔇ᵀ(q) − ℰ(q(0))` from the stored ledger, with the energy of
/// `sys` (including tilts).
pub fn edp_residual(traj: &Trajectory, sys: &GradientSystem1D) -> f64 {
    sys.total_energy(traj.final_state()) + traj.dissipation() - sys.total_energy(traj.states[0])
}

/// The homogenized mobility `q ↦ ∫₀¹ μ(q, y) dy`.
pub fn homogenized_mobility(coefficient: &PeriodicCoefficient) -> ScalarFunction {
    let c = coefficient.clone();
    ScalarFunction::with_numeric_derivative(format!("mean of {}", coefficient.label()), move |q| c.mean(q), 1e-6)
}

/// Limit flow `μ̄(q) q̇ = −ℰ′(q)`.
pub fn limit_flow(
    mu_bar: &ScalarFunction,
    energy: &ScalarFunction,
    q0: f64,
    t_end: f64,
    ctrl: &StepControls,
) -> Result<Trajectory> {
    let m = mu_bar.clone();
    let sys = GradientSystem1D::new(
        energy.clone(),
        DissipationPotential::quadratic(format!("{} v^2/2", mu_bar.label()), move |q| m.eval(q)),
    );
    integrate(&sys, q0, t_end, ctrl)
}

/// The family `μ(q, q/ε) q̇ = −(ℰ + ℱ)′(q)` indexed by `ε`.
#[derive(Debug, Clone)]
pub struct FlowFamily {
    pub coefficient: PeriodicCoefficient,
    pub energy: ScalarFunction,
    pub tilt: Option<ScalarFunction>,
    pub q0: f64,
}

impl FlowFamily {
    pub fn system(&self, epsilon: f64) -> GradientSystem1D {
        let sys = GradientSystem1D::new(
            self.energy.clone(),
            DissipationPotential::wiggly(&self.coefficient, epsilon),
        )
        .with_epsilon(epsilon);
        match &self.tilt {
            Some(f) => sys.tilt(f.clone()),
            None => sys,
        }
    }

    /// Energy driving the limit flow.
    pub fn limit_energy(&self) -> ScalarFunction {
        match &self.tilt {
            Some(f) => self.energy.plus(f),
            None => self.energy.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub sup_error: f64,
    pub edp_residual: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub limit: Trajectory,
}

impl ConvergenceTable {
    /// Errors strictly decrease down the table, allowing 5% slack on the
    /// last refinement.
    pub fn is_decreasing(&self) -> bool {
        let n = self.rows.len();
        self.rows.windows(2).enumerate().all(|(i, w)| {
            let slack = if i + 2 == n { 1.05 } else { 1.0 };
            w[1].sup_error < w[0].sup_error * slack
        })
    }

    /// Observed orders `log(e_k/e_{k+1}) / log(ε_k/ε_{k+1})`.
    pub fn empirical_rates(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| (w[0].sup_error / w[1].sup_error).ln() / (w[0].epsilon / w[1].epsilon).ln())
            .collect()
    }
}

/// Sup-distance of each `ε`-solution to a tight-tolerance limit solution,
/// with the `ε` runs in parallel.
pub fn convergence_study(
    family: &FlowFamily,
    epsilons: &[f64],
    t_end: f64,
    ctrl: &StepControls,
) -> Result<ConvergenceTable> {
    if epsilons.windows(2).any(|w| w[1] >= w[0]) || epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidInput("ε list must be positive and decreasing".into()));
    }
    let reference_ctrl = StepControls {
        rtol: 1e-11,
        atol: 1e-11,
        ..*ctrl
    };
    let limit = limit_flow(
        &homogenized_mobility(&family.coefficient),
        &family.limit_energy(),
        family.q0,
        t_end,
        &reference_ctrl,
    )?;
    let rows = epsilons
        .par_iter()
        .map(|&eps| {
            let sys = family.system(eps);
            let traj = integrate(&sys, family.q0, t_end, ctrl)?;
            Ok(ConvergenceRow {
                epsilon: eps,
                sup_error: traj.sup_distance(|t| limit.state_at(t)),
                edp_residual: edp_residual(&traj, &sys),
                steps: traj.len() - 1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable { rows, limit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissipation::spring_damper;

    fn linear_system(mu: f64) -> GradientSystem1D {
        GradientSystem1D::new(ScalarFunction::quadratic(1.0), DissipationPotential::constant_quadratic(mu))
    }

    #[test]
    fn exponential_decay() {
        let sys = linear_system(1.0);
        let traj = integrate(&sys, 1.0, 1.0, &StepControls::default()).unwrap();
        assert!(traj.sup_distance(|t| (-t).exp()) <= 1e-6);
        assert_eq!(traj.final_time(), 1.0);
        assert!(edp_residual(&traj, &sys).abs() <= 1e-7);
        assert!(traj.consistency_defect() < 1e-4);
    }

    #[test]
    fn limit_flow_rescaled_decay() {
        let traj = limit_flow(
            &ScalarFunction::constant(2.0),
            &ScalarFunction::quadratic(1.0),
            1.0,
            2.0,
            &StepControls::default(),
        )
        .unwrap();
        assert!(traj.sup_distance(|t| (-0.5 * t).exp()) <= 1e-6);
    }

    #[test]
    fn ledger_is_monotone_and_split_evenly() {
        let coef = PeriodicCoefficient::cosine(1.0, 0.8).unwrap();
        let sys = GradientSystem1D::new(ScalarFunction::quadratic(1.0), DissipationPotential::wiggly(&coef, 0.2))
            .with_epsilon(0.2);
        let traj = integrate(&sys, 1.0, 2.0, &StepControls::default()).unwrap();
        for w in traj.ledger.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-8);
            assert!(w[1].int_r >= w[0].int_r && w[1].int_rstar >= w[0].int_rstar);
        }
        let last = traj.ledger.last().unwrap();
        assert!((last.int_r - last.int_rstar).abs() <= 0.02 * last.int_r);
    }

    #[test]
    fn period_resolution_is_respected() {
        let coef = PeriodicCoefficient::cosine(1.0, 0.8).unwrap();
        let eps = 0.05;
        let sys = GradientSystem1D::new(ScalarFunction::quadratic(1.0), DissipationPotential::wiggly(&coef, eps))
            .with_epsilon(eps);
        let traj = integrate(&sys, 1.0, 1.0, &StepControls::default()).unwrap();
        for i in 1..traj.len() {
            let dt = traj.times[i] - traj.times[i - 1];
            assert!(dt * traj.rates[i - 1].abs() <= eps / 50.0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn wrong_curves_have_closed_form_residuals() {
        let sys = linear_system(1.0);
        let n = 2001;
        let times: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let constant = Trajectory::from_curve(&sys, times.clone(), vec![1.0; n], vec![0.0; n]).unwrap();
        assert!((edp_residual(&constant, &sys) - 0.5).abs() < 1e-12);
        let grow: Vec<f64> = times.iter().map(|t| t.exp()).collect();
        let reversed = Trajectory::from_curve(&sys, times, grow.clone(), grow).unwrap();
        let expected = 1f64.exp().powi(2) - 1.0;
        assert!((edp_residual(&reversed, &sys) - expected).abs() < 1e-5 * expected);
    }

    #[test]
    fn spring_damper_formulations_agree() {
        let viscous = GradientSystem1D::new(ScalarFunction::quadratic(1.0), spring_damper::viscous(1.0));
        let ctrl = StepControls::with_tolerance(1e-10);
        let a = integrate(&viscous, 1.0, 2.0, &ctrl).unwrap();
        for other in [spring_damper::quartic(1.0, 1.0, 1.0), spring_damper::exponential(1.0, 1.0)] {
            let sys = GradientSystem1D::new(ScalarFunction::quadratic(1.0), other);
            let b = integrate(&sys, 1.0, 2.0, &ctrl).unwrap();
            assert!(b.sup_distance(|t| a.state_at(t)) <= 1e-6);
        }
    }

    #[test]
    fn tilted_system_matches_energy_replacement() {
        let coef = PeriodicCoefficient::cosine(1.0, 0.8).unwrap();
        let base = GradientSystem1D::new(ScalarFunction::quadratic(1.0), DissipationPotential::wiggly(&coef, 0.1))
            .with_epsilon(0.1);
        let f = ScalarFunction::linear(1.0);
        let tilted = base.tilt(f.clone());
        let replaced = base.with_energy(base.energy().plus(&f));
        let ctrl = StepControls::default();
        let a = integrate(&tilted, 1.0, 1.0, &ctrl).unwrap();
        let b = integrate(&replaced, 1.0, 1.0, &ctrl).unwrap();
        assert_eq!(a.times, b.times);
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn non_invertible_and_stiff_failures() {
        let sampled = DissipationPotential::sampled(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        let sys = GradientSystem1D::new(ScalarFunction::quadratic(1.0), sampled);
        assert!(matches!(
            integrate(&sys, 1.0, 1.0, &StepControls::default()),
            Err(Error::NonInvertibleKineticRelation(_))
        ));
        let broken = DissipationPotential::closed_form(
            "broken",
            |_, v| 0.5 * v * v,
            |_, xi| 0.5 * xi * xi,
            |q, xi| if q < 0.5 { f64::NAN } else { xi },
        );
        let sys = GradientSystem1D::new(ScalarFunction::quadratic(1.0), broken);
        let ctrl = StepControls {
            min_dt: 1e-6,
            ..StepControls::default()
        };
        assert!(matches!(integrate(&sys, 1.0, 2.0, &ctrl), Err(Error::StiffnessFailure { .. })));
    }

    #[test]
    fn midpoint_fallback_engages() {
        let sys = linear_system(1.0);
        let ctrl = StepControls {
            rtol: 1e-14,
            atol: 1e-14,
            min_dt: 1e-2,
            max_dt: 0.1,
            points_per_period: 50,
        };
        let traj = integrate(&sys, 1.0, 1.0, &ctrl).unwrap();
        assert!(traj.fallback_steps > 0);
        assert!(traj.sup_distance(|t| (-t).exp()) < 1e-4);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let sys = linear_system(1.0);
        let traj = integrate(&sys, 1.0, 0.1, &StepControls::default()).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,q,qdot,E,intR,intRstar,residual");
        assert_eq!(lines.count(), traj.len());
    }

    #[test]
    fn constant_family_has_tiny_errors() {
        let family = FlowFamily {
            coefficient: PeriodicCoefficient::constant(1.0).unwrap(),
            energy: ScalarFunction::quadratic(1.0),
            tilt: None,
            q0: 1.0,
        };
        let table = convergence_study(&family, &[0.2, 0.1], 1.0, &StepControls::default()).unwrap();
        assert!(table.rows.iter().all(|r| r.sup_error <= 1e-7));
    }
}
