//! Cell problems for the homogenized bipotential `ℳ₀(q, v, ξ)`.
//!
//! Both models reduce to the density problem
//!
//! ```text
//! ℳ₀ = inf { ∫₀¹ a(y) v²/(2 b(y)) + b(y) c(y)/2 dy : b > 0, ∫₀¹ b = 1 }
//! ```
//!
//! with `a = μ`, `c = ξ²/μ` for the wiggly-dissipation model and `a = ϱ`,
//! `c = (ξ + A sin 2πy)²/ϱ` for the wiggly-energy model (unit increment of
//! the path variable, `2π` inside the sine). Stationarity gives
//! `b = |v| √a / √(c + 2λ)`, and the multiplier `λ > −min c / 2` is the
//! unique root of the strictly decreasing constraint function. For `v = 0`
//! the infimum concentrates `b` at minimizers of `c` and equals `min c / 2`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::bipotential::SampledBipotential;
use crate::error::{Error, Result};
use crate::function::{PeriodicCoefficient, ScalarFunction};
use crate::quadrature::{self, CompositeRule, NODES_PER_PANEL};
use crate::system::GradientSystem1D;

const VALUE_REL_TOL: f64 = 1e-10;
const MAX_PANELS_PER_PIECE: usize = 4096;

#[derive(Debug, Clone)]
pub enum CellModel {
    /// Quadratic dissipation with oscillating mobility `μ(q, q/ε)`.
    WigglyDissipation { coefficient: PeriodicCoefficient },
    /// Wiggly energy `ε A(q) cos(q/ε)` with dissipation `ϱ(q) v²/2`.
    WigglyEnergy {
        amplitude: ScalarFunction,
        friction: ScalarFunction,
    },
}

#[derive(Debug, Clone)]
pub struct CellProblemSpec {
    pub model: CellModel,
    pub q: f64,
    /// Initial number of quadrature nodes on the unit cell (at least 64).
    pub n_y: usize,
}

impl CellProblemSpec {
    pub fn new(model: CellModel, q: f64, n_y: usize) -> Result<Self> {
        if n_y < 64 {
            return Err(Error::InvalidInput(format!("n_y = {n_y} < 64")));
        }
        match &model {
            CellModel::WigglyDissipation { coefficient } => {
                if coefficient.lower_bound() <= 0.0 {
                    return Err(Error::InvalidInput("mobility lower bound must be positive".into()));
                }
            }
            CellModel::WigglyEnergy { amplitude, friction } => {
                let (a, r) = (amplitude.eval(q), friction.eval(q));
                if !(a > 0.0 && r > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "need A(q) > 0 and ϱ(q) > 0, got A = {a}, ϱ = {r}"
                    )));
                }
            }
        }
        Ok(Self { model, q, n_y })
    }

    pub fn wiggly_dissipation(coefficient: PeriodicCoefficient, q: f64) -> Self {
        Self::new(CellModel::WigglyDissipation { coefficient }, q, 256).expect("positive mobility")
    }

    /// Wiggly-energy cell at constant amplitude and friction.
    pub fn wiggly_energy(amplitude: f64, friction: f64) -> Result<Self> {
        Self::new(
            CellModel::WigglyEnergy {
                amplitude: ScalarFunction::constant(amplitude),
                friction: ScalarFunction::constant(friction),
            },
            0.0,
            256,
        )
    }

    fn breaks(&self) -> Vec<f64> {
        match &self.model {
            CellModel::WigglyDissipation { coefficient } => coefficient.breaks(),
            CellModel::WigglyEnergy { .. } => vec![0.0, 1.0],
        }
    }

    /// Rate weight `a(y)`.
    fn rate_weight(&self, y: f64) -> f64 {
        match &self.model {
            CellModel::WigglyDissipation { coefficient } => coefficient.eval(self.q, y),
            CellModel::WigglyEnergy { friction, .. } => friction.eval(self.q),
        }
    }

    /// Force cost `c(y)` at force `ξ`.
    fn force_cost(&self, y: f64, xi: f64) -> f64 {
        match &self.model {
            CellModel::WigglyDissipation { coefficient } => xi * xi / coefficient.eval(self.q, y),
            CellModel::WigglyEnergy { amplitude, friction } => {
                let g = xi + amplitude.eval(self.q) * (2.0 * PI * y).sin();
                g * g / friction.eval(self.q)
            }
        }
    }

    /// `min_y c(y)` by dense sampling with golden-section refinement.
    fn min_force_cost(&self, xi: f64) -> f64 {
        let mut best = f64::INFINITY;
        for piece in self.breaks().windows(2) {
            let (_, v) = quadrature::dense_max(|y| -self.force_cost(y, xi), piece[0], piece[1], 1024);
            best = best
                .min(-v)
                .min(self.force_cost(piece[0], xi))
                .min(self.force_cost(piece[1], xi));
        }
        best.max(0.0)
    }
}

/// Solution of one cell problem.
#[derive(Debug, Clone)]
pub struct CellSolution {
    pub value: f64,
    /// Lagrange multiplier `λ` of the constraint `∫ b = 1`.
    pub multiplier: f64,
    /// Optimal density at the quadrature nodes, `(y, b(y))`. Empty when the
    /// optimum concentrates (`v = 0`).
    pub density: Vec<(f64, f64)>,
    /// `∫ b − 1` on the final rule before normalization.
    pub constraint_residual: f64,
    /// The infimum is a concentration limit at minimizers of the force cost.
    pub concentrated: bool,
    pub nodes: usize,
}

struct RuleSolve {
    value: f64,
    multiplier: f64,
    density: Vec<f64>,
    residual: f64,
}

/// Solves the density problem on a fixed rule.
fn solve_on_rule(rule: &CompositeRule, a: &[f64], c: &[f64], speed: f64) -> Result<RuleSolve> {
    let c_min = c.iter().copied().fold(f64::INFINITY, f64::min);
    let root_a: Vec<f64> = a.iter().map(|x| x.sqrt()).collect();
    let w = &rule.weights;
    // λ = (s − c_min)/2 with s > 0; D_i = c_i − c_min + s.
    let g = |s: f64| -> (f64, f64) {
        let mut val = 0.0;
        let mut der = 0.0;
        for i in 0..w.len() {
            let d = c[i] - c_min + s;
            let t = w[i] * speed * root_a[i] / d.sqrt();
            val += t;
            der -= 0.5 * t / d;
        }
        (val - 1.0, der)
    };
    let total_root_a: f64 = w.iter().zip(&root_a).map(|(w, r)| w * r).sum();
    let mut s_hi = (speed * total_root_a).powi(2).max(f64::MIN_POSITIVE);
    while g(s_hi).0 > 0.0 {
        s_hi *= 4.0;
        if !s_hi.is_finite() {
            return Err(Error::RootBracketFailure("upper bracket diverged".into()));
        }
    }
    let mut s_lo = s_hi;
    loop {
        s_lo *= 0.25;
        if s_lo < 1e-300 {
            return Err(Error::RootBracketFailure(format!(
                "constraint stays negative down to s = {s_lo:e}"
            )));
        }
        if g(s_lo).0 > 0.0 {
            break;
        }
        s_hi = s_lo;
    }
    // Newton in t = ln s, safeguarded by bisection.
    let (mut t_lo, mut t_hi) = (s_lo.ln(), s_hi.ln());
    let mut t = 0.5 * (t_lo + t_hi);
    for _ in 0..200 {
        let s = t.exp();
        let (val, der) = g(s);
        if val > 0.0 {
            t_lo = t;
        } else {
            t_hi = t;
        }
        if val.abs() <= 1e-15 || (t_hi - t_lo) <= 1e-15 * t.abs().max(1.0) {
            break;
        }
        let mut next = t - val / (der * s);
        if !(next > t_lo && next < t_hi) || !next.is_finite() {
            next = 0.5 * (t_lo + t_hi);
        }
        if (next - t).abs() <= 1e-16 * t.abs().max(1.0) {
            t = next;
            break;
        }
        t = next;
    }
    let s = t.exp();
    let mut density: Vec<f64> = (0..w.len())
        .map(|i| speed * root_a[i] / (c[i] - c_min + s).sqrt())
        .collect();
    let mass: f64 = w.iter().zip(&density).map(|(w, b)| w * b).sum();
    for b in &mut density {
        *b /= mass;
    }
    let value = (0..w.len())
        .map(|i| w[i] * (0.5 * a[i] * speed * speed / density[i] + 0.5 * density[i] * c[i]))
        .sum();
    Ok(RuleSolve {
        value,
        multiplier: 0.5 * (s - c_min),
        density,
        residual: mass - 1.0,
    })
}

/// Fast cell solver: Lagrange reduction with adaptive panel doubling until
/// the value changes by less than 1e-10 relative.
pub fn m0(spec: &CellProblemSpec, v: f64, xi: f64) -> Result<CellSolution> {
    if !(v.is_finite() && xi.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite (v, ξ) = ({v}, {xi})")));
    }
    if v == 0.0 {
        let c_min = spec.min_force_cost(xi);
        return Ok(CellSolution {
            value: 0.5 * c_min,
            multiplier: -0.5 * c_min,
            density: Vec::new(),
            constraint_residual: 0.0,
            concentrated: true,
            nodes: 0,
        });
    }
    let breaks = spec.breaks();
    let pieces = breaks.len() - 1;
    let mut panels = (spec.n_y / (NODES_PER_PANEL * pieces)).max(1);
    let mut prev: Option<RuleSolve> = None;
    loop {
        let rule = CompositeRule::new(&breaks, panels);
        let a: Vec<f64> = rule.nodes.iter().map(|&y| spec.rate_weight(y)).collect();
        let c: Vec<f64> = rule.nodes.iter().map(|&y| spec.force_cost(y, xi)).collect();
        let sol = solve_on_rule(&rule, &a, &c, v.abs())?;
        let done = match &prev {
            Some(p) => (sol.value - p.value).abs() <= VALUE_REL_TOL * sol.value.abs().max(1e-14),
            None => false,
        };
        if done || panels >= MAX_PANELS_PER_PIECE {
            return Ok(CellSolution {
                value: sol.value,
                multiplier: sol.multiplier,
                density: rule.nodes.iter().copied().zip(sol.density).collect(),
                constraint_residual: sol.residual,
                concentrated: false,
                nodes: rule.len(),
            });
        }
        prev = Some(sol);
        panels *= 2;
    }
}

/// `ℳ₀(q, v, ξ)` of the wiggly-dissipation model.
pub fn m0_wiggly_dissipation(spec: &CellProblemSpec, v: f64, xi: f64) -> Result<CellSolution> {
    match spec.model {
        CellModel::WigglyDissipation { .. } => m0(spec, v, xi),
        _ => Err(Error::InvalidInput("expected a wiggly-dissipation cell".into())),
    }
}

/// `ℳ₀(q, v, ξ)` of the wiggly-energy model.
pub fn m0_wiggly_energy(spec: &CellProblemSpec, v: f64, xi: f64) -> Result<CellSolution> {
    match spec.model {
        CellModel::WigglyEnergy { .. } => m0(spec, v, xi),
        _ => Err(Error::InvalidInput("expected a wiggly-energy cell".into())),
    }
}

/// Brute-force oracle: the density problem discretized at `n_b` midpoints,
/// minimized over the simplex by pairwise coordinate descent.
///
/// Each sweep moves mass between the coordinates with the largest and the
/// smallest partial derivative, solving the one-dimensional convex problem
/// for the exchanged amount exactly. It shares no code with [`m0`].
pub fn m0_oracle(spec: &CellProblemSpec, v: f64, xi: f64, n_b: usize) -> Result<f64> {
    if v == 0.0 {
        return Err(Error::InvalidInput("the oracle needs v != 0".into()));
    }
    let n = n_b;
    let ys: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let a: Vec<f64> = ys.iter().map(|&y| spec.rate_weight(y) * v * v).collect();
    let c: Vec<f64> = ys.iter().map(|&y| spec.force_cost(y, xi)).collect();
    // Per-coordinate objective f_i(b) = a_i/(2b) + c_i b/2.
    let df = |i: usize, b: f64| -0.5 * a[i] / (b * b) + 0.5 * c[i];
    let ddf = |i: usize, b: f64| a[i] / (b * b * b);
    let mut b = vec![1.0; n];
    let mut grad: Vec<f64> = (0..n).map(|i| df(i, b[i])).collect();
    // Gradient spread is measured against the size of the integrand.
    let scale = a.iter().zip(&c).map(|(a, c)| 0.5 * (a + c)).fold(0.0, f64::max);
    let cap = 2_000_000;
    for _ in 0..cap {
        let (mut hi, mut lo) = (0, 0);
        for i in 1..n {
            if grad[i] > grad[hi] {
                hi = i;
            }
            if grad[i] < grad[lo] {
                lo = i;
            }
        }
        if grad[hi] - grad[lo] <= 1e-11 * scale {
            let value = (0..n).map(|i| 0.5 * a[i] / b[i] + 0.5 * c[i] * b[i]).sum::<f64>() / n as f64;
            return Ok(value);
        }
        // Move t from `hi` to `lo`: φ'(t) = df(lo, b_lo + t) − df(hi, b_hi − t).
        let (bh, bl) = (b[hi], b[lo]);
        let phi = |t: f64| df(lo, bl + t) - df(hi, bh - t);
        let (mut t_lo, mut t_hi) = (0.0, bh);
        let mut t = 0.5 * bh;
        for _ in 0..100 {
            let p = phi(t);
            if p < 0.0 {
                t_lo = t;
            } else {
                t_hi = t;
            }
            let dp = ddf(lo, bl + t) + ddf(hi, bh - t);
            let mut next = t - p / dp;
            if !(next > t_lo && next < t_hi) {
                next = 0.5 * (t_lo + t_hi);
            }
            if (next - t).abs() <= 1e-16 * bh {
                t = next;
                break;
            }
            t = next;
        }
        b[hi] = bh - t;
        b[lo] = bl + t;
        grad[hi] = df(hi, b[hi]);
        grad[lo] = df(lo, b[lo]);
    }
    Err(Error::NonConvergence(cap))
}

/// Mean, square-root moment and maximum of `μ(q, ·)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// `μ̄ = ∫ μ dy`.
    pub mean: f64,
    /// `μ_{1/2} = (∫ √μ dy)²`.
    pub half: f64,
    pub max: f64,
}

pub fn moments(mu: &PeriodicCoefficient, q: f64) -> Moments {
    let m = Moments {
        mean: mu.mean(q),
        half: mu.half_moment(q),
        max: mu.max(q),
    };
    debug_assert!(m.half <= m.mean * (1.0 + 1e-12) && m.mean <= m.max * (1.0 + 1e-12));
    m
}

fn dissipation_coefficient(spec: &CellProblemSpec) -> Result<&PeriodicCoefficient> {
    match &spec.model {
        CellModel::WigglyDissipation { coefficient } => Ok(coefficient),
        _ => Err(Error::InvalidInput("expected a wiggly-dissipation cell".into())),
    }
}

/// One row of a `Φ` table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSample {
    pub s: f64,
    pub phi: f64,
    /// `√(s(1−s))/μ̄`.
    pub lower_bound: f64,
}

#[derive(Debug, Clone)]
pub struct PhiTable {
    pub moments: Moments,
    pub rows: Vec<PhiSample>,
}

impl PhiTable {
    /// Reference values of `Φ` at `s = 0, 1/2, 1`.
    pub fn expected_anchors(&self) -> [(f64, f64); 3] {
        let m = self.moments;
        [
            (0.0, m.half / (2.0 * m.mean * m.mean)),
            (0.5, 1.0 / (2.0 * m.mean)),
            (1.0, 1.0 / (2.0 * m.max)),
        ]
    }

    /// `min_s Φ(s) − √(s(1−s))/μ̄`.
    pub fn min_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.phi - r.lower_bound)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `Φ(q, s) = ℳ₀(v, ξ)/(ξ² + μ̄²v²)` on the rays `ξ = √s`, `v = √(1−s)/μ̄`.
pub fn phi_extract(spec: &CellProblemSpec, s_grid: &[f64]) -> Result<PhiTable> {
    let mu = dissipation_coefficient(spec)?;
    if s_grid.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::InvalidInput("s must lie in [0, 1]".into()));
    }
    let m = moments(mu, spec.q);
    let rows = s_grid
        .par_iter()
        .map(|&s| {
            let xi = s.sqrt();
            let v = (1.0 - s).sqrt() / m.mean;
            let val = m0(spec, v, xi)?.value;
            Ok(PhiSample {
                s,
                phi: val / (xi * xi + m.mean * m.mean * v * v),
                lower_bound: (s * (1.0 - s)).sqrt() / m.mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhiTable { moments: m, rows })
}

/// `ℳ₀ − (R_eff ⊕ R_eff*)` on a grid, with `R_eff = μ̄v²/2`.
#[derive(Debug, Clone)]
pub struct ConjectureReport {
    pub max_difference: f64,
    pub argmax: (f64, f64),
    /// `max |M|` over the grid.
    pub scale: f64,
    pub differences: SampledBipotential,
}

pub fn conjecture_check(spec: &CellProblemSpec, v_grid: &[f64], xi_grid: &[f64]) -> Result<ConjectureReport> {
    let mu = dissipation_coefficient(spec)?;
    let mean = mu.mean(spec.q);
    let m = cell_grid(spec, v_grid, xi_grid)?;
    let diffs: Vec<f64> = m
        .values
        .iter()
        .enumerate()
        .map(|(k, &val)| {
            let v = v_grid[k / xi_grid.len()];
            let xi = xi_grid[k % xi_grid.len()];
            val - (0.5 * mean * v * v + 0.5 * xi * xi / mean)
        })
        .collect();
    let (k, &max_difference) = diffs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::DegenerateGrid)?;
    let scale = m.max_abs();
    Ok(ConjectureReport {
        max_difference,
        argmax: (v_grid[k / xi_grid.len()], xi_grid[k % xi_grid.len()]),
        scale,
        differences: SampledBipotential::new(spec.q, v_grid.to_vec(), xi_grid.to_vec(), diffs)?,
    })
}

/// Midpoint probe of joint convexity.
#[derive(Debug, Clone, Copy)]
pub struct ConvexityProbe {
    pub moments: Moments,
    /// `ℳ₀(v₀, 0)`.
    pub rate_axis: f64,
    /// `ℳ₀(0, μ̄v₀)`.
    pub force_axis: f64,
    /// `ℳ₀(v₀/2, μ̄v₀/2)`, on the contact line.
    pub midpoint: f64,
    /// `midpoint − (rate_axis + force_axis)/2`; positive certifies that
    /// `ℳ₀` is not jointly convex.
    pub violation: f64,
    /// `μ̄ − (μ_{1/2} + μ̄²/μ_max)`; positive exactly when the probe fails.
    pub scalar_gap: f64,
}

pub fn joint_convexity_probe(spec: &CellProblemSpec, v0: f64) -> Result<ConvexityProbe> {
    if v0 == 0.0 {
        return Err(Error::InvalidInput("v0 must be nonzero".into()));
    }
    let mu = dissipation_coefficient(spec)?;
    let m = moments(mu, spec.q);
    let rate_axis = m0(spec, v0, 0.0)?.value;
    let force_axis = m0(spec, 0.0, m.mean * v0)?.value;
    let midpoint = m0(spec, 0.5 * v0, 0.5 * m.mean * v0)?.value;
    Ok(ConvexityProbe {
        moments: m,
        rate_axis,
        force_axis,
        midpoint,
        violation: midpoint - 0.5 * (rate_axis + force_axis),
        scalar_gap: m.mean - (m.half + m.mean * m.mean / m.max),
    })
}

/// Effective and limit distances between `q0 < q1`:
/// `D_eff = ∫ √μ̄(q) dq` and `D₀ = ∫ √μ_{1/2}(q) dq`.
pub fn riemannian_distances(mu: &PeriodicCoefficient, q0: f64, q1: f64) -> Result<(f64, f64)> {
    if !(q0 < q1) {
        return Err(Error::InvalidInput(format!("need q0 < q1, got {q0}, {q1}")));
    }
    let d_eff = quadrature::integrate(|q| mu.mean(q).sqrt(), q0, q1);
    let d_zero = quadrature::integrate(|q| mu.half_moment(q).sqrt(), q0, q1);
    Ok((d_eff, d_zero))
}

/// Contact rate of the wiggly-energy model:
/// `ϱ v = sign(ξ) √max(ξ² − A², 0)`.
pub fn contact_relation_wiggly_energy(amplitude: f64, friction: f64, xi: f64) -> f64 {
    xi.signum() * (xi * xi - amplitude * amplitude).max(0.0).sqrt() / friction
}

/// `R_eff(v) = ∫₀^{|v|} √(A² + (ϱw)²) dw` in closed form.
pub fn r_eff_wiggly_energy(amplitude: f64, friction: f64, v: f64) -> f64 {
    let (a, r, v) = (amplitude, friction, v.abs());
    if v == 0.0 {
        return 0.0;
    }
    0.5 * (v * (a * a + r * r * v * v).sqrt() + a * a / r * (r * v / a).asinh())
}

/// `R_eff′(v) = sign(v) √(A² + (ϱv)²)`; at `v = 0` the right derivative `A`.
pub fn r_eff_wiggly_energy_slope(amplitude: f64, friction: f64, v: f64) -> f64 {
    let s = (amplitude * amplitude + (friction * v).powi(2)).sqrt();
    if v < 0.0 {
        -s
    } else {
        s
    }
}

/// `ℳ₀` on a rate/force grid at the cell's state, evaluated in parallel.
pub fn cell_grid(spec: &CellProblemSpec, v_grid: &[f64], xi_grid: &[f64]) -> Result<SampledBipotential> {
    SampledBipotential::try_from_fn(spec.q, v_grid.to_vec(), xi_grid.to_vec(), |v, xi| {
        Ok(m0(spec, v, xi)?.value)
    })
}

/// The force-shifted bipotential `𝒩₀(q, v, η) = ℳ₀(q, v, η − ℰ′(q))` built
/// from the energy (including tilts) of `system`.
pub fn tilted_n0<'a>(spec: &'a CellProblemSpec, system: &GradientSystem1D) -> impl Fn(f64, f64) -> Result<f64> + Sync + 'a {
    let slope = system.total_slope(spec.q);
    move |v, eta| Ok(m0(spec, v, eta - slope)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine_cell() -> CellProblemSpec {
        CellProblemSpec::wiggly_dissipation(PeriodicCoefficient::cosine(1.0, 0.8).unwrap(), 0.0)
    }

    #[test]
    fn constant_coefficient_gives_dual_sum() {
        let c = 1.7;
        let spec = CellProblemSpec::wiggly_dissipation(PeriodicCoefficient::constant(c).unwrap(), 0.0);
        for (v, xi) in [(1.0, 0.3), (-0.4, 2.0), (0.2, -0.1), (0.0, 1.3)] {
            let sol = m0(&spec, v, xi).unwrap();
            let expected = 0.5 * c * v * v + 0.5 * xi * xi / c;
            assert!((sol.value - expected).abs() <= 1e-13 * expected.max(1.0), "{v} {xi}");
            if v != 0.0 {
                assert!(sol.density.iter().all(|(_, b)| (b - 1.0).abs() < 1e-12));
                assert!(sol.constraint_residual.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn axis_values_match_moments() {
        let spec = cosine_cell();
        let mu = dissipation_coefficient(&spec).unwrap();
        let m = moments(mu, 0.0);
        let rate_axis = m0(&spec, 1.0, 0.0).unwrap().value;
        assert!((rate_axis - 0.5 * m.half).abs() <= 1e-10 * m.half);
        let force_axis = m0(&spec, 0.0, 1.0).unwrap().value;
        assert!((force_axis - 1.0 / 3.6).abs() <= 1e-12);
    }

    #[test]
    fn contact_line_value() {
        let spec = cosine_cell();
        let sol = m0(&spec, 1.0, 1.0).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!(sol.multiplier.abs() < 1e-10);
        // Optimal density is μ/μ̄.
        for &(y, b) in &sol.density {
            assert!((b - (1.0 + 0.8 * (2.0 * PI * y).cos())).abs() < 1e-10);
        }
    }

    #[test]
    fn degree_two_homogeneity() {
        let spec = cosine_cell();
        for (v, xi) in [(0.7, 0.4), (-1.1, 0.9), (0.3, -1.5)] {
            let base = m0(&spec, v, xi).unwrap().value;
            for t in [2.0, 1.0 / 3.0] {
                let scaled = m0(&spec, t * v, t * xi).unwrap().value;
                assert!((scaled - t * t * base).abs() <= 1e-8 * scaled.abs());
            }
        }
    }

    #[test]
    fn wiggly_energy_examples() {
        let flat = CellProblemSpec::new(
            CellModel::WigglyEnergy {
                amplitude: ScalarFunction::constant(1e-300),
                friction: ScalarFunction::constant(2.0),
            },
            0.0,
            64,
        )
        .unwrap();
        let val = m0(&flat, 0.5, 1.2).unwrap().value;
        assert!((val - (0.5 * 2.0 * 0.25 + 1.44 / 4.0)).abs() < 1e-12);

        let spec = CellProblemSpec::wiggly_energy(1.0, 1.0).unwrap();
        let contact = m0(&spec, 1.0, 2f64.sqrt()).unwrap().value;
        assert!((contact - 2f64.sqrt()).abs() < 1e-8);
        let plateau = m0(&spec, 0.0, 0.5).unwrap().value;
        assert!(plateau.abs() < 1e-14);
    }

    #[test]
    fn oracle_agrees_with_fast_path() {
        let spec = cosine_cell();
        for (v, xi) in [(1.0, 0.0), (0.5, 0.5), (-1.5, 1.0)] {
            let fast = m0(&spec, v, xi).unwrap().value;
            let slow = m0_oracle(&spec, v, xi, 512).unwrap();
            assert!((fast - slow).abs() <= 1e-5 * fast, "{v} {xi}: {fast} vs {slow}");
        }
        let unit = CellProblemSpec::wiggly_dissipation(PeriodicCoefficient::constant(1.0).unwrap(), 0.0);
        assert!((m0_oracle(&unit, 1.0, 1.0, 512).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn contact_relation_examples() {
        assert_eq!(contact_relation_wiggly_energy(1.0, 1.0, 1.0), 0.0);
        assert!((contact_relation_wiggly_energy(1.0, 1.0, 2f64.sqrt()) - 1.0).abs() < 1e-15);
        assert!((contact_relation_wiggly_energy(1.0, 1.0, -2.0) + 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(contact_relation_wiggly_energy(1.0, 1.0, 0.3), 0.0);
    }

    #[test]
    fn r_eff_slope_inverts_contact_relation() {
        for xi in [1.0, 1.3, 2.0, 3.0, -2.5] {
            let (a, r) = (1.0, 1.7);
            let v = contact_relation_wiggly_energy(a, r, xi);
            assert!((r_eff_wiggly_energy_slope(a, r, v).abs() - xi.abs()).abs() < 1e-14);
        }
        assert_eq!(r_eff_wiggly_energy(1.0, 1.0, 0.0), 0.0);
        assert_eq!(r_eff_wiggly_energy_slope(2.0, 1.0, 0.0), 2.0);
    }

    #[test]
    fn r_eff_matches_quadrature() {
        let direct = quadrature::integrate(|w| (1.0 + w * w).sqrt(), 0.0, 1.0);
        assert!((r_eff_wiggly_energy(1.0, 1.0, 1.0) - direct).abs() < 1e-12);
        assert!((direct - 1.147793).abs() < 1e-6);
    }

    #[test]
    fn wiggly_energy_oracle_and_contact() {
        let spec = CellProblemSpec::wiggly_energy(1.0, 1.5).unwrap();
        for (v, xi) in [(0.8, 0.3), (1.2, 2.0), (-0.6, 1.1)] {
            let fast = m0(&spec, v, xi).unwrap().value;
            let slow = m0_oracle(&spec, v, xi, 1024).unwrap();
            assert!((fast - slow).abs() <= 1e-5 * fast.abs(), "{v} {xi}: {fast} vs {slow}");
        }
        for xi in [1.2, 2.0, 3.5] {
            let v = contact_relation_wiggly_energy(1.0, 1.5, xi);
            let val = m0(&spec, v, xi).unwrap().value;
            assert!((val - v * xi).abs() < 1e-8 * (v * xi), "{xi}");
        }
    }

    #[test]
    fn wrong_model_is_rejected() {
        let spec = CellProblemSpec::wiggly_energy(1.0, 1.0).unwrap();
        assert!(phi_extract(&spec, &[0.5]).is_err());
        assert!(m0_wiggly_dissipation(&spec, 1.0, 1.0).is_err());
        assert!(CellProblemSpec::wiggly_energy(0.0, 1.0).is_err());
    }
}
