//! Diffusion through an `ε`-thin layer of mobility `ε a_*(x/ε)` and its
//! limit with linear transmission conditions at `x = 0`.
//!
//! Both models are discretized as a chain of cells `i` with width `Δxᵢ`,
//! centre `xᵢ` and equilibrium density `wᵢ = e^{−V(xᵢ)}/Z`. Neighbouring
//! cells exchange the rightward flux
//!
//! ```text
//! J = κ √(wᵢ wⱼ) (uᵢ/wᵢ − uⱼ/wⱼ),
//! ```
//!
//! with `κ` the series conductance of the two half cells. The scheme keeps
//! `w` exactly stationary, conserves mass and, being a reversible Markov
//! generator, dissipates the discrete relative entropy. In the limit model
//! the face at `x = 0` carries the additional membrane resistance `1/a_eff`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::ScalarFunction;
use crate::grid;
use crate::quadrature::{self, CompositeRule};

/// `λ_B(z) = z log z − z + 1` with `0 log 0 = 0`.
pub fn boltzmann(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z * z.ln() - z + 1.0
    }
}

/// `𝖢*(ζ) = 4 cosh(ζ/2) − 4`.
pub fn cosh_dissipation(zeta: f64) -> f64 {
    // 4cosh(ζ/2) − 4 = 8 sinh²(ζ/4) avoids cancellation near 0.
    8.0 * (0.25 * zeta).sinh().powi(2)
}

/// `(𝖢*)′(ζ) = 2 sinh(ζ/2)`.
pub fn cosh_dissipation_slope(zeta: f64) -> f64 {
    2.0 * (0.5 * zeta).sinh()
}

/// Legendre dual `𝖢(s) = 2s asinh(s/2) − 4√(1 + s²/4) + 4`.
pub fn cosh_dissipation_primal(s: f64) -> f64 {
    let h = 0.5 * s;
    let root = (1.0 + h * h).sqrt();
    // 4 − 4√(1+h²) = −4h²/(1+√(1+h²)).
    2.0 * s * h.asinh() - 4.0 * h * h / (1.0 + root)
}

/// `|√(ab)·2 sinh(½ log(a/b)) − (a − b)|`.
pub fn transmission_identity_check(a: f64, b: f64) -> f64 {
    ((a * b).sqrt() * cosh_dissipation_slope(a.ln() - b.ln()) - (a - b)).abs()
}

/// `1/a_eff = ∫₀¹ dy / a_*(y)`.
pub fn effective_membrane_coefficient(a_star: &ScalarFunction) -> f64 {
    1.0 / quadrature::integrate(|y| 1.0 / a_star.eval(y), 0.0, 1.0)
}

/// Interface flux `a_eff (u(0⁺) − u(0⁻))` in the convention of the bulk
/// flux `a(∂ₓu + u∂ₓV)`. Mass moves to the right when it is negative.
pub fn interface_flux(u_minus: f64, u_plus: f64, a_eff: f64) -> f64 {
    a_eff * (u_plus - u_minus)
}

/// `w₀ = e^{−V}/Z` on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct EquilibriumDensity {
    potential: ScalarFunction,
    pub normalization: f64,
}

impl EquilibriumDensity {
    pub fn eval(&self, x: f64) -> f64 {
        (-self.potential.eval(x)).exp() / self.normalization
    }
}

pub fn equilibrium_density(potential: &ScalarFunction, lo: f64, hi: f64) -> Result<EquilibriumDensity> {
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("empty domain [{lo}, {hi}]")));
    }
    let z = quadrature::integrate(|x| (-potential.eval(x)).exp(), lo, hi);
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::InvalidInput("e^{-V} is not integrable".into()));
    }
    Ok(EquilibriumDensity {
        potential: potential.clone(),
        normalization: z,
    })
}

/// Layer problem on `[−1, 1]` with the layer `[0, ε]`.
#[derive(Debug, Clone)]
pub struct MembraneProblem {
    pub a_minus: ScalarFunction,
    pub a_plus: ScalarFunction,
    pub a_star: ScalarFunction,
    pub potential: ScalarFunction,
    pub epsilon: f64,
    /// Cells on each of `[−1, 0]` and `[ε, 1]`.
    pub bulk_cells: usize,
    pub layer_cells: usize,
}

impl MembraneProblem {
    /// Uniform mobilities `a_± ≡ 1`, `a_* ≡ 1`, no tilt.
    pub fn uniform(epsilon: f64, bulk_cells: usize) -> Result<Self> {
        Self::new(
            ScalarFunction::constant(1.0),
            ScalarFunction::constant(1.0),
            ScalarFunction::constant(1.0),
            ScalarFunction::zero(),
            epsilon,
            bulk_cells,
            32,
        )
    }

    pub fn new(
        a_minus: ScalarFunction,
        a_plus: ScalarFunction,
        a_star: ScalarFunction,
        potential: ScalarFunction,
        epsilon: f64,
        bulk_cells: usize,
        layer_cells: usize,
    ) -> Result<Self> {
        let p = Self {
            a_minus,
            a_plus,
            a_star,
            potential,
            epsilon,
            bulk_cells,
            layer_cells,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidInput(format!("ε = {} outside (0, 1)", self.epsilon)));
        }
        if self.layer_cells < 32 {
            return Err(Error::InvalidInput(format!(
                "layer needs at least 32 cells, got {}",
                self.layer_cells
            )));
        }
        if self.bulk_cells < 2 {
            return Err(Error::InvalidInput("need at least two bulk cells per side".into()));
        }
        let samples = grid::uniform(0.0, 1.0, 257);
        let lower = samples
            .iter()
            .map(|&x| self.a_minus.eval(-x).min(self.a_plus.eval(x)).min(self.a_star.eval(x)))
            .fold(f64::INFINITY, f64::min);
        if !(lower > 0.0) {
            return Err(Error::InvalidInput(format!(
                "mobilities must be bounded below by a positive constant, sampled minimum {lower}"
            )));
        }
        Ok(())
    }

    pub fn a_eff(&self) -> f64 {
        effective_membrane_coefficient(&self.a_star)
    }

    /// Finite-volume chain of the layer model.
    pub fn layer_chain(&self) -> Result<FvChain> {
        let eps = self.epsilon;
        let mut edges = grid::uniform(-1.0, 0.0, self.bulk_cells + 1);
        edges.extend(grid::uniform(0.0, eps, self.layer_cells + 1).into_iter().skip(1));
        edges.extend(grid::uniform(eps, 1.0, self.bulk_cells + 1).into_iter().skip(1));
        let (am, ap, ast) = (self.a_minus.clone(), self.a_plus.clone(), self.a_star.clone());
        let mobility = move |x: f64| {
            if x < 0.0 {
                am.eval(x)
            } else if x <= eps {
                eps * ast.eval(x / eps)
            } else {
                ap.eval(x)
            }
        };
        FvChain::new(edges, &mobility, &self.potential, None)
    }

    /// Finite-volume chain of the limit model with `bulk_cells` per side.
    pub fn limit_chain(&self) -> Result<FvChain> {
        limit_chain(&self.a_minus, &self.a_plus, self.a_eff(), &self.potential, self.bulk_cells)
    }

    /// The problem with layer width `epsilon`.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut p = self.clone();
        p.epsilon = epsilon;
        p.validate()?;
        Ok(p)
    }
}

/// Chain of the limit model: `cells` per side, membrane resistance
/// `1/a_eff` in series with the two half cells at `x = 0`.
pub fn limit_chain(
    a_minus: &ScalarFunction,
    a_plus: &ScalarFunction,
    a_eff: f64,
    potential: &ScalarFunction,
    cells: usize,
) -> Result<FvChain> {
    if !(a_eff > 0.0) {
        return Err(Error::InvalidInput(format!("a_eff must be positive, got {a_eff}")));
    }
    let mut edges = grid::uniform(-1.0, 0.0, cells + 1);
    edges.extend(grid::uniform(0.0, 1.0, cells + 1).into_iter().skip(1));
    let (am, ap) = (a_minus.clone(), a_plus.clone());
    let mobility = move |x: f64| if x < 0.0 { am.eval(x) } else { ap.eval(x) };
    FvChain::new(edges, &mobility, potential, Some((cells - 1, a_eff)))
}

/// A one-dimensional chain of finite-volume cells with no-flux ends.
#[derive(Debug, Clone)]
pub struct FvChain {
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    /// Equilibrium density at cell centres.
    pub w: Vec<f64>,
    /// Conductance of face `f` between cells `f` and `f + 1`.
    pub conductance: Vec<f64>,
    /// Face carrying the membrane, if any.
    pub membrane_face: Option<usize>,
}

impl FvChain {
    fn new(
        edges: Vec<f64>,
        mobility: &dyn Fn(f64) -> f64,
        potential: &ScalarFunction,
        membrane: Option<(usize, f64)>,
    ) -> Result<Self> {
        if edges.len() < 3 || edges.windows(2).any(|e| e[0] >= e[1]) {
            return Err(Error::DegenerateGrid);
        }
        let centers: Vec<f64> = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
        let widths: Vec<f64> = edges.windows(2).map(|e| e[1] - e[0]).collect();
        let eq = equilibrium_density(potential, edges[0], edges[edges.len() - 1])?;
        let w: Vec<f64> = centers.iter().map(|&x| eq.eval(x)).collect();
        let a: Vec<f64> = centers.iter().map(|&x| mobility(x)).collect();
        let conductance = (0..centers.len() - 1)
            .map(|f| {
                let extra = match membrane {
                    Some((face, a_eff)) if face == f => 1.0 / a_eff,
                    _ => 0.0,
                };
                1.0 / (0.5 * widths[f] / a[f] + extra + 0.5 * widths[f + 1] / a[f + 1])
            })
            .collect();
        Ok(Self {
            edges,
            centers,
            widths,
            w,
            conductance,
            membrane_face: membrane.map(|m| m.0),
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Cell averages of `f` (16-point Gauss per cell).
    pub fn project(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let rule = CompositeRule::new(&[0.0, 1.0], 1);
        self.edges
            .windows(2)
            .map(|e| rule.integrate(|s| f(e[0] + s * (e[1] - e[0]))))
            .collect()
    }

    /// Cell averages of `w` rescaled to unit discrete mass.
    pub fn equilibrium(&self) -> Vec<f64> {
        let m = self.mass(&self.w);
        self.w.iter().map(|w| w / m).collect()
    }

    pub fn mass(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.widths).map(|(u, h)| u * h).sum()
    }

    /// Discrete relative entropy `Σ Δxᵢ wᵢ λ_B(uᵢ/wᵢ)`.
    pub fn entropy(&self, u: &[f64]) -> f64 {
        (0..self.len())
            .map(|i| self.widths[i] * self.w[i] * boltzmann(u[i] / self.w[i]))
            .sum()
    }

    /// Rightward fluxes through the interior faces.
    pub fn fluxes(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len() - 1)
            .map(|f| {
                let (wi, wj) = (self.w[f], self.w[f + 1]);
                self.conductance[f] * (wi * wj).sqrt() * (u[f] / wi - u[f + 1] / wj)
            })
            .collect()
    }

    /// `u̇` of the semi-discrete scheme.
    pub fn rate(&self, u: &[f64]) -> Vec<f64> {
        let j = self.fluxes(u);
        (0..self.len())
            .map(|i| {
                let inflow = if i > 0 { j[i - 1] } else { 0.0 };
                let outflow = if i + 1 < self.len() { j[i] } else { 0.0 };
                (inflow - outflow) / self.widths[i]
            })
            .collect()
    }

    /// `∫ |u − v|` for piecewise-constant `u` on this chain and `v` on `other`.
    pub fn l1_distance(&self, u: &[f64], other: &FvChain, v: &[f64]) -> f64 {
        let mut cuts: Vec<f64> = self.edges.iter().chain(&other.edges).copied().collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let locate = |edges: &[f64], x: f64| edges.partition_point(|&e| e <= x).saturating_sub(1).min(edges.len() - 2);
        cuts.windows(2)
            .map(|c| {
                let mid = 0.5 * (c[0] + c[1]);
                (u[locate(&self.edges, mid)] - v[locate(&other.edges, mid)]).abs() * (c[1] - c[0])
            })
            .sum()
    }

    /// One implicit-Euler step of size `dt` (Thomas algorithm).
    pub fn implicit_euler_step(&self, u: &[f64], dt: f64) -> Result<Vec<f64>> {
        let n = self.len();
        // Row i: Δxᵢuᵢ' + dt(Jᵢ − Jᵢ₋₁) = Δxᵢuᵢ, with J linear in u.
        let mut lower = vec![0.0; n];
        let mut diag: Vec<f64> = self.widths.clone();
        let mut upper = vec![0.0; n];
        for f in 0..n - 1 {
            let (wi, wj) = (self.w[f], self.w[f + 1]);
            let k = dt * self.conductance[f] * (wi * wj).sqrt();
            // J_f = k/dt (u_f/w_f − u_{f+1}/w_{f+1}).
            diag[f] += k / wi;
            upper[f] -= k / wj;
            diag[f + 1] += k / wj;
            lower[f + 1] -= k / wi;
        }
        let rhs: Vec<f64> = u.iter().zip(&self.widths).map(|(u, h)| u * h).collect();
        thomas(&lower, &diag, &upper, &rhs)
    }

    /// Mirror image `x ↦ −x` of the chain.
    pub fn mirrored(&self) -> FvChain {
        let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<f64>>();
        FvChain {
            edges: self.edges.iter().rev().map(|x| -x).collect(),
            centers: self.centers.iter().rev().map(|x| -x).collect(),
            widths: rev(&self.widths),
            w: rev(&self.w),
            conductance: rev(&self.conductance),
            membrane_face: self.membrane_face.map(|f| self.len() - 2 - f),
        }
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::LinearSolveFailure("zero pivot in row 0".into()));
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::LinearSolveFailure(format!("zero pivot in row {i}")));
        }
        c[i] = upper[i] / beta;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub dt: f64,
    pub t_end: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 1.0 }
    }
}

/// Time series of a finite-volume solve.
#[derive(Debug, Clone)]
pub struct MembraneSeries {
    pub chain: FvChain,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
    pub entropy: Vec<f64>,
    pub halvings: usize,
}

impl MembraneSeries {
    /// Largest relative mass change across one step.
    pub fn max_mass_drift(&self) -> f64 {
        self.mass
            .windows(2)
            .map(|m| (m[1] - m[0]).abs() / m[0].abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Largest entropy increase across one step (non-positive when monotone).
    pub fn max_entropy_increase(&self) -> f64 {
        self.entropy
            .windows(2)
            .map(|e| e[1] - e[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("non-empty series")
    }

    /// State nearest to time `t`.
    pub fn state_near(&self, t: f64) -> &[f64] {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        &self.states[k]
    }

    /// Mass in the cells left of `x`.
    pub fn mass_left_of(&self, k: usize, x: f64) -> f64 {
        let u = &self.states[k];
        (0..self.chain.len())
            .filter(|&i| self.chain.edges[i + 1] <= x)
            .map(|i| u[i] * self.chain.widths[i])
            .sum()
    }
}

/// Implicit-Euler time series on `chain` from cell averages `u0`.
pub fn solve_chain(chain: &FvChain, u0: Vec<f64>, opts: &SolveOptions) -> Result<MembraneSeries> {
    if u0.len() != chain.len() {
        return Err(Error::InvalidInput("initial datum does not match the grid".into()));
    }
    if u0.iter().any(|&u| !(u >= 0.0)) {
        return Err(Error::InvalidInput("initial datum must be non-negative".into()));
    }
    if !(opts.dt > 0.0 && opts.t_end > 0.0) {
        return Err(Error::InvalidInput("dt and T must be positive".into()));
    }
    let mut series = MembraneSeries {
        chain: chain.clone(),
        times: vec![0.0],
        mass: vec![chain.mass(&u0)],
        entropy: vec![chain.entropy(&u0)],
        states: vec![u0],
        halvings: 0,
    };
    let mut t = 0.0;
    let steps = (opts.t_end / opts.dt).round().max(1.0) as usize;
    for s in 1..=steps {
        let target = if s == steps { opts.t_end } else { s as f64 * opts.dt };
        let mut u = series.states.last().expect("non-empty").clone();
        // Sub-steps are halved until positivity holds.
        let mut pieces = 1usize;
        loop {
            let h = (target - t) / pieces as f64;
            let mut trial = Some(u.clone());
            for _ in 0..pieces {
                let next = chain.implicit_euler_step(trial.as_ref().expect("set"), h)?;
                let scale = next.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                trial = (!next.iter().any(|&x| x < -1e-14 * scale)).then_some(next);
                if trial.is_none() {
                    break;
                }
            }
            if let Some(accepted) = trial {
                u = accepted;
                break;
            }
            if pieces >= 1 << 20 {
                return Err(Error::PositivityLoss(t));
            }
            pieces *= 2;
            series.halvings += 1;
        }
        t = target;
        series.times.push(t);
        series.mass.push(chain.mass(&u));
        series.entropy.push(chain.entropy(&u));
        series.states.push(u);
    }
    Ok(series)
}

/// Layer model with initial density `u0` (projected onto cells).
pub fn solve_layer_pde(prob: &MembraneProblem, u0: impl Fn(f64) -> f64, opts: &SolveOptions) -> Result<MembraneSeries> {
    let chain = prob.layer_chain()?;
    let init = chain.project(u0);
    solve_chain(&chain, init, opts)
}

/// Limit model with transmission coefficient `a_eff`.
pub fn solve_limit_pde(
    a_minus: &ScalarFunction,
    a_plus: &ScalarFunction,
    a_eff: f64,
    potential: &ScalarFunction,
    cells: usize,
    u0: impl Fn(f64) -> f64,
    opts: &SolveOptions,
) -> Result<MembraneSeries> {
    let chain = limit_chain(a_minus, a_plus, a_eff, potential, cells)?;
    let init = chain.project(u0);
    solve_chain(&chain, init, opts)
}

/// A field on `[−1, 1]` that may jump at `0`.
#[derive(Debug, Clone)]
pub struct PiecewiseField {
    pub left: ScalarFunction,
    pub right: ScalarFunction,
}

/// `ℛ̂₀*(u, ξ)` by the trapezoid rule with `n` intervals per side.
pub fn dual_dissipation_functional(
    u: &PiecewiseField,
    xi: &PiecewiseField,
    a_minus: &ScalarFunction,
    a_plus: &ScalarFunction,
    a_eff: f64,
    n: usize,
) -> f64 {
    let trap = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
        let xs = grid::uniform(lo, hi, n + 1);
        let h = (hi - lo) / n as f64;
        h * (0.5 * f(xs[0]) + xs[1..n].iter().map(|&x| f(x)).sum::<f64>() + 0.5 * f(xs[n]))
    };
    let bulk_left = trap(&|x| 0.5 * a_minus.eval(x) * xi.left.deriv(x).powi(2) * u.left.eval(x), -1.0, 0.0);
    let bulk_right = trap(&|x| 0.5 * a_plus.eval(x) * xi.right.deriv(x).powi(2) * u.right.eval(x), 0.0, 1.0);
    let (um, up) = (u.left.eval(0.0), u.right.eval(0.0));
    let jump = xi.right.eval(0.0) - xi.left.eval(0.0);
    bulk_left + bulk_right + a_eff * (um * up).sqrt() * cosh_dissipation(jump)
}

/// Logarithmic mean `(a − b)/(log a − log b)`.
pub fn log_mean(a: f64, b: f64) -> f64 {
    if a == b {
        return a;
    }
    let x = a / b - 1.0;
    if x.abs() < 1e-4 {
        b * (1.0 + x / 2.0 - x * x / 12.0 + x * x * x / 24.0)
    } else {
        (a - b) / (a.ln() - b.ln())
    }
}

/// Energy-dissipation balance of a chain solve.
#[derive(Debug, Clone, Copy)]
pub struct DiscreteLedger {
    pub energy_start: f64,
    pub energy_end: f64,
    pub int_r: f64,
    pub int_rstar: f64,
}

impl DiscreteLedger {
    pub fn residual(&self) -> f64 {
        self.energy_end + self.int_r + self.int_rstar - self.energy_start
    }
}

/// Exact-in-time solution of the semi-discrete scheme through the
/// eigen-decomposition of its symmetrized generator.
#[derive(Debug, Clone)]
pub struct ExponentialSolver {
    chain: FvChain,
    sqrt_pi: Vec<f64>,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl ExponentialSolver {
    pub fn new(chain: &FvChain) -> Self {
        let n = chain.len();
        let pi: Vec<f64> = (0..n).map(|i| chain.w[i] * chain.widths[i]).collect();
        let sqrt_pi: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
        // Π ρ̇ = −Kρ with ρ = u/w; S = Π^{-1/2} K Π^{-1/2}.
        let mut s = DMatrix::<f64>::zeros(n, n);
        for f in 0..n - 1 {
            let k = chain.conductance[f] * (chain.w[f] * chain.w[f + 1]).sqrt();
            let (a, b) = (f, f + 1);
            s[(a, a)] += k / pi[a];
            s[(b, b)] += k / pi[b];
            let off = -k / (sqrt_pi[a] * sqrt_pi[b]);
            s[(a, b)] += off;
            s[(b, a)] += off;
        }
        Self {
            chain: chain.clone(),
            sqrt_pi,
            eigen: SymmetricEigen::new(s),
        }
    }

    /// Spectral coefficients of `u0`.
    pub fn coefficients(&self, u0: &[f64]) -> DVector<f64> {
        let sigma = DVector::from_iterator(
            u0.len(),
            (0..u0.len()).map(|i| u0[i] / self.chain.w[i] * self.sqrt_pi[i]),
        );
        self.eigen.eigenvectors.transpose() * sigma
    }

    /// `(u(t), u̇(t))` from spectral coefficients.
    pub fn state(&self, coeffs: &DVector<f64>, t: f64) -> (Vec<f64>, Vec<f64>) {
        let lam = &self.eigen.eigenvalues;
        let decayed = DVector::from_iterator(lam.len(), (0..lam.len()).map(|k| coeffs[k] * (-lam[k].max(0.0) * t).exp()));
        let rate = DVector::from_iterator(lam.len(), (0..lam.len()).map(|k| -lam[k].max(0.0) * decayed[k]));
        let sigma = &self.eigen.eigenvectors * decayed;
        let sigma_dot = &self.eigen.eigenvectors * rate;
        let w = &self.chain.w;
        let u = (0..w.len()).map(|i| sigma[i] / self.sqrt_pi[i] * w[i]).collect();
        let du = (0..w.len()).map(|i| sigma_dot[i] / self.sqrt_pi[i] * w[i]).collect();
        (u, du)
    }

    /// `(ℛ, ℛ*)` at a state with rate `du`. Bulk faces carry the
    /// log-mean quadratic structure, the membrane face the cosh structure.
    pub fn dissipation_rates(&self, u: &[f64], du: &[f64]) -> (f64, f64) {
        let c = &self.chain;
        let n = c.len();
        let rho: Vec<f64> = (0..n).map(|i| u[i] / c.w[i]).collect();
        let mut j = 0.0;
        let (mut r, mut rs) = (0.0, 0.0);
        for f in 0..n - 1 {
            j -= du[f] * c.widths[f];
            let base = c.conductance[f] * (c.w[f] * c.w[f + 1]).sqrt();
            let dxi = rho[f].ln() - rho[f + 1].ln();
            if Some(f) == c.membrane_face {
                let k = base * (rho[f] * rho[f + 1]).sqrt();
                rs += k * cosh_dissipation(dxi);
                r += k * cosh_dissipation_primal(j / k);
            } else {
                let m = base * log_mean(rho[f], rho[f + 1]);
                rs += 0.5 * m * dxi * dxi;
                r += 0.5 * j * j / m;
            }
        }
        (r, rs)
    }

    /// Ledger on `[0, T]`, with time integrals on geometrically graded
    /// panels that resolve the initial layer.
    pub fn ledger(&self, u0: &[f64], t_end: f64) -> DiscreteLedger {
        let coeffs = self.coefficients(u0);
        let mut breaks = vec![0.0];
        let mut t = t_end * 1e-12;
        while t < t_end {
            breaks.push(t);
            t *= 1.5;
        }
        breaks.push(t_end);
        let rule = CompositeRule::new(&breaks, 1);
        let (mut int_r, mut int_rs) = (0.0, 0.0);
        for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let (u, du) = self.state(&coeffs, t);
            let (r, rs) = self.dissipation_rates(&u, &du);
            int_r += wt * r;
            int_rs += wt * rs;
        }
        let (u_end, _) = self.state(&coeffs, t_end);
        DiscreteLedger {
            energy_start: self.chain.entropy(u0),
            energy_end: self.chain.entropy(&u_end),
            int_r,
            int_rstar: int_rs,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MembraneConvergenceRow {
    pub epsilon: f64,
    pub l1_error: f64,
}

/// `sup_t ‖u_ε(t) − u_limit(t)‖_{L¹}` for each `ε`, solved in parallel.
pub fn membrane_convergence_study(
    prob: &MembraneProblem,
    epsilons: &[f64],
    u0: impl Fn(f64) -> f64 + Sync,
    opts: &SolveOptions,
) -> Result<Vec<MembraneConvergenceRow>> {
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("ε list must be decreasing".into()));
    }
    let limit = solve_chain(&prob.limit_chain()?, prob.limit_chain()?.project(&u0), opts)?;
    epsilons
        .par_iter()
        .map(|&eps| {
            let p = prob.with_epsilon(eps)?;
            let layer = solve_layer_pde(&p, &u0, opts)?;
            let err = layer
                .states
                .iter()
                .zip(&limit.states)
                .map(|(u, v)| layer.chain.l1_distance(u, &limit.chain, v))
                .fold(0.0, f64::max);
            Ok(MembraneConvergenceRow { epsilon: eps, l1_error: err })
        })
        .collect()
}
