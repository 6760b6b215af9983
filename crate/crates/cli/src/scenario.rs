//! Running a parsed scenario into in-memory output files.

use std::fmt::Write as _;

use edpconv_core::cell;
use edpconv_core::flow::{self, FlowFamily, StepControls};
use edpconv_core::legendre::{self, Domain};
use edpconv_core::membrane::{self, ExponentialSolver, MembraneProblem, SolveOptions};
use edpconv_core::{classify_bipotential, SampledBipotential, SampledConvexFunction, ScalarFunction};
use rayon::prelude::*;

use crate::config::*;
use crate::error::RunError;

/// Files produced by one run, in emission order, plus a human summary that
/// is also written as `report.txt`.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub report: String,
}

impl Outputs {
    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.report.push_str(text.as_ref());
        self.report.push('\n');
    }
}

/// Shortest round-trip decimal, independent of locale.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(num).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s.into_bytes()
}

fn bipotential_csv(m: &SampledBipotential, column: &str) -> Vec<u8> {
    let rows = m
        .v_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| m.xi_grid.iter().enumerate().map(move |(j, &xi)| vec![v, xi, m.at(i, j)]));
    csv(&format!("v,xi,{column}"), rows)
}

fn positive(name: &str, x: f64) -> Result<(), RunError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(RunError::config(format!("{name} must be positive and finite, got {x}")))
    }
}

fn decreasing(name: &str, xs: &[f64]) -> Result<(), RunError> {
    if xs.is_empty() || xs.iter().any(|&e| !(e > 0.0)) || xs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(RunError::config(format!("{name} must be a non-empty, positive, strictly decreasing list")));
    }
    Ok(())
}

pub fn run(scenario: &Scenario, tolerance_scale: f64) -> Result<Outputs, RunError> {
    positive("tolerance scale", tolerance_scale)?;
    let mut out = Outputs::default();
    match scenario {
        Scenario::Flow(c) => run_flow(c, tolerance_scale, &mut out)?,
        Scenario::CellGrid(c) => {
            let m = cell_grid(c)?;
            out.add("m0.csv", bipotential_csv(&m, "m0"));
            out.line(format!("grid {} x {}, max |M0| = {}", m.v_grid.len(), m.xi_grid.len(), num(m.max_abs())));
        }
        Scenario::Classify(c) => {
            let m = cell_grid(c)?;
            out.add("m0.csv", bipotential_csv(&m, "m0"));
            classify(&m, &mut out)?;
        }
        Scenario::Phi(c) => run_phi(c, &mut out)?,
        Scenario::Conjecture(c) => {
            let spec = c.cell.build()?;
            let (v, xi) = (c.v_grid.build("v_grid")?, c.xi_grid.build("xi_grid")?);
            let r = cell::conjecture_check(&spec, &v, &xi).map_err(|e| RunError::core("conjecture_check", e))?;
            out.add("difference.csv", bipotential_csv(&r.differences, "m0_minus_sum"));
            out.line(format!("max difference {} at (v, xi) = ({}, {})", num(r.max_difference), num(r.argmax.0), num(r.argmax.1)));
            out.line(format!("scale {}", num(r.scale)));
        }
        Scenario::Nonconvexity(c) => {
            let spec = cell::CellProblemSpec::wiggly_dissipation(c.coefficient.build()?, c.q);
            let p = cell::joint_convexity_probe(&spec, c.v0).map_err(|e| RunError::core("joint_convexity_probe", e))?;
            out.line(format!(
                "moments: mean {}, half {}, max {}",
                num(p.moments.mean),
                num(p.moments.half),
                num(p.moments.max)
            ));
            out.line(format!("M0 on rate axis {}, on force axis {}, at midpoint {}", num(p.rate_axis), num(p.force_axis), num(p.midpoint)));
            out.line(format!("midpoint violation {}", num(p.violation)));
            out.line(format!("scalar gap {}", num(p.scalar_gap)));
            out.line(format!("jointly convex: {}", if p.violation > 0.0 { "NO" } else { "not refuted" }));
        }
        Scenario::Distances(c) => {
            let mu = c.coefficient.build()?;
            let (d_eff, d0) =
                cell::riemannian_distances(&mu, c.q0, c.q1).map_err(|e| RunError::core("riemannian_distances", e))?;
            out.add("distances.csv", csv("q0,q1,d_eff,d0", [vec![c.q0, c.q1, d_eff, d0]]));
            out.line(format!("D_eff = {}, D0 = {}", num(d_eff), num(d0)));
        }
        Scenario::WigglyEnergy(c) => run_wiggly_energy(c, &mut out)?,
        Scenario::Membrane(c) => run_membrane(c, tolerance_scale, &mut out)?,
        Scenario::LegendreCheck(c) => run_legendre(c, &mut out)?,
    }
    Ok(out)
}

fn cell_grid(c: &CellGridConfig) -> Result<SampledBipotential, RunError> {
    let spec = c.cell.build()?;
    let (v, xi) = (c.v_grid.build("v_grid")?, c.xi_grid.build("xi_grid")?);
    cell::cell_grid(&spec, &v, &xi).map_err(|e| RunError::core("cell_grid", e))
}

fn classify(m: &SampledBipotential, out: &mut Outputs) -> Result<(), RunError> {
    let c = classify_bipotential(m).map_err(|e| RunError::core("classify_bipotential", e))?;
    out.line(format!("{}; DualSum: {}", c.class, if c.dual_sum { "YES" } else { "NO" }));
    out.line(format!(
        "max mixed difference {} (tolerance {}), contact coverage {}",
        num(c.max_mixed_difference),
        num(c.separability_tolerance),
        num(c.coverage)
    ));
    if !c.potential.is_empty() {
        out.add("contact_potential.csv", csv("v,r_eff", c.potential.iter().map(|&(v, r)| vec![v, r])));
    }
    Ok(())
}

fn run_flow(c: &FlowConfig, scale: f64, out: &mut Outputs) -> Result<(), RunError> {
    decreasing("epsilons", &c.epsilons)?;
    positive("t_end", c.t_end)?;
    positive("tolerance", c.tolerance)?;
    let family = FlowFamily {
        coefficient: c.coefficient.build()?,
        energy: ScalarFunction::quadratic(c.stiffness),
        tilt: c.tilt.map(ScalarFunction::linear),
        q0: c.q0,
    };
    let ctrl = StepControls::with_tolerance(c.tolerance * scale);
    let table = flow::convergence_study(&family, &c.epsilons, c.t_end, &ctrl)
        .map_err(|e| RunError::core("convergence_study", e))?;
    let runs = c
        .epsilons
        .par_iter()
        .map(|&eps| flow::integrate(&family.system(eps), c.q0, c.t_end, &ctrl))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| RunError::core("integrate", e))?;
    for (eps, traj) in c.epsilons.iter().zip(&runs) {
        let mut bytes = Vec::new();
        traj.write_csv(&mut bytes)?;
        out.add(format!("trajectory_eps_{}.csv", num(*eps)), bytes);
    }
    let mut bytes = Vec::new();
    table.limit.write_csv(&mut bytes)?;
    out.add("limit.csv", bytes);
    out.add(
        "convergence.csv",
        csv(
            "epsilon,sup_error,edp_residual,steps",
            table.rows.iter().map(|r| vec![r.epsilon, r.sup_error, r.edp_residual, r.steps as f64]),
        ),
    );
    for r in &table.rows {
        out.line(format!("eps {}: sup error {}, EDP residual {}", num(r.epsilon), num(r.sup_error), num(r.edp_residual)));
    }
    out.line(format!("errors decreasing: {}", if table.is_decreasing() { "YES" } else { "NO" }));
    Ok(())
}

fn run_phi(c: &PhiConfig, out: &mut Outputs) -> Result<(), RunError> {
    let spec = cell::CellProblemSpec::wiggly_dissipation(c.coefficient.build()?, c.q);
    let s = c.s_grid.build("s_grid")?;
    if s.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(RunError::config("s_grid must lie in [0, 1]"));
    }
    let t = cell::phi_extract(&spec, &s).map_err(|e| RunError::core("phi_extract", e))?;
    out.add("phi.csv", csv("s,phi,lower_bound", t.rows.iter().map(|r| vec![r.s, r.phi, r.lower_bound])));
    for (s, phi) in t.expected_anchors() {
        match t.rows.iter().find(|r| r.s == s) {
            Some(r) => out.line(format!("Phi({}) = {}, expected {}", num(s), num(r.phi), num(phi))),
            None => out.line(format!("Phi({}) expected {} (not on s_grid)", num(s), num(phi))),
        }
    }
    out.line(format!("min margin above lower bound {}", num(t.min_margin())));
    Ok(())
}

fn run_wiggly_energy(c: &WigglyEnergyConfig, out: &mut Outputs) -> Result<(), RunError> {
    positive("amplitude", c.amplitude)?;
    positive("friction", c.friction)?;
    let (v, xi) = (c.v_grid.build("v_grid")?, c.xi_grid.build("xi_grid")?);
    let (a, rho) = (c.amplitude, c.friction);
    out.add(
        "r_eff.csv",
        csv(
            "v,r_eff,slope",
            v.iter().map(|&v| vec![v, cell::r_eff_wiggly_energy(a, rho, v), cell::r_eff_wiggly_energy_slope(a, rho, v)]),
        ),
    );
    out.add(
        "kinetic_relation.csv",
        csv("xi,v", xi.iter().map(|&x| vec![x, cell::contact_relation_wiggly_energy(a, rho, x)])),
    );
    let spec = cell::CellProblemSpec::wiggly_energy(a, rho).map_err(|e| RunError::core("cell problem", e))?;
    let m = cell::cell_grid(&spec, &v, &xi).map_err(|e| RunError::core("cell_grid", e))?;
    out.add("m0.csv", bipotential_csv(&m, "m0"));
    out.line(format!("depinning threshold |xi| = {}", num(a)));
    classify(&m, out)
}

fn run_membrane(c: &MembraneConfig, scale: f64, out: &mut Outputs) -> Result<(), RunError> {
    decreasing("epsilons", &c.epsilons)?;
    for (name, x) in [("a_minus", c.a_minus), ("a_plus", c.a_plus), ("a_star", c.a_star), ("dt", c.dt), ("t_end", c.t_end)] {
        positive(name, x)?;
    }
    positive("initial_left", c.initial_left)?;
    positive("initial_right", c.initial_right)?;
    let prob = MembraneProblem::new(
        ScalarFunction::constant(c.a_minus),
        ScalarFunction::constant(c.a_plus),
        ScalarFunction::constant(c.a_star),
        ScalarFunction::linear(c.drift),
        c.epsilons[0],
        c.bulk_cells,
        c.layer_cells,
    )
    .map_err(|e| RunError::core("membrane problem", e))?;
    let (left, right) = (c.initial_left, c.initial_right);
    let u0 = move |x: f64| if x < 0.0 { left } else { right };
    let opts = SolveOptions { dt: c.dt, t_end: c.t_end };

    let rows = membrane::membrane_convergence_study(&prob, &c.epsilons, u0, &opts)
        .map_err(|e| RunError::core("membrane_convergence_study", e))?;
    out.add("convergence.csv", csv("epsilon,l1_error", rows.iter().map(|r| vec![r.epsilon, r.l1_error])));

    let chain = prob.limit_chain().map_err(|e| RunError::core("limit_chain", e))?;
    let series = membrane::solve_chain(&chain, chain.project(u0), &opts).map_err(|e| RunError::core("solve_chain", e))?;
    out.add(
        "limit_profile.csv",
        csv(
            "x,u0,u_final,equilibrium",
            (0..chain.len()).map(|i| vec![chain.centers[i], series.states[0][i], series.final_state()[i], chain.w[i]]),
        ),
    );
    let ledger = ExponentialSolver::new(&chain).ledger(&series.states[0], c.t_end);
    out.line(format!("a_eff = {}", num(prob.a_eff())));
    for r in &rows {
        out.line(format!("eps {}: sup_t L1 error {}", num(r.epsilon), num(r.l1_error)));
    }
    out.line(format!(
        "limit model: mass drift {}, max entropy increase {}, step halvings {}",
        num(series.max_mass_drift()),
        num(series.max_entropy_increase()),
        series.halvings
    ));
    out.line(format!("limit model EDP residual {} (tolerance scale {})", num(ledger.residual()), num(scale)));
    Ok(())
}

fn run_legendre(c: &LegendreConfig, out: &mut Outputs) -> Result<(), RunError> {
    let g = c.grid.build("grid")?;
    let dual = c.dual_grid.build("dual_grid")?;
    let f = SampledConvexFunction::from_fn(g, |x| c.function.eval(x), Domain::PrimalRates)
        .map_err(|e| RunError::core("sample function", e))?;
    let fs = legendre::conjugate(&f, &dual).map_err(|e| RunError::core("conjugate", e))?;
    let dev = legendre::biconjugate_check(&f).map_err(|e| RunError::core("biconjugate_check", e))?;
    out.add("conjugate.csv", csv("xi,conjugate", fs.grid.iter().zip(&fs.values).map(|(&x, &y)| vec![x, y])));
    let mut line = String::new();
    let _ = write!(line, "convexity defect {}, biconjugate deviation {}", num(f.convexity_defect()), num(dev));
    out.line(line);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0, -2.5e-12, 1e300, 1.0 / 3.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.1), "0.1");
    }

    #[test]
    fn distances_for_constant_mobility() {
        let s = Scenario::parse(
            "kind = \"distances\"\nq0 = 0.0\nq1 = 2.0\ncoefficient = { shape = \"constant\", value = 4.0 }\n",
        )
        .unwrap();
        let out = run(&s, 1.0).unwrap();
        assert_eq!(out.files[0].0, "distances.csv");
        let text = String::from_utf8(out.files[0].1.clone()).unwrap();
        let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert!((row[2] - 4.0).abs() < 1e-10 && (row[3] - 4.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_epsilon_lists() {
        assert!(decreasing("e", &[0.1, 0.2]).is_err());
        assert!(decreasing("e", &[]).is_err());
        assert!(decreasing("e", &[0.2, 0.1]).is_ok());
    }
}
