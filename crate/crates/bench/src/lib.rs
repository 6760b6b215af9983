//! Fixtures shared by the criterion benches.

use edpconv_core::cell::CellProblemSpec;
use edpconv_core::legendre::Domain;
use edpconv_core::membrane::{FvChain, MembraneProblem};
use edpconv_core::{grid, PeriodicCoefficient, SampledConvexFunction};

/// Wiggly-dissipation cell with `μ = 1 + 0.8 cos 2πy`.
pub fn cosine_cell() -> CellProblemSpec {
    CellProblemSpec::wiggly_dissipation(PeriodicCoefficient::cosine(1.0, 0.8).expect("valid coefficient"), 0.0)
}

/// `v²/2` sampled at `n` nodes on `[-2, 2]`.
pub fn sampled_quadratic(n: usize) -> SampledConvexFunction {
    SampledConvexFunction::from_fn(grid::uniform(-2.0, 2.0, n), |v| 0.5 * v * v, Domain::PrimalRates)
        .expect("finite samples")
}

/// Layer chain with uniform mobilities and a step initial density.
pub fn membrane_chain(epsilon: f64, bulk_cells: usize) -> (FvChain, Vec<f64>) {
    let chain = MembraneProblem::uniform(epsilon, bulk_cells)
        .and_then(|p| p.layer_chain())
        .expect("valid membrane problem");
    let u0 = chain.project(|x| if x < 0.0 { 0.75 } else { 0.25 });
    (chain, u0)
}
