use edpconv_core::cell::{self, CellProblemSpec};
use edpconv_core::flow::{self, StepControls};
use edpconv_core::legendre::{self, Domain};
use edpconv_core::membrane::{self, MembraneProblem};
use edpconv_core::{
    fenchel_young_gap, grid, DissipationPotential, GradientSystem1D, PeriodicCoefficient, SampledConvexFunction,
    ScalarFunction,
};
use proptest::prelude::*;

fn cosine_cell(amplitude: f64) -> CellProblemSpec {
    CellProblemSpec::wiggly_dissipation(PeriodicCoefficient::cosine(1.0, amplitude).unwrap(), 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conjugation_reverses_order(k in 0.2f64..3.0, shift in 0.0f64..2.0) {
        let g = grid::uniform(-2.0, 2.0, 201);
        let f = SampledConvexFunction::from_fn(g.clone(), |v| 0.5 * k * v * v, Domain::PrimalRates).unwrap();
        let h = SampledConvexFunction::from_fn(g, |v| 0.5 * k * v * v + shift, Domain::PrimalRates).unwrap();
        let duals = grid::uniform(-1.0, 1.0, 41);
        let fs = legendre::conjugate(&f, &duals).unwrap();
        let hs = legendre::conjugate(&h, &duals).unwrap();
        for (a, b) in fs.values.iter().zip(&hs.values) {
            prop_assert!(b <= a);
            prop_assert!((a - b - shift).abs() < 1e-12);
        }
    }

    #[test]
    fn fenchel_young_is_tight_on_the_contact_line(mu in 0.1f64..5.0, v in -3.0f64..3.0, xi in -3.0f64..3.0) {
        let r = DissipationPotential::constant_quadratic(mu);
        prop_assert!(fenchel_young_gap(&r, 0.0, v, xi) >= -1e-12);
        prop_assert!(fenchel_young_gap(&r, 0.0, v, mu * v).abs() < 1e-12 * (1.0 + mu * v * v));
    }

    #[test]
    fn m0_is_two_homogeneous(amp in 0.0f64..0.9, v in -1.5f64..1.5, xi in -1.5f64..1.5, lambda in 0.2f64..3.0) {
        prop_assume!(v.abs() > 1e-3);
        let spec = cosine_cell(amp);
        let base = cell::m0(&spec, v, xi).unwrap().value;
        let scaled = cell::m0(&spec, lambda * v, lambda * xi).unwrap().value;
        prop_assert!((scaled - lambda * lambda * base).abs() <= 1e-8 * (1.0 + scaled.abs()));
    }

    #[test]
    fn m0_lies_below_the_separable_sum(amp in 0.0f64..0.9, v in -1.5f64..1.5, xi in -1.5f64..1.5) {
        let spec = cosine_cell(amp);
        let m = cell::m0(&spec, v, xi).unwrap().value;
        // mean mobility is 1, so the homogenised sum is v²/2 + ξ²/2
        prop_assert!(m <= 0.5 * v * v + 0.5 * xi * xi + 1e-10);
        prop_assert!(m >= v * xi - 1e-10);
    }

    #[test]
    fn membrane_step_conserves_mass_and_positivity(
        left in 0.05f64..2.0,
        right in 0.05f64..2.0,
        dt in 1e-4f64..0.1,
    ) {
        let prob = MembraneProblem::uniform(0.1, 24).unwrap();
        let chain = prob.layer_chain().unwrap();
        let u = chain.project(|x| if x < 0.0 { left } else { right });
        let next = chain.implicit_euler_step(&u, dt).unwrap();
        prop_assert!(next.iter().all(|&x| x > 0.0));
        let m0 = chain.mass(&u);
        prop_assert!((chain.mass(&next) - m0).abs() <= 1e-12 * m0.max(1.0));
        prop_assert!(chain.entropy(&next) <= chain.entropy(&u) + 1e-12);
    }

    #[test]
    fn wiggly_flow_dissipates_energy(amp in 0.0f64..0.9, eps in 0.05f64..0.5, q0 in -2.0f64..2.0) {
        let coef = PeriodicCoefficient::cosine(1.0, amp).unwrap();
        let sys = GradientSystem1D::new(ScalarFunction::quadratic(1.0), DissipationPotential::wiggly(&coef, eps));
        let traj = flow::integrate(&sys, q0, 1.0, &StepControls::default()).unwrap();
        for w in traj.ledger.windows(2) {
            prop_assert!(w[1].energy <= w[0].energy + 1e-12);
        }
    }
}

#[test]
fn transmission_identity_holds_on_a_sweep() {
    for a in grid::uniform(0.1, 5.0, 25) {
        for b in grid::uniform(0.1, 5.0, 25) {
            assert!(membrane::transmission_identity_check(a, b) < 1e-12 * (1.0 + a.max(b)));
        }
    }
}
