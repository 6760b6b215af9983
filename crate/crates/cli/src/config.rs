//! Scenario configuration files.
//!
//! A config is a TOML document whose `kind` key selects the scenario. Every
//! key is required unless marked optional below, and unknown keys are
//! rejected.

use edpconv_core::cell::CellProblemSpec;
use edpconv_core::{grid, PeriodicCoefficient};
use serde::Deserialize;

use crate::error::RunError;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Flow(FlowConfig),
    CellGrid(CellGridConfig),
    Classify(CellGridConfig),
    Phi(PhiConfig),
    Conjecture(CellGridConfig),
    Nonconvexity(NonconvexityConfig),
    Distances(DistancesConfig),
    WigglyEnergy(WigglyEnergyConfig),
    Membrane(MembraneConfig),
    LegendreCheck(LegendreConfig),
}

/// Periodic mobility `μ(q, y)`, selected by `shape`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientConfig {
    Cosine { base: f64, amplitude: f64 },
    Constant { value: f64 },
    PowerKink { alpha: f64, gamma: f64 },
    StateScaledCosine { scale: f64, base: f64, amplitude: f64, q_min: f64, q_max: f64 },
}

impl CoefficientConfig {
    pub fn build(&self) -> Result<PeriodicCoefficient, RunError> {
        let c = match *self {
            Self::Cosine { base, amplitude } => PeriodicCoefficient::cosine(base, amplitude),
            Self::Constant { value } => PeriodicCoefficient::constant(value),
            Self::PowerKink { alpha, gamma } => PeriodicCoefficient::power_kink(alpha, gamma),
            Self::StateScaledCosine { scale, base, amplitude, q_min, q_max } => {
                PeriodicCoefficient::state_scaled_cosine(scale, base, amplitude, (q_min, q_max))
            }
        };
        c.map_err(|e| RunError::core("coefficient", e))
    }
}

/// The cell problem: a wiggly dissipation with mobility `coefficient`, or a
/// wiggly energy with amplitude `A` and friction `ϱ`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CellConfig {
    WigglyDissipation { coefficient: CoefficientConfig, q: f64 },
    WigglyEnergy { amplitude: f64, friction: f64 },
}

impl CellConfig {
    pub fn build(&self) -> Result<CellProblemSpec, RunError> {
        match self {
            Self::WigglyDissipation { coefficient, q } => {
                Ok(CellProblemSpec::wiggly_dissipation(coefficient.build()?, *q))
            }
            Self::WigglyEnergy { amplitude, friction } => {
                CellProblemSpec::wiggly_energy(*amplitude, *friction).map_err(|e| RunError::core("cell problem", e))
            }
        }
    }
}

/// A uniform grid on `[min, max]`, or, with `min_step` set, a symmetric grid
/// on `[-max, max]` with `2·points + 1` nodes refined towards zero.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: Option<f64>,
    pub max: f64,
    pub points: usize,
    pub min_step: Option<f64>,
}

impl GridConfig {
    pub fn build(&self, name: &str) -> Result<Vec<f64>, RunError> {
        if self.points < 2 || !self.max.is_finite() {
            return Err(RunError::config(format!("{name}: need points >= 2 and a finite max")));
        }
        match (self.min, self.min_step) {
            (Some(lo), None) if lo.is_finite() && lo < self.max => Ok(grid::uniform(lo, self.max, self.points)),
            (None, Some(h)) if h > 0.0 && h < self.max => Ok(grid::log_refined(self.max, self.points, h)),
            (Some(_), Some(_)) => Err(RunError::config(format!("{name}: give either min or min_step, not both"))),
            _ => Err(RunError::config(format!(
                "{name}: need min < max for a uniform grid or 0 < min_step < max for a refined one"
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub coefficient: CoefficientConfig,
    /// Stiffness `k` of the energy `k q²/2`.
    pub stiffness: f64,
    /// Slope of an optional linear tilt added to the energy.
    pub tilt: Option<f64>,
    pub q0: f64,
    pub t_end: f64,
    pub epsilons: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellGridConfig {
    pub cell: CellConfig,
    pub v_grid: GridConfig,
    pub xi_grid: GridConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiConfig {
    pub coefficient: CoefficientConfig,
    pub q: f64,
    pub s_grid: GridConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonconvexityConfig {
    pub coefficient: CoefficientConfig,
    pub q: f64,
    pub v0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistancesConfig {
    pub coefficient: CoefficientConfig,
    pub q0: f64,
    pub q1: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WigglyEnergyConfig {
    pub amplitude: f64,
    pub friction: f64,
    pub v_grid: GridConfig,
    pub xi_grid: GridConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembraneConfig {
    pub a_minus: f64,
    pub a_plus: f64,
    pub a_star: f64,
    /// Slope of the linear potential `V`.
    pub drift: f64,
    pub epsilons: Vec<f64>,
    pub bulk_cells: usize,
    pub layer_cells: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Initial density on `[-1, 0)` and on `[0, 1]`.
    pub initial_left: f64,
    pub initial_right: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestFunction {
    Quadratic { k: f64 },
    Abs,
    Cosine,
    CoshDissipation,
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Quadratic { k } => 0.5 * k * x * x,
            Self::Abs => x.abs(),
            Self::Cosine => x.cos(),
            Self::CoshDissipation => edpconv_core::membrane::cosh_dissipation(x),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegendreConfig {
    pub function: TestFunction,
    pub grid: GridConfig,
    pub dual_grid: GridConfig,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        if text.trim().is_empty() {
            return Err(RunError::config("config file is empty; expected a `kind` key"));
        }
        toml::from_str(text).map_err(|e| RunError::config(format!("parse error: {e}")))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Flow(_) => "flow",
            Self::CellGrid(_) => "cell-grid",
            Self::Classify(_) => "classify",
            Self::Phi(_) => "phi",
            Self::Conjecture(_) => "conjecture",
            Self::Nonconvexity(_) => "nonconvexity",
            Self::Distances(_) => "distances",
            Self::WigglyEnergy(_) => "wiggly-energy",
            Self::Membrane(_) => "membrane",
            Self::LegendreCheck(_) => "legendre-check",
        }
    }
}

/// Every scenario kind with a one-line description of the result it
/// reproduces.
pub const CATALOG: [(&str, &str); 10] = [
    ("flow", "wiggly-dissipation gradient flow and its homogenised limit"),
    ("cell-grid", "effective bipotential from the density cell problem"),
    ("classify", "contact-set classification of the effective bipotential"),
    ("phi", "scalar profile of the wiggly-dissipation bipotential"),
    ("conjecture", "comparison with the sum of contact potential and its dual"),
    ("nonconvexity", "joint non-convexity certificate for a kinked mobility"),
    ("distances", "effective and pointwise Riemannian distances"),
    ("wiggly-energy", "wiggly-energy effective dissipation and kinetic relation"),
    ("membrane", "thin membrane limit with cosh transmission"),
    ("legendre-check", "discrete Legendre transform and biconjugate check"),
];

pub fn anchor(kind: &str) -> &'static str {
    CATALOG.iter().find(|(k, _)| *k == kind).map(|(_, a)| *a).unwrap_or("")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_flow_config() {
        let s = Scenario::parse(
            r#"
kind = "flow"
stiffness = 1.0
q0 = 1.0
t_end = 2.0
epsilons = [0.2, 0.1]
tolerance = 1e-8
coefficient = { shape = "cosine", base = 1.0, amplitude = 0.8 }
"#,
        )
        .unwrap();
        assert_eq!(s.kind(), "flow");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let top = "kind = \"distances\"\nq0 = 0.0\nq1 = 1.0\nextra = 1\n\
                   coefficient = { shape = \"constant\", value = 1.0 }\n";
        assert!(Scenario::parse(top).is_err());
        let nested = "kind = \"distances\"\nq0 = 0.0\nq1 = 1.0\n\
                      coefficient = { shape = \"constant\", value = 1.0, extra = 2 }\n";
        assert!(Scenario::parse(nested).is_err());
    }

    #[test]
    fn empty_and_unknown_kinds_fail() {
        assert!(matches!(Scenario::parse("  \n"), Err(RunError::Config(_))));
        assert!(Scenario::parse("kind = \"nope\"").is_err());
    }

    #[test]
    fn grid_needs_exactly_one_lower_spec() {
        let g = GridConfig { min: Some(-1.0), max: 1.0, points: 5, min_step: None };
        assert_eq!(g.build("g").unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let g = GridConfig { min: None, max: 1.0, points: 4, min_step: Some(1e-3) };
        assert_eq!(g.build("g").unwrap().len(), 9);
        let g = GridConfig { min: Some(-1.0), max: 1.0, points: 5, min_step: Some(0.1) };
        assert!(g.build("g").is_err());
        let g = GridConfig { min: Some(1.0), max: 1.0, points: 5, min_step: None };
        assert!(g.build("g").is_err());
    }

    #[test]
    fn catalog_covers_every_kind() {
        assert_eq!(CATALOG.len(), 10);
        assert!(anchor("membrane").contains("transmission"));
    }
}
