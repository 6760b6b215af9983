use thiserror::Error;

/// Failures reported by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no grid pair satisfies the contact tolerance (grid too coarse or tolerance too tight)")]
    EmptyContactSet,

    #[error("force {0} is not a node of the sampled force grid")]
    OffGrid(f64),

    #[error("contact pairs are not a monotone relation through the origin: {0}")]
    NonMonotoneContact(String),

    #[error("fewer than two finite samples on the grid")]
    DegenerateGrid,

    #[error("point {x} lies outside the grid hull [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("step size fell below the minimum {min_dt} at t = {t}")]
    StiffnessFailure { t: f64, min_dt: f64 },

    #[error("dissipation potential has no invertible kinetic relation: {0}")]
    NonInvertibleKineticRelation(String),

    #[error("multiplier equation has no sign change on the bracket: {0}")]
    RootBracketFailure(String),

    #[error("iteration cap {0} reached without convergence")]
    NonConvergence(usize),

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),

    #[error("density lost positivity after repeated step halving at t = {0}")]
    PositivityLoss(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
