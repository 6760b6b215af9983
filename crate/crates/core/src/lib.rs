//! Numerical toolkit for gradient systems and their EDP limits.
//!
//! * [`system`], [`dissipation`], [`bipotential`]: gradient systems, tilts,
//!   Fenchel-Young gaps, contact sets and classification of bipotentials.
//! * [`legendre`]: discrete convex conjugates and subdifferentials.
//! * [`flow`]: adaptive integration of scalar gradient flows with an
//!   energy-dissipation ledger.
//! * [`cell`]: cell problems of the wiggly-dissipation and wiggly-energy
//!   models, with a brute-force oracle.
//! * [`membrane`]: diffusion through a thin low-mobility layer and its
//!   limit with transmission conditions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bipotential;
pub mod cell;
pub mod dissipation;
pub mod error;
pub mod flow;
pub mod function;
pub mod grid;
pub mod legendre;
pub mod membrane;
pub mod quadrature;
pub mod system;

pub use bipotential::{
    classify_bipotential, extract_contact_set, force_dependent_potential, BipotentialClass,
    Classification, ContactSet, SampledBipotential,
};
pub use dissipation::{fenchel_young_gap, DissipationKind, DissipationPotential};
pub use error::{Error, Result};
pub use function::{PeriodicCoefficient, ScalarFunction};
pub use legendre::SampledConvexFunction;
pub use system::GradientSystem1D;
