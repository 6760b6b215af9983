//! Sampled bipotentials `M(v, ξ)` at a frozen state, their contact sets and
//! the classification into dual sums, contact-equivalent potentials and
//! force-dependent families.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative contact tolerance: a pair is in contact when
/// `M(v, ξ) − vξ ≤ GAP_REL_TOL·(1 + |vξ|)`.
pub const GAP_REL_TOL: f64 = 1e-7;
/// Separability tolerance relative to `max |M|`.
pub const SEPARABILITY_REL_TOL: f64 = 1e-8;

/// Values of a candidate bipotential on a rectangular `(v, ξ)` grid.
#[derive(Debug, Clone)]
pub struct SampledBipotential {
    pub q: f64,
    pub v_grid: Vec<f64>,
    pub xi_grid: Vec<f64>,
    /// Row-major: `values[i * xi_grid.len() + j] = M(v_i, ξ_j)`.
    pub values: Vec<f64>,
    pub gap_rel_tol: f64,
}

impl SampledBipotential {
    pub fn new(q: f64, v_grid: Vec<f64>, xi_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != v_grid.len() * xi_grid.len() {
            return Err(Error::InvalidInput("value count does not match the grid".into()));
        }
        for g in [&v_grid, &xi_grid] {
            if g.len() < 2 || g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInput("grids must be strictly increasing with >= 2 nodes".into()));
            }
        }
        Ok(Self {
            q,
            v_grid,
            xi_grid,
            values,
            gap_rel_tol: GAP_REL_TOL,
        })
    }

    /// Evaluates `m(v, ξ)` on the grid in parallel.
    pub fn from_fn(
        q: f64,
        v_grid: Vec<f64>,
        xi_grid: Vec<f64>,
        m: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Result<Self> {
        let values = v_grid
            .par_iter()
            .flat_map_iter(|&v| xi_grid.iter().map(move |&xi| (v, xi)).collect::<Vec<_>>())
            .map(|(v, xi)| m(v, xi))
            .collect();
        Self::new(q, v_grid, xi_grid, values)
    }

    /// Fallible variant of [`from_fn`](Self::from_fn); the first error wins.
    pub fn try_from_fn(
        q: f64,
        v_grid: Vec<f64>,
        xi_grid: Vec<f64>,
        m: impl Fn(f64, f64) -> Result<f64> + Sync,
    ) -> Result<Self> {
        let values = v_grid
            .par_iter()
            .flat_map_iter(|&v| xi_grid.iter().map(move |&xi| (v, xi)).collect::<Vec<_>>())
            .map(|(v, xi)| m(v, xi))
            .collect::<Result<Vec<f64>>>()?;
        Self::new(q, v_grid, xi_grid, values)
    }

    /// Re-centres a force-shifted bipotential `N(v, η)`:
    /// `M(v, ξ) = N(v, ξ + ℰ′(q))`, with `energy_slope = ℰ′(q)` of the
    /// energy used to build `N`.
    pub fn recentered(
        q: f64,
        v_grid: Vec<f64>,
        xi_grid: Vec<f64>,
        energy_slope: f64,
        n: impl Fn(f64, f64) -> Result<f64> + Sync,
    ) -> Result<Self> {
        Self::try_from_fn(q, v_grid, xi_grid, |v, xi| n(v, xi + energy_slope))
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.xi_grid.len() + j]
    }

    pub fn gap(&self, i: usize, j: usize) -> f64 {
        self.at(i, j) - self.v_grid[i] * self.xi_grid[j]
    }

    pub fn gap_tolerance(&self, v: f64, xi: f64) -> f64 {
        self.gap_rel_tol * (1.0 + (v * xi).abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn nearest(grid: &[f64], x: f64) -> usize {
        grid.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Checks the Fenchel-Young lower bound, `M(v, ξ) ≥ M(0, ξ)` and
    /// discrete convexity in `v`, each within the gap tolerance.
    pub fn validate(&self) -> Result<()> {
        let i0 = Self::nearest(&self.v_grid, 0.0);
        for (i, &v) in self.v_grid.iter().enumerate() {
            for (j, &xi) in self.xi_grid.iter().enumerate() {
                let tol = self.gap_tolerance(v, xi);
                if self.gap(i, j) < -tol {
                    return Err(Error::InvariantViolation(format!(
                        "M({v}, {xi}) = {} below vξ",
                        self.at(i, j)
                    )));
                }
                if self.v_grid[i0] == 0.0 && self.at(i, j) < self.at(i0, j) - tol {
                    return Err(Error::InvariantViolation(format!("M({v}, {xi}) < M(0, {xi})")));
                }
            }
        }
        for j in 0..self.xi_grid.len() {
            let col: Vec<f64> = (0..self.v_grid.len()).map(|i| self.at(i, j)).collect();
            let scale = col.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            for i in 1..col.len() - 1 {
                let (h0, h1) = (
                    self.v_grid[i] - self.v_grid[i - 1],
                    self.v_grid[i + 1] - self.v_grid[i],
                );
                let d = (col[i + 1] - col[i]) / h1 - (col[i] - col[i - 1]) / h0;
                if d < -1e-9 * scale / h0.min(h1) {
                    return Err(Error::InvariantViolation(format!(
                        "M(·, {}) not convex at v = {}",
                        self.xi_grid[j], self.v_grid[i]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One column of the contact set: the contiguous force interval in contact
/// at a given rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactColumn {
    pub v: f64,
    pub xi_lo: f64,
    pub xi_hi: f64,
}

impl ContactColumn {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.xi_lo + self.xi_hi)
    }
}

/// Grid pairs where the Fenchel-Young inequality is an equality.
#[derive(Debug, Clone)]
pub struct ContactSet {
    pub pairs: Vec<(f64, f64)>,
    pub residuals: Vec<f64>,
    pub columns: Vec<ContactColumn>,
    /// Fraction of rate columns carrying a contact point.
    pub coverage: f64,
}

impl ContactSet {
    /// `min vξ` over the stored pairs.
    pub fn min_power(&self) -> f64 {
        self.pairs.iter().map(|(v, xi)| v * xi).fold(f64::INFINITY, f64::min)
    }
}

/// All grid pairs with gap within tolerance, keeping per rate column only
/// the contiguous run that contains the smallest gap.
pub fn extract_contact_set(m: &SampledBipotential) -> Result<ContactSet> {
    let nxi = m.xi_grid.len();
    let mut pairs = Vec::new();
    let mut residuals = Vec::new();
    let mut columns = Vec::new();
    for (i, &v) in m.v_grid.iter().enumerate() {
        let hits: Vec<bool> = (0..nxi)
            .map(|j| m.gap(i, j) <= m.gap_tolerance(v, m.xi_grid[j]))
            .collect();
        let Some(best) = (0..nxi)
            .filter(|&j| hits[j])
            .min_by(|&a, &b| m.gap(i, a).total_cmp(&m.gap(i, b)))
        else {
            continue;
        };
        let mut lo = best;
        while lo > 0 && hits[lo - 1] {
            lo -= 1;
        }
        let mut hi = best;
        while hi + 1 < nxi && hits[hi + 1] {
            hi += 1;
        }
        for j in lo..=hi {
            pairs.push((v, m.xi_grid[j]));
            residuals.push(m.gap(i, j));
        }
        columns.push(ContactColumn {
            v,
            xi_lo: m.xi_grid[lo],
            xi_hi: m.xi_grid[hi],
        });
    }
    if pairs.is_empty() {
        return Err(Error::EmptyContactSet);
    }
    Ok(ContactSet {
        pairs,
        residuals,
        coverage: columns.len() as f64 / m.v_grid.len() as f64,
        columns,
    })
}

/// `v ↦ M(v, ξ) − M(0, ξ)` for a force `ξ` on the grid. The grid must
/// contain `v = 0`.
pub fn force_dependent_potential(m: &SampledBipotential, xi: f64) -> Result<Vec<(f64, f64)>> {
    let j = m.xi_grid.iter().position(|&x| x == xi).ok_or(Error::OffGrid(xi))?;
    let i0 = m
        .v_grid
        .iter()
        .position(|&v| v == 0.0)
        .ok_or_else(|| Error::InvalidInput("rate grid lacks v = 0".into()))?;
    let base = m.at(i0, j);
    Ok(m.v_grid
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, m.at(i, j) - base))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BipotentialClass {
    DualSum,
    ContactEquivalent,
    ForceDependentOnly,
}

impl std::fmt::Display for BipotentialClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BipotentialClass::DualSum => "DualSum",
            BipotentialClass::ContactEquivalent => "ContactEquivalent",
            BipotentialClass::ForceDependentOnly => "ForceDependentOnly",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub class: BipotentialClass,
    /// `(v, R(v))` samples of the recovered potential; empty for
    /// [`BipotentialClass::ForceDependentOnly`].
    pub potential: Vec<(f64, f64)>,
    pub dual_sum: bool,
    pub contact_equivalent: bool,
    /// `max |M(v,ξ) − M(v,ξ₀) − M(v₀,ξ) + M(v₀,ξ₀)|` with `(v₀, ξ₀)` the
    /// grid nodes nearest the origin.
    pub max_mixed_difference: f64,
    pub separability_tolerance: f64,
    pub coverage: f64,
}

/// Maximum absolute mixed second difference about the nodes nearest 0.
pub fn max_mixed_difference(m: &SampledBipotential) -> f64 {
    let i0 = SampledBipotential::nearest(&m.v_grid, 0.0);
    let j0 = SampledBipotential::nearest(&m.xi_grid, 0.0);
    let mut worst = 0.0_f64;
    for i in 0..m.v_grid.len() {
        for j in 0..m.xi_grid.len() {
            let d = m.at(i, j) - m.at(i, j0) - m.at(i0, j) + m.at(i0, j0);
            worst = worst.max(d.abs());
        }
    }
    worst
}

/// The contact relation as a single-valued monotone map `v ↦ ξ(v)`, with
/// vertical segments replaced by their midpoints.
///
/// Fails with [`Error::NonMonotoneContact`] when the midpoints decrease in
/// `v`, when a pair is not dissipative, or when the column at `v = 0` (if
/// sampled) does not reach `ξ = 0`.
pub fn contact_relation(set: &ContactSet, xi_step: f64) -> Result<Vec<(f64, f64)>> {
    let mut rel: Vec<(f64, f64)> = set.columns.iter().map(|c| (c.v, c.midpoint())).collect();
    let scale = rel.iter().fold(1.0_f64, |m, p| m.max(p.1.abs()));
    let tol = 1e-9 * scale;
    for w in rel.windows(2) {
        if w[1].1 < w[0].1 - tol {
            return Err(Error::NonMonotoneContact(format!(
                "ξ drops from {} to {} between v = {} and v = {}",
                w[0].1, w[1].1, w[0].0, w[1].0
            )));
        }
    }
    for c in &set.columns {
        if c.v * c.midpoint() < -tol {
            return Err(Error::NonMonotoneContact(format!(
                "pair (v, ξ) = ({}, {}) is not dissipative",
                c.v,
                c.midpoint()
            )));
        }
        if c.v == 0.0 && !(c.xi_lo <= xi_step + tol && c.xi_hi >= -xi_step - tol) {
            return Err(Error::NonMonotoneContact(format!(
                "contact column at v = 0 is [{}, {}], away from the origin",
                c.xi_lo, c.xi_hi
            )));
        }
    }
    if let Some(p) = rel.iter_mut().find(|p| p.0 == 0.0) {
        p.1 = 0.0;
    } else {
        let k = rel.partition_point(|p| p.0 < 0.0);
        rel.insert(k, (0.0, 0.0));
    }
    Ok(rel)
}

/// `R(v) = ∫₀ᵛ ξ(w) dw` along a monotone relation by the trapezoid rule.
pub fn integrate_relation(rel: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let k0 = rel.iter().position(|p| p.0 == 0.0).expect("relation passes through v = 0");
    let mut out = vec![(0.0, 0.0); rel.len()];
    out[k0] = (0.0, 0.0);
    for k in k0 + 1..rel.len() {
        let (a, b) = (rel[k - 1], rel[k]);
        out[k] = (b.0, out[k - 1].1 + 0.5 * (a.1 + b.1) * (b.0 - a.0));
    }
    for k in (0..k0).rev() {
        let (a, b) = (rel[k], rel[k + 1]);
        out[k] = (a.0, out[k + 1].1 - 0.5 * (a.1 + b.1) * (b.0 - a.0));
    }
    out
}

/// Classifies `m` as a dual sum, contact-equivalent or force-dependent
/// bipotential and recovers the corresponding potential.
pub fn classify_bipotential(m: &SampledBipotential) -> Result<Classification> {
    let set = extract_contact_set(m)?;
    let mixed = max_mixed_difference(m);
    let sep_tol = SEPARABILITY_REL_TOL * m.max_abs();
    let dual_sum = mixed <= sep_tol;
    let xi_step = m
        .xi_grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0_f64, f64::max);
    let relation = contact_relation(&set, xi_step);
    let contact_equivalent = relation.is_ok();

    let (class, potential) = if dual_sum {
        let j0 = SampledBipotential::nearest(&m.xi_grid, 0.0);
        let i0 = SampledBipotential::nearest(&m.v_grid, 0.0);
        let base = m.at(i0, j0);
        let pot = m
            .v_grid
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, m.at(i, j0) - base))
            .collect();
        (BipotentialClass::DualSum, pot)
    } else if let Ok(rel) = relation {
        (BipotentialClass::ContactEquivalent, integrate_relation(&rel))
    } else {
        (BipotentialClass::ForceDependentOnly, Vec::new())
    };
    Ok(Classification {
        class,
        potential,
        dual_sum,
        contact_equivalent,
        max_mixed_difference: mixed,
        separability_tolerance: sep_tol,
        coverage: set.coverage,
    })
}

/// Potential recovered from the contact relation, failing when the relation
/// is not monotone.
pub fn contact_equivalent_potential(m: &SampledBipotential) -> Result<Vec<(f64, f64)>> {
    let set = extract_contact_set(m)?;
    let xi_step = m
        .xi_grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0_f64, f64::max);
    Ok(integrate_relation(&contact_relation(&set, xi_step)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    fn quadratic_sum() -> SampledBipotential {
        SampledBipotential::from_fn(0.0, grid(-2.0, 2.0, 41), grid(-2.0, 2.0, 41), |v, xi| {
            0.5 * v * v + 0.5 * xi * xi
        })
        .unwrap()
    }

    #[test]
    fn identity_contact_line() {
        let m = quadratic_sum();
        m.validate().unwrap();
        let set = extract_contact_set(&m).unwrap();
        assert_eq!(set.pairs.len(), 41);
        assert!(set.pairs.iter().all(|(v, xi)| (v - xi).abs() < 1e-12));
        assert_eq!(set.coverage, 1.0);
        assert!(set.min_power() >= 0.0);
    }

    #[test]
    fn positive_gap_has_no_contact() {
        let m = SampledBipotential::from_fn(0.0, grid(-2.0, 2.0, 21), grid(-2.0, 2.0, 21), |v, xi| {
            0.5 * v * v + 0.5 * xi * xi + 1.0
        })
        .unwrap();
        assert_eq!(extract_contact_set(&m).unwrap_err(), Error::EmptyContactSet);
    }

    #[test]
    fn separable_classification_recovers_potential() {
        let m = quadratic_sum();
        let c = classify_bipotential(&m).unwrap();
        assert_eq!(c.class, BipotentialClass::DualSum);
        assert!(c.contact_equivalent);
        for (v, r) in &c.potential {
            assert!((r - 0.5 * v * v).abs() < 1e-12);
        }
        // Same potential through the contact relation, up to trapezoid error.
        let via_contact = contact_equivalent_potential(&m).unwrap();
        for ((_, a), (_, b)) in c.potential.iter().zip(&via_contact) {
            assert!((a - b).abs() < 0.01);
        }
    }

    #[test]
    fn force_dependent_potential_of_dual_sum() {
        let m = quadratic_sum();
        for &xi in &m.xi_grid.clone() {
            let r = force_dependent_potential(&m, xi).unwrap();
            for (v, val) in r {
                assert!((val - 0.5 * v * v).abs() < 1e-12);
            }
        }
        assert_eq!(force_dependent_potential(&m, 0.123).unwrap_err(), Error::OffGrid(0.123));
    }

    #[test]
    fn decreasing_contact_relation_is_force_dependent() {
        // Contact along ξ = −v, which is not dissipative.
        let m = SampledBipotential::from_fn(0.0, grid(-1.0, 1.0, 21), grid(-1.0, 1.0, 21), |v, xi| {
            0.5 * (v + xi).powi(2) + v * xi
        })
        .unwrap();
        let c = classify_bipotential(&m).unwrap();
        assert_eq!(c.class, BipotentialClass::ForceDependentOnly);
        assert!(matches!(
            contact_equivalent_potential(&m),
            Err(Error::NonMonotoneContact(_))
        ));
    }

    #[test]
    fn recentering_with_same_shift_reproduces_values() {
        let base = |v: f64, xi: f64| 0.5 * v * v + 0.25 * xi * xi + 0.1 * v * xi;
        let shift = 0.37;
        let n = |v: f64, eta: f64| Ok(base(v, eta - shift));
        let m = SampledBipotential::recentered(0.0, grid(-1.0, 1.0, 11), grid(-1.0, 1.0, 11), shift, n).unwrap();
        let direct = SampledBipotential::from_fn(0.0, grid(-1.0, 1.0, 11), grid(-1.0, 1.0, 11), base).unwrap();
        for (a, b) in m.values.iter().zip(&direct.values) {
            assert!((a - b).abs() <= 1e-15);
        }
    }
}
