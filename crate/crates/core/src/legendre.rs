//! Discrete Legendre-Fenchel transforms on one-dimensional grids.
//!
//! The conjugate `f*(ξ) = max_i (ξ xᵢ − f(xᵢ))` of samples equals the
//! conjugate of their lower convex hull. We build the hull with a monotone
//! chain and then sweep the sorted dual grid with a pointer that only moves
//! forward, since the maximizing hull vertex is non-decreasing in `ξ`. Both
//! passes are linear in the number of samples.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    PrimalRates,
    DualForces,
}

impl Domain {
    fn flip(self) -> Self {
        match self {
            Domain::PrimalRates => Domain::DualForces,
            Domain::DualForces => Domain::PrimalRates,
        }
    }
}

/// Samples of a convex function on a sorted grid.
#[derive(Debug, Clone)]
pub struct SampledConvexFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub domain: Domain,
    /// Set for conjugate values whose supremum sat at an end of the primal
    /// window with the force beyond the end slope: the true dual is larger.
    pub truncated: Vec<bool>,
}

impl SampledConvexFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, domain: Domain) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidInput("grid and values differ in length".into()));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("grid must be strictly increasing".into()));
        }
        let n = grid.len();
        Ok(Self {
            grid,
            values,
            domain,
            truncated: vec![false; n],
        })
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64, domain: Domain) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values, domain)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Smallest second difference quotient, scaled by the value range;
    /// non-negative up to 1e-10 for convex samples.
    pub fn convexity_defect(&self) -> f64 {
        let scale = self.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let slopes = slopes(&self.grid, &self.values);
        slopes
            .windows(2)
            .map(|s| (s[1] - s[0]) / scale)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_convex(&self) -> bool {
        self.len() < 3 || self.convexity_defect() >= -1e-10
    }

    /// Range of the cell slopes.
    pub fn slope_range(&self) -> Option<(f64, f64)> {
        let s = slopes(&self.grid, &self.values);
        let lo = s.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
        let hi = s.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
        (lo <= hi).then_some((lo, hi))
    }

    /// Piecewise-linear interpolation; errors outside the grid hull.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(interpolate(&self.grid, &self.values, x))
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let (lo, hi) = (self.grid[0], self.grid[self.len() - 1]);
        if x >= lo && x <= hi {
            Ok(())
        } else {
            Err(Error::OutOfDomain { x, lo, hi })
        }
    }
}

fn slopes(x: &[f64], f: &[f64]) -> Vec<f64> {
    x.windows(2)
        .zip(f.windows(2))
        .map(|(x, f)| (f[1] - f[0]) / (x[1] - x[0]))
        .collect()
}

/// Piecewise-linear interpolation of sorted samples, clamped at the ends.
pub fn interpolate(x: &[f64], f: &[f64], at: f64) -> f64 {
    let n = x.len();
    if at <= x[0] {
        return f[0];
    }
    if at >= x[n - 1] {
        return f[n - 1];
    }
    let k = x.partition_point(|&g| g <= at) - 1;
    let t = (at - x[k]) / (x[k + 1] - x[k]);
    f[k] + t * (f[k + 1] - f[k])
}

/// Brute-force conjugate at one force: `(max_i ξ xᵢ − fᵢ, argmax x)`.
pub fn conjugate_at(x: &[f64], f: &[f64], xi: f64) -> (f64, f64) {
    x.iter()
        .zip(f)
        .map(|(&x, &f)| (xi * x - f, x))
        .fold((f64::NEG_INFINITY, 0.0), |best, c| if c.0 > best.0 { c } else { best })
}

/// Indices of the lower convex hull of the finite samples.
fn lower_hull(x: &[f64], f: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(x.len());
    for i in (0..x.len()).filter(|&i| f[i].is_finite()) {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // Drop b when it lies on or above the chord a → i.
            let cross = (x[b] - x[a]) * (f[i] - f[a]) - (f[b] - f[a]) * (x[i] - x[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Discrete conjugate of `f` on a sorted `dual_grid`.
pub fn conjugate(f: &SampledConvexFunction, dual_grid: &[f64]) -> Result<SampledConvexFunction> {
    let hull = lower_hull(&f.grid, &f.values);
    if hull.len() < 2 {
        return Err(Error::DegenerateGrid);
    }
    if dual_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("dual grid must be strictly increasing".into()));
    }
    let (x, v) = (&f.grid, &f.values);
    let slope = |k: usize| (v[hull[k + 1]] - v[hull[k]]) / (x[hull[k + 1]] - x[hull[k]]);
    let last = hull.len() - 1;
    let mut values = Vec::with_capacity(dual_grid.len());
    let mut truncated = Vec::with_capacity(dual_grid.len());
    let mut k = 0;
    for &xi in dual_grid {
        // Advance while the next hull vertex does at least as well.
        while k < last && slope(k) <= xi {
            k += 1;
        }
        let i = hull[k];
        values.push(xi * x[i] - v[i]);
        truncated.push((k == 0 && xi < slope(0)) || (k == last && xi > slope(last - 1)));
    }
    Ok(SampledConvexFunction {
        grid: dual_grid.to_vec(),
        values,
        domain: f.domain.flip(),
        truncated,
    })
}

/// Dual grid spanning the slope range of `f` with the same point count.
pub fn default_dual_grid(f: &SampledConvexFunction) -> Result<Vec<f64>> {
    let (lo, hi) = f.slope_range().ok_or(Error::DegenerateGrid)?;
    let n = f.len();
    if hi - lo <= 0.0 {
        return Ok(vec![lo - 0.5, lo, lo + 0.5]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

/// `max |f** − f|` over the grid, with the dual grid from
/// [`default_dual_grid`]. Zero up to grid effects for convex samples; for
/// non-convex samples it measures the distance to the convex envelope.
pub fn biconjugate_check(f: &SampledConvexFunction) -> Result<f64> {
    let dual_grid = default_dual_grid(f)?;
    let fstar = conjugate(f, &dual_grid)?;
    let fss = conjugate(&fstar, &f.grid)?;
    Ok(fss
        .values
        .iter()
        .zip(&f.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Discrete subdifferential `[ξ⁻, ξ⁺]` at `x`.
///
/// At a grid node the interval spans the difference quotients of the two
/// adjacent cells; inside a cell both ends equal that cell's slope. The
/// missing side at a grid end is unbounded.
pub fn subdifferential(f: &SampledConvexFunction, x: f64) -> Result<(f64, f64)> {
    f.check_domain(x)?;
    if f.len() < 2 {
        return Err(Error::DegenerateGrid);
    }
    let s = slopes(&f.grid, &f.values);
    let n = f.len();
    let tol = 1e-12 * (f.grid[n - 1] - f.grid[0]);
    let k = f.grid.partition_point(|&g| g < x - tol);
    if k < n && (f.grid[k] - x).abs() <= tol {
        let left = if k == 0 { f64::NEG_INFINITY } else { s[k - 1] };
        let right = if k == n - 1 { f64::INFINITY } else { s[k] };
        Ok((left, right))
    } else {
        let c = k - 1;
        Ok((s[c], s[c]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn quadratic_conjugate_value() {
        let f = SampledConvexFunction::from_fn(grid(-5.0, 5.0, 10001), |v| v * v, Domain::PrimalRates).unwrap();
        let fs = conjugate(&f, &[1.0]).unwrap();
        assert!((fs.values[0] - 0.25).abs() < 1e-5);
        assert!(!fs.truncated[0]);
        assert_eq!(fs.domain, Domain::DualForces);
    }

    #[test]
    fn absolute_value_conjugate_and_truncation() {
        let f = SampledConvexFunction::from_fn(grid(-5.0, 5.0, 1001), f64::abs, Domain::PrimalRates).unwrap();
        let fs = conjugate(&f, &[-1.5, 0.5, 1.5]).unwrap();
        assert!(fs.values[1].abs() < 1e-12);
        assert_eq!(fs.truncated, vec![true, false, true]);
    }

    #[test]
    fn biconjugate_of_convex_samples() {
        for f in [|v: f64| 0.5 * v * v, f64::abs] {
            let s = SampledConvexFunction::from_fn(grid(-3.0, 3.0, 2001), f, Domain::PrimalRates).unwrap();
            assert!(biconjugate_check(&s).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn subdifferential_of_quadratic_and_kink() {
        let h = 0.01;
        let q = SampledConvexFunction::from_fn(grid(-2.0, 2.0, 401), |v| 0.5 * v * v, Domain::PrimalRates).unwrap();
        let (lo, hi) = subdifferential(&q, 1.0).unwrap();
        assert!(lo <= 1.0 && hi >= 1.0 && lo >= 1.0 - h && hi <= 1.0 + h);
        let a = SampledConvexFunction::from_fn(grid(-2.0, 2.0, 401), f64::abs, Domain::PrimalRates).unwrap();
        let (lo, hi) = subdifferential(&a, 0.0).unwrap();
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        assert!(matches!(subdifferential(&a, 3.0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn degenerate_grid() {
        let f = SampledConvexFunction::new(vec![0.0, 1.0], vec![0.0, f64::INFINITY], Domain::PrimalRates).unwrap();
        assert_eq!(conjugate(&f, &[0.0]).unwrap_err(), Error::DegenerateGrid);
    }

    #[test]
    fn convexity_defect_flags_cosine() {
        let f = SampledConvexFunction::from_fn(grid(-3.0, 3.0, 301), f64::cos, Domain::PrimalRates).unwrap();
        assert!(!f.is_convex());
    }

    #[test]
    fn biconjugate_of_cosine_is_its_envelope() {
        // on [-3π, 3π] the convex envelope is the constant -1
        let r = 3.0 * std::f64::consts::PI;
        let f = SampledConvexFunction::from_fn(grid(-r, r, 1201), f64::cos, Domain::PrimalRates).unwrap();
        let dev = biconjugate_check(&f).unwrap();
        assert!((dev - 2.0).abs() < 1e-3, "{dev}");
    }
}
