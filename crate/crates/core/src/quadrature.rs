//! Composite Gauss-Legendre quadrature with panel doubling.

use std::sync::OnceLock;

/// Nodes per panel of the composite rule.
pub const NODES_PER_PANEL: usize = 16;

const REL_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 1 << 14;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn reference_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(NODES_PER_PANEL))
}

/// A fixed composite rule: nodes and weights over a union of intervals.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    /// `panels` equal panels on each piece `[breaks[k], breaks[k+1]]`.
    pub fn new(breaks: &[f64], panels: usize) -> Self {
        let (xs, ws) = reference_rule();
        let mut nodes = Vec::with_capacity((breaks.len() - 1) * panels * xs.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for piece in breaks.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * h;
                for (x, w) in xs.iter().zip(ws) {
                    nodes.push(lo + 0.5 * h * (x + 1.0));
                    weights.push(0.5 * h * w);
                }
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Integrates `f` over `[a, b]`, doubling panels until the relative change
/// drops below 1e-10.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    integrate_pieces(f, &[a, b])
}

/// Like [`integrate`], with the interval split at the given breakpoints so
/// kinks of the integrand fall on panel edges.
pub fn integrate_pieces(f: impl Fn(f64) -> f64, breaks: &[f64]) -> f64 {
    let mut panels = 1;
    let mut prev = CompositeRule::new(breaks, panels).integrate(&f);
    loop {
        panels *= 2;
        let next = CompositeRule::new(breaks, panels).integrate(&f);
        if (next - prev).abs() <= REL_TOL * next.abs().max(1e-300) || panels >= MAX_PANELS {
            return next;
        }
        prev = next;
    }
}

/// Sorted breakpoints of `[0, 1]` including the interior kinks.
pub fn unit_breaks(kinks: &[f64]) -> Vec<f64> {
    let mut breaks = vec![0.0];
    breaks.extend(kinks.iter().copied().filter(|&k| k > 0.0 && k < 1.0));
    breaks.push(1.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

/// Golden-section refinement of a maximizer of `f` inside `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Maximum of `f` on `[a, b]` by dense sampling plus local refinement.
pub fn dense_max(f: impl Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> (f64, f64) {
    let h = (b - a) / samples as f64;
    let mut best = (a, f(a));
    for k in 1..=samples {
        let x = a + k as f64 * h;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let lo = (best.0 - h).max(a);
    let hi = (best.0 + h).min(b);
    let refined = golden_max(&f, lo, hi);
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [1, 2, 5, 16, 32] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n = {n}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        let (x, w) = gauss_legendre(16);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_integral_of_smooth_periodic() {
        let v = integrate(|y| (2.0 * std::f64::consts::PI * y).cos().powi(2), 0.0, 1.0);
        assert!((v - 0.5).abs() < 1e-13);
    }

    #[test]
    fn kink_split_integral() {
        let v = integrate_pieces(|y| (2.0 * y - 1.0_f64).abs().powi(3), &unit_breaks(&[0.5]));
        assert!((v - 0.25).abs() < 1e-14);
    }

    #[test]
    fn dense_max_finds_interior_peak() {
        let (x, v) = dense_max(|y| -(y - 0.3137).powi(2) + 2.0, 0.0, 1.0, 64);
        assert!((x - 0.3137).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
