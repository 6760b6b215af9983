//! Sample grids.

/// `n` equally spaced nodes from `lo` to `hi` inclusive.
pub fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "a grid needs at least two nodes");
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
        .collect()
}

/// Symmetric grid on `[-max, max]` with `2n + 1` nodes, geometrically
/// refined towards zero down to `min_step`. Useful where a potential has a
/// kink at the origin.
pub fn log_refined(max: f64, n: usize, min_step: f64) -> Vec<f64> {
    assert!(n >= 2 && max > min_step && min_step > 0.0);
    let ratio = (max / min_step).powf(1.0 / (n - 1) as f64);
    let mut pos: Vec<f64> = (0..n).map(|k| min_step * ratio.powi(k as i32)).collect();
    pos[n - 1] = max;
    let mut g: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
    g.push(0.0);
    g.extend(pos);
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_hits_endpoints() {
        let g = uniform(-2.0, 2.0, 65);
        assert_eq!(g[0], -2.0);
        assert_eq!(g[32], 0.0);
        assert_eq!(g[64], 2.0);
        assert_eq!(g[48], 1.0);
    }

    #[test]
    fn log_refined_is_sorted_and_symmetric() {
        let g = log_refined(3.0, 20, 1e-4);
        assert_eq!(g.len(), 41);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(g[20], 0.0);
        assert!((g[21] - 1e-4).abs() < 1e-16);
        assert_eq!(g[0], -g[40]);
    }
}
