//! Composite Gauss–Legendre quadrature.

use std::sync::OnceLock;

use crate::linalg::C64;

/// Nodes per cell.
pub const NODES: usize = 32;

/// Nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(NODES))
}

/// `∫_a^b f` with one 32-node rule.
pub fn integrate<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64) -> C64 {
    if a == b {
        return C64::new(0.0, 0.0);
    }
    let (nodes, weights) = rule();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut sum = C64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        sum += f(mid + half * x) * *w;
    }
    sum * half
}

/// `∫` over consecutive cells given by increasing `bounds`.
pub fn integrate_cells<F: FnMut(f64) -> C64>(mut f: F, bounds: &[f64]) -> C64 {
    bounds.windows(2).map(|w| integrate(&mut f, w[0], w[1])).sum()
}

/// Sorted union of a uniform grid on `[0, length]` with extra breakpoints.
pub fn cell_bounds(length: f64, nodes: usize, extra: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = (0..nodes).map(|k| length * k as f64 / (nodes - 1) as f64).collect();
    b.extend(extra.iter().copied().filter(|x| *x > 0.0 && *x < length));
    b.sort_by(|a, b| a.total_cmp(b));
    b.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * length.max(1.0));
    *b.last_mut().unwrap() = length;
    b
}
