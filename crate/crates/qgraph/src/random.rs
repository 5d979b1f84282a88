//! Seeded random configurations for property runs and verification sweeps.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{BoundaryConditions, Cut, EdgeSpec, PotentialProfile, StarGraph};
use crate::linalg::{c, re, CMat, C64};

pub use rand::SeedableRng;
pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn entry(rng: &mut SeededRng, complex: bool) -> C64 {
    let a = rng.gen_range(-1.0..1.0);
    let b = if complex { rng.gen_range(-1.0..1.0) } else { 0.0 };
    c(a, b)
}

fn random_matrix(rng: &mut SeededRng, n: usize, complex: bool) -> CMat {
    CMat::from_fn(n, n, |_, _| entry(rng, complex))
}

fn random_invertible(rng: &mut SeededRng, n: usize, complex: bool) -> CMat {
    loop {
        let m = random_matrix(rng, n, complex) + CMat::identity(n, n) * re(0.5);
        if crate::linalg::singular_ratio(&m) > 1e-2 {
            return m;
        }
    }
}

fn random_unitary(rng: &mut SeededRng, n: usize, complex: bool) -> CMat {
    random_invertible(rng, n, complex).qr().q()
}

/// Angle in `[0, π)`, landing exactly on 0 or π/2 a third of the time each.
fn angle(rng: &mut SeededRng) -> f64 {
    match rng.gen_range(0..3) {
        0 => 0.0,
        1 => std::f64::consts::FRAC_PI_2,
        _ => rng.gen_range(0.0..std::f64::consts::PI),
    }
}

/// Random self-adjoint separated conditions.
///
/// The origin block is `G Q diag(cos t) Q*`, `G Q diag(sin t) Q*`, which reaches
/// every self-adjoint condition; outer pairs are `c·(cos t, sin t)`.
pub fn random_bc(rng: &mut SeededRng, n: usize, complex: bool) -> BoundaryConditions {
    let q = random_unitary(rng, n, complex);
    let gm = random_invertible(rng, n, complex);
    let angles: Vec<f64> = (0..n).map(|_| angle(rng)).collect();
    let cos = CMat::from_fn(n, n, |i, j| if i == j { re(angles[i].cos()) } else { re(0.0) });
    let sin = CMat::from_fn(n, n, |i, j| if i == j { re(angles[i].sin()) } else { re(0.0) });
    let alpha1 = &gm * &q * cos * q.adjoint();
    let alpha2 = &gm * &q * sin * q.adjoint();
    let mut beta1 = Vec::with_capacity(n);
    let mut beta2 = Vec::with_capacity(n);
    for _ in 0..n {
        let t = angle(rng);
        let scale = loop {
            let s = entry(rng, complex) * 2.0;
            if s.norm() > 0.3 {
                break s;
            }
        };
        beta1.push(scale * t.cos());
        beta2.push(scale * t.sin());
    }
    BoundaryConditions { alpha1, alpha2, beta1, beta2 }
}

/// Piecewise-constant potential with 1–3 pieces and `|V| ≤ vmax`.
pub fn random_potential(rng: &mut SeededRng, length: f64, vmax: f64) -> PotentialProfile {
    let pieces = rng.gen_range(1..=3);
    let mut breaks: Vec<f64> = (1..pieces).map(|_| rng.gen_range(0.1..0.9) * length).collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-3 * length);
    let values: Vec<f64> = (0..=breaks.len()).map(|_| rng.gen_range(-vmax..vmax)).collect();
    PotentialProfile::steps(length, &breaks, &values)
}

pub fn random_graph(rng: &mut SeededRng, n: usize, vmax: f64) -> StarGraph {
    let edges = (0..n)
        .map(|_| {
            let length = rng.gen_range(0.5..2.0);
            EdgeSpec::new(length, random_potential(rng, length, vmax))
        })
        .collect();
    StarGraph { edges }
}

/// Interior cut on a random edge, kept away from both ends.
pub fn random_cut(rng: &mut SeededRng, g: &StarGraph) -> Cut {
    let edge = rng.gen_range(0..g.n());
    Cut { edge, position: rng.gen_range(0.15..0.85) * g.edges[edge].length }
}

/// Random evaluation point `x⃗` inside the graph.
pub fn random_point(rng: &mut SeededRng, g: &StarGraph) -> Vec<f64> {
    g.edges.iter().map(|e| rng.gen_range(0.0..1.0) * e.length).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_bc;

    #[test]
    fn random_conditions_are_valid() {
        let mut r = rng(3);
        for n in 1..=4 {
            for complex in [false, true] {
                for _ in 0..20 {
                    let bc = random_bc(&mut r, n, complex);
                    assert!(validate_bc(&bc).is_valid(), "{:?}", validate_bc(&bc));
                    assert_eq!(bc.is_real(), !complex || bc.is_real());
                }
            }
        }
    }

    #[test]
    fn random_graphs_are_valid() {
        let mut r = rng(5);
        for n in 1..=4 {
            let g = random_graph(&mut r, n, 20.0);
            g.validate().unwrap();
        }
    }
}
