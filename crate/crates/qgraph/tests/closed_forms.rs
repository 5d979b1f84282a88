//! Numerically built Evans functions and maps against hand-derived formulas.

use num_complex::Complex64 as C64;
use qgraph::benchmarks;
use qgraph::counting::{count_eigenvalues, count_zeros, CountOptions};
use qgraph::evans::evans;
use qgraph::graph::{build_preset, compose, split_graph, EdgeSpec, EndCondition, OriginCondition, PotentialProfile, Preset, StarGraph};
use qgraph::maps::{map_m1, map_m2, PoleGuard};
use qgraph::Result;

const S1: f64 = 1.0 / 3.0;
const NU: f64 = -10.0;

fn samples(a: f64, b: f64, count: usize) -> Vec<f64> {
    // irrational offset keeps samples off the zeros of the formulas
    (0..count).map(|k| a + (b - a) * (k as f64 + 0.5 + 0.1234 / (k + 2) as f64) / count as f64).collect()
}

fn close(numeric: C64, exact: f64, tol: f64) -> bool {
    (numeric - exact).norm() <= tol * exact.abs().max(1e-6)
}

#[test]
fn interval_piece_evans() {
    let b = benchmarks::barrier_end(S1, NU);
    let split = split_graph(&b.graph, &b.bc, &b.split).unwrap();
    let piece = &split.first().interval[0];
    for lam in samples(5.0, 60.0, 200) {
        let k = (lam - NU).sqrt();
        let exact = (k * (1.0 - S1)).sin() / k;
        let e = evans(&piece.graph, &piece.bc, C64::new(lam, 0.0)).unwrap().value;
        assert!(close(e, exact, 1e-8), "λ={lam}: {e} vs {exact}");
    }
}

#[test]
fn star_piece_evans() {
    let b = benchmarks::barrier_end(S1, NU);
    let split = split_graph(&b.graph, &b.bc, &b.split).unwrap();
    let piece = &split.first().star[0];
    for lam in samples(5.0, 60.0, 200) {
        let r = lam.sqrt();
        let exact = -(r * (1.0 + S1)).sin() / r;
        let e = evans(&piece.graph, &piece.bc, C64::new(lam, 0.0)).unwrap().value;
        assert!(close(e, exact, 1e-8), "λ={lam}: {e} vs {exact}");
    }
}

// The printed map formulas carry the opposite sign to the maps as defined
// (minus the log-derivative on the outer side, the plain derivative on the star side).
#[test]
fn outer_map_is_negated_formula() {
    let b = benchmarks::barrier_end(S1, NU);
    let split = split_graph(&b.graph, &b.bc, &b.split).unwrap();
    for lam in samples(5.0, 60.0, 200) {
        let k = (lam - NU).sqrt();
        let printed = -k / (k * (1.0 - S1)).tan();
        let m = map_m1(split.first(), C64::new(lam, 0.0), PoleGuard::none()).unwrap();
        assert!(close(m.value, -printed, 1e-8), "λ={lam}: {} vs {}", m.value, -printed);
        assert!(close(m.quotient, -printed, 1e-8));
    }
}

#[test]
fn star_map_is_negated_formula() {
    let b = benchmarks::barrier_end(S1, NU);
    let split = split_graph(&b.graph, &b.bc, &b.split).unwrap();
    for lam in samples(5.0, 60.0, 200) {
        let r = lam.sqrt();
        let printed = -r / (r * (1.0 + S1)).tan();
        let m = map_m2(split.first(), C64::new(lam, 0.0), PoleGuard::none()).unwrap();
        assert!(close(m.value, -printed, 1e-8), "λ={lam}: {} vs {}", m.value, -printed);
        assert!(close(m.quotient, -printed, 1e-8));
    }
}

fn barrier_end_full(lam: f64) -> f64 {
    let (r, k) = (lam.sqrt(), (lam - NU).sqrt());
    r * (r * (1.0 + S1)).cos() * (k * (S1 - 1.0)).sin() - k * (k * (S1 - 1.0)).cos() * (r * (1.0 + S1)).sin()
}

/// Secular function of the interior barrier on `(s2, s1)` with Neumann ends.
fn barrier_interior_full(lam: f64) -> f64 {
    let (s1, s2) = (0.75, 0.25);
    let (r, k) = (lam.sqrt(), (lam - NU).sqrt());
    let (free, d) = (2.0 - s1 + s2, s1 - s2);
    (2.0 * lam - NU) * (r * free).cos() * (k * d).sin() - NU * (r * (s1 + s2)).cos() * (k * d).sin()
        + 2.0 * r * k * (k * d).cos() * (r * free).sin()
}

fn two_wire_full(x: f64) -> f64 {
    let (r, k) = (x.sqrt(), (10.0 + x).sqrt());
    r * k * k.cos() * r.sin() + (-5.0 + (5.0 + x) * r.cos()) * k.sin()
}

/// `E · factor(λ)` equals `exact` pointwise, and both have the same zeros.
fn check_rescaled(bench: benchmarks::Benchmark, exact: fn(f64) -> f64, factor: fn(f64) -> f64, interval: (f64, f64)) {
    let opts = CountOptions::default();
    let numeric = count_eigenvalues(&bench.graph, &bench.bc, interval, &opts).unwrap();
    let closed = count_zeros(|x: f64| -> Result<f64> { Ok(exact(x)) }, interval, &opts).unwrap();
    assert_eq!(numeric.count, closed.count, "{}", bench.name);
    for (a, b) in numeric.zeros.iter().zip(&closed.zeros) {
        assert!((a.location - b.location).abs() < 1e-6, "{}: {} vs {}", bench.name, a.location, b.location);
    }
    for x in samples(interval.0, interval.1, 200) {
        let e = evans(&bench.graph, &bench.bc, C64::new(x, 0.0)).unwrap().value * factor(x);
        assert!(close(e, exact(x), 1e-8), "{} at {x}: {e} vs {}", bench.name, exact(x));
    }
}

#[test]
fn barrier_end_full_problem() {
    check_rescaled(
        benchmarks::barrier_end(S1, NU),
        barrier_end_full,
        |x| x.sqrt() * (x - NU).sqrt(),
        (5.0, 60.0),
    );
}

#[test]
fn barrier_interior_full_problem() {
    check_rescaled(
        benchmarks::barrier_interior(0.75, 0.25, NU),
        barrier_interior_full,
        |x| 2.0 * (x - NU).sqrt(),
        (5.0, 60.0),
    );
}

#[test]
fn two_wire_full_problem() {
    check_rescaled(benchmarks::two_wire(0.5, 0.5, NU), two_wire_full, |x| -x * (x - NU).sqrt(), (3.0, 60.0));
}

/// Sign changes on a dense uniform grid, refined by bisection.
fn oracle_zeros(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Vec<f64> {
    let steps = 200_000;
    let xs: Vec<f64> = (0..=steps).map(|k| a + (b - a) * k as f64 / steps as f64).collect();
    let mut out = Vec::new();
    for w in xs.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        if f(lo).signum() == f(hi).signum() {
            continue;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == f(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out
}

fn assert_same_zeros(g: &StarGraph, bc: &qgraph::graph::BoundaryConditions, secular: impl Fn(f64) -> f64, what: &str) {
    let interval = (1.0, 80.0);
    let numeric = count_eigenvalues(g, bc, interval, &CountOptions::default()).unwrap();
    let oracle = oracle_zeros(secular, interval.0, interval.1);
    assert_eq!(numeric.count as usize, oracle.len(), "{what}");
    for (z, o) in numeric.zeros.iter().zip(&oracle) {
        assert!((z.location - o).abs() < 1e-6, "{what}: {} vs {o}", z.location);
    }
}

#[test]
fn free_star_matches_oracle() {
    let (a, b) = (0.7, 1.1);
    let g = StarGraph::new(vec![EdgeSpec::free(a), EdgeSpec::free(b)]).unwrap();
    let bc = build_preset(&Preset::Kirchhoff, 2);
    // Kirchhoff joins the two edges into one Dirichlet interval
    assert_same_zeros(&g, &bc, |x| (x.sqrt() * (a + b)).sin(), "free Kirchhoff star");
}

#[test]
fn barrier_interval_matches_oracle() {
    let (l, nu) = (1.3, 7.0);
    let g = StarGraph::new(vec![EdgeSpec::new(l, PotentialProfile::constant(l, nu))]).unwrap();
    let bc = build_preset(&Preset::Dirichlet, 1);
    let secular = |x: f64| {
        let q = x - nu;
        if q >= 0.0 {
            (q.sqrt() * l).sin() / q.sqrt()
        } else {
            ((-q).sqrt() * l).sinh() / (-q).sqrt()
        }
    };
    assert_same_zeros(&g, &bc, secular, "barrier interval");
}

#[test]
fn barrier_star_matches_oracle() {
    let (a, b, nu) = (0.9, 1.2, 12.0);
    let g = StarGraph::new(vec![EdgeSpec::free(a), EdgeSpec::new(b, PotentialProfile::constant(b, nu))]).unwrap();
    let bc = compose(&OriginCondition::Kirchhoff, &EndCondition::Neumann, 2);
    // u1 = cos(k(a - x)), u2 = C cos(q(b - x)); continuity and zero flux at the origin
    let secular = |x: f64| {
        let k = x.sqrt();
        let (cq, qsq) = if x >= nu {
            let q = (x - nu).sqrt();
            ((q * b).cos(), q * (q * b).sin())
        } else {
            let p = (nu - x).sqrt();
            ((p * b).cosh(), -p * (p * b).sinh())
        };
        k * (k * a).sin() * cq + qsq * (k * a).cos()
    };
    assert_same_zeros(&g, &bc, secular, "barrier star");
}
