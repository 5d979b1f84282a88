//! Algebraic and factorization identities on randomized configurations.

use num_complex::Complex64 as C64;
use qgraph::evans::{c_matrix, evans, x_independence_check, GraphSolutions};
use qgraph::graph::{split_graph, Cut, SplitResult, SplitSpec, StarGraph};
use qgraph::linalg::det;
use qgraph::maps::{minor_identity_check, verify_double_split, verify_single_split};
use qgraph::random::{self, SeededRng};
use rand::Rng;

fn random_lambda(rng: &mut SeededRng) -> C64 {
    C64::new(rng.gen_range(-5.0..80.0), rng.gen_range(-2.0..2.0))
}

fn same_wire(rng: &mut SeededRng, g: &StarGraph) -> SplitSpec {
    let edge = rng.gen_range(0..g.n());
    let l = g.edges[edge].length;
    SplitSpec::same_wire(edge, rng.gen_range(0.55..0.85) * l, rng.gen_range(0.15..0.45) * l)
}

fn two_wires(rng: &mut SeededRng, g: &StarGraph) -> SplitSpec {
    let first = rng.gen_range(0..g.n());
    let second = (first + rng.gen_range(1..g.n())) % g.n();
    let cut = |rng: &mut SeededRng, e: usize| Cut { edge: e, position: rng.gen_range(0.15..0.85) * g.edges[e].length };
    let a = cut(rng, first);
    SplitSpec::two_wires(a, cut(rng, second))
}

/// `(-1)^n det F = det C` for real conditions; complex ones agree in modulus.
#[test]
fn origin_block_determinant() {
    let mut rng = random::rng(101);
    for k in 0..400 {
        let n = 1 + k % 4;
        let complex = k >= 200;
        let g = random::random_graph(&mut rng, n, 15.0);
        let bc = random::random_bc(&mut rng, n, complex);
        let lam = random_lambda(&mut rng);
        let sols = GraphSolutions::new(&g, &bc, lam).unwrap();
        let frame = sols.frame(&vec![0.0; n]).unwrap();
        let f = frame.determinant();
        let c = det(&c_matrix(&frame, &bc));
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let scale = f.norm().max(c.norm()).max(1e-300);
        if complex {
            assert!((f.norm() - c.norm()).abs() <= 1e-9 * scale, "case {k}: {f} vs {c}");
        } else {
            assert!((f * sign - c).norm() <= 1e-9 * scale, "case {k}: {f} vs {c}");
        }
    }
}

#[test]
fn evaluation_point_invariance() {
    let mut rng = random::rng(102);
    for k in 0..60 {
        let n = 1 + k % 4;
        let g = random::random_graph(&mut rng, n, 15.0);
        let bc = random::random_bc(&mut rng, n, k % 2 == 0);
        let lam = random_lambda(&mut rng);
        let mut points = vec![vec![0.0; n]];
        points.extend((0..5).map(|_| random::random_point(&mut rng, &g)));
        let worst = x_independence_check(&g, &bc, lam, &points).unwrap();
        assert!(worst <= 1e-9, "case {k}: {worst:e}");
    }
}

#[test]
fn conjugate_symmetry_for_real_data() {
    let mut rng = random::rng(103);
    for k in 0..40 {
        let n = 1 + k % 3;
        let g = random::random_graph(&mut rng, n, 10.0);
        let bc = random::random_bc(&mut rng, n, false);
        let lam = random_lambda(&mut rng);
        let a = evans(&g, &bc, lam).unwrap().value;
        let b = evans(&g, &bc, lam.conj()).unwrap().value;
        assert!((a.conj() - b).norm() <= 1e-10 * (1.0 + a.norm()), "case {k}");
    }
}

#[test]
fn single_split_factorization() {
    let mut rng = random::rng(104);
    for k in 0..50 {
        let n = 1 + k % 4;
        let g = random::random_graph(&mut rng, n, 15.0);
        let bc = random::random_bc(&mut rng, n, k % 2 == 1);
        let cut = random::random_cut(&mut rng, &g);
        for _ in 0..20 {
            let lam = random_lambda(&mut rng);
            let r = verify_single_split(&g, &bc, cut, lam).unwrap();
            assert!(r <= 1e-7, "case {k} at {lam}: {r:e}");
        }
    }
}

#[test]
fn double_split_factorization() {
    let mut rng = random::rng(105);
    for k in 0..25 {
        let n = 1 + k % 4;
        let g = random::random_graph(&mut rng, n, 15.0);
        let bc = random::random_bc(&mut rng, n, k % 2 == 0);
        let spec = same_wire(&mut rng, &g);
        for _ in 0..5 {
            let lam = random_lambda(&mut rng);
            let r = verify_double_split(&g, &bc, &spec, lam).unwrap();
            assert!(r <= 1e-7, "same wire {k} at {lam}: {r:e}");
        }
    }
    for k in 0..25 {
        let n = 2 + k % 3;
        let g = random::random_graph(&mut rng, n, 15.0);
        let bc = random::random_bc(&mut rng, n, k % 2 == 0);
        let spec = two_wires(&mut rng, &g);
        for _ in 0..5 {
            let lam = random_lambda(&mut rng);
            let r = verify_double_split(&g, &bc, &spec, lam).unwrap();
            assert!(r <= 1e-7, "two wires {k} at {lam}: {r:e}");
        }
    }
}

#[test]
fn minor_identity_on_two_wire_splits() {
    let mut rng = random::rng(106);
    for k in 0..50 {
        let n = 2 + k % 3;
        let g = random::random_graph(&mut rng, n, 15.0);
        let bc = random::random_bc(&mut rng, n, k % 2 == 1);
        let spec = two_wires(&mut rng, &g);
        let SplitResult::TwoWires(split) = split_graph(&g, &bc, &spec).unwrap() else { unreachable!() };
        let lam = random_lambda(&mut rng);
        let r = minor_identity_check(&split, lam).unwrap();
        assert!(r <= 1e-8, "case {k}: {r:e}");
    }
}
