//! One- and two-sided Dirichlet-to-Neumann maps and the factorization checks.
//!
//! Every one-sided map is computed twice: from its defining boundary value
//! problem and as a quotient of Evans functions. With the Neumann cut row
//! `(g, h) = (0, 1)` the frame column at the cut is `-θ`, so the quotients read
//! `M₁ = -E(Γ₁')/E(Γ₁)` and `M₂ = E(Γ₂')/E(Γ₂)`.

use crate::error::{Error, Result};
use crate::evans::{evans, GraphSolutions};
use crate::graph::{
    split_graph, variant_index, BoundaryConditions, Cut, CutCondition, Piece, SameWireSplit, SingleSplit,
    SplitResult, SplitSpec, StarGraph, TwoWireSplit,
};
use crate::linalg::{self, re, CMat, C64};
use crate::propagator::EdgeSolver;

/// Decides when a denominator Evans value is treated as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleGuard {
    pub threshold: f64,
}

impl PoleGuard {
    /// Only exact zeros and non-finite values are poles.
    pub fn none() -> Self {
        PoleGuard { threshold: 0.0 }
    }

    /// `1e-6` times a local scale, typically the median `|E|` over a sweep.
    pub fn scaled(local_scale: f64) -> Self {
        PoleGuard { threshold: 1e-6 * local_scale }
    }

    fn check(&self, lambda: C64, denominator: C64) -> Result<()> {
        if !(denominator.norm() > self.threshold) || !denominator.is_finite() {
            Err(Error::PoleAtLambda { lambda: lambda.re, denominator: denominator.norm() })
        } else {
            Ok(())
        }
    }
}

impl Default for PoleGuard {
    fn default() -> Self {
        PoleGuard::none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapSide {
    /// Map of the detached interval.
    Outer,
    /// Map of the star side.
    Star,
}

/// One-sided map value from both evaluation routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSidedMap {
    pub side: MapSide,
    /// Definition route.
    pub value: C64,
    /// Evans-quotient route.
    pub quotient: C64,
    pub lambda: C64,
    pub denominator_evans: C64,
}

impl OneSidedMap {
    /// Relative disagreement of the two routes.
    pub fn discrepancy(&self) -> f64 {
        (self.value - self.quotient).norm() / self.value.norm().max(self.quotient.norm()).max(1.0)
    }
}

/// Map of an interval whose cut sits at coordinate 0: `-z'(cut)/z(cut)`.
pub fn outer_map(dirichlet: &Piece, neumann: &Piece, lambda: C64, guard: PoleGuard) -> Result<OneSidedMap> {
    let e_d = evans(&dirichlet.graph, &dirichlet.bc, lambda)?.value;
    guard.check(lambda, e_d)?;
    let e_n = evans(&neumann.graph, &neumann.bc, lambda)?.value;
    let edge = &dirichlet.graph.edges[0];
    let solver = EdgeSolver::new(edge, lambda)?;
    let (g, h) = (dirichlet.bc.beta1[0], dirichlet.bc.beta2[0]);
    let (z, dz) = solver.solve(edge.length, -h.conj(), g.conj(), 0.0);
    if z.norm() == 0.0 {
        return Err(Error::PoleAtLambda { lambda: lambda.re, denominator: 0.0 });
    }
    Ok(OneSidedMap {
        side: MapSide::Outer,
        value: -dz / z,
        quotient: -e_n / e_d,
        lambda,
        denominator_evans: e_d,
    })
}

/// Map of a star cut at the outer end of `edge`: `u'(cut)` for `u(cut) = 1`.
pub fn star_map(
    dirichlet: &Piece,
    neumann: &Piece,
    edge: usize,
    lambda: C64,
    guard: PoleGuard,
) -> Result<OneSidedMap> {
    let e_d = evans(&dirichlet.graph, &dirichlet.bc, lambda)?.value;
    guard.check(lambda, e_d)?;
    let e_n = evans(&neumann.graph, &neumann.bc, lambda)?.value;
    let value = star_cut_derivatives(dirichlet, &[edge], lambda)?[(0, 0)];
    Ok(OneSidedMap { side: MapSide::Star, value, quotient: e_n / e_d, lambda, denominator_evans: e_d })
}

/// Matrix of `u_a'(cut_b)` where `u_a` solves the star problem with unit
/// Dirichlet data at `cut_a` and zero data elsewhere.
fn star_cut_derivatives(piece: &Piece, edges: &[usize], lambda: C64) -> Result<CMat> {
    let sols = GraphSolutions::new(&piece.graph, &piece.bc, lambda)?;
    let n = sols.n();
    let trace = sols.trace_matrix(&piece.bc);
    let lu = trace.lu();
    let mut out = CMat::zeros(edges.len(), edges.len());
    for (a, &ea) in edges.iter().enumerate() {
        let coeffs = lu.solve(&linalg::unit(2 * n, ea)).ok_or(Error::OnSpectrum { lambda: lambda.re })?;
        for (b, &eb) in edges.iter().enumerate() {
            out[(b, a)] = sols.combine(&coeffs, eb, sols.lengths[eb]).1;
        }
    }
    Ok(out)
}

/// `M₁` for a single split.
pub fn map_m1(split: &SingleSplit, lambda: C64, guard: PoleGuard) -> Result<OneSidedMap> {
    outer_map(&split.interval[0], &split.interval[1], lambda, guard)
}

/// `M₂` for a single split.
pub fn map_m2(split: &SingleSplit, lambda: C64, guard: PoleGuard) -> Result<OneSidedMap> {
    star_map(&split.star[0], &split.star[1], split.cut.edge, lambda, guard)
}

pub fn two_sided_sum(m1: &OneSidedMap, m2: &OneSidedMap) -> Result<C64> {
    if m1.lambda != m2.lambda {
        return Err(Error::MismatchedEvaluationPoint { a: m1.lambda.re, b: m2.lambda.re });
    }
    let v = m1.value + m2.value;
    if !v.is_finite() {
        return Err(Error::PoleAtLambda { lambda: m1.lambda.re, denominator: 0.0 });
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    SameWire,
    TwoWires,
}

/// Pair of 2×2 maps whose sum replaces `M₁ + M₂` for two cuts.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedMap2x2 {
    pub m1: CMat,
    pub m2: CMat,
    pub geometry: Geometry,
    pub lambda: C64,
}

impl TwoSidedMap2x2 {
    pub fn sum(&self) -> CMat {
        &self.m1 + &self.m2
    }

    pub fn det_sum(&self) -> C64 {
        let s = self.sum();
        s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)]
    }
}

fn diag2(a: C64, b: C64) -> CMat {
    CMat::from_row_slice(2, 2, &[a, re(0.0), re(0.0), b])
}

/// `(M₁ + M₂, M̃₁ + M̃₂)` and the 2×2 maps of a same-wire split.
pub struct SameWireMaps {
    pub outer: OneSidedMap,
    pub star: OneSidedMap,
    pub inner_outer: OneSidedMap,
    pub inner_star: OneSidedMap,
    pub pair: TwoSidedMap2x2,
}

pub fn same_wire_maps(split: &SameWireSplit, lambda: C64, guard: PoleGuard) -> Result<SameWireMaps> {
    let j = split.first.cut.edge;
    let dd = variant_index(CutCondition::Dirichlet, CutCondition::Dirichlet);
    let dn = variant_index(CutCondition::Dirichlet, CutCondition::Neumann);
    let outer = map_m1(&split.first, lambda, guard)?;
    let star = map_m2(&split.first, lambda, guard)?;
    let inner_outer = outer_map(&split.middle[dd], &split.middle[dn], lambda, guard)?;
    let inner_star = star_map(&split.inner_star[0], &split.inner_star[1], j, lambda, guard)?;

    // u(s2) = 0, u(s1) = 1 and w(s2) = 1, w(s1) = 0 on the middle interval
    let mid = &split.middle[dd].graph.edges[0];
    let solver = EdgeSolver::new(mid, lambda)?;
    let d = mid.length;
    let (p, dp) = solver.solve(0.0, re(0.0), re(1.0), d);
    let (q, dq) = solver.solve(d, re(0.0), re(1.0), 0.0);
    if p.norm() == 0.0 || q.norm() == 0.0 {
        return Err(Error::PoleAtLambda { lambda: lambda.re, denominator: 0.0 });
    }
    let (du_s1, du_s2) = (dp / p, re(1.0) / p);
    let (dw_s1, dw_s2) = (re(1.0) / q, dq / q);
    let m1 = CMat::from_row_slice(2, 2, &[du_s1, dw_s1, -du_s2, -dw_s2]);
    let m2 = diag2(outer.value, inner_star.value);
    Ok(SameWireMaps {
        outer,
        star,
        inner_outer,
        inner_star,
        pair: TwoSidedMap2x2 { m1, m2, geometry: Geometry::SameWire, lambda },
    })
}

pub fn two_sided_2x2_same_wire(split: &SameWireSplit, lambda: C64, guard: PoleGuard) -> Result<TwoSidedMap2x2> {
    Ok(same_wire_maps(split, lambda, guard)?.pair)
}

/// The one-sided maps and 2×2 maps of a two-wire split.
pub struct TwoWireMaps {
    pub outer: OneSidedMap,
    pub star: OneSidedMap,
    pub inner_outer: OneSidedMap,
    pub inner_star: OneSidedMap,
    pub pair: TwoSidedMap2x2,
}

pub fn two_wire_maps(split: &TwoWireSplit, lambda: C64, guard: PoleGuard) -> Result<TwoWireMaps> {
    let (j1, j2) = (split.first.cut.edge, split.second_cut.edge);
    let dd = variant_index(CutCondition::Dirichlet, CutCondition::Dirichlet);
    let dn = variant_index(CutCondition::Dirichlet, CutCondition::Neumann);
    let outer = map_m1(&split.first, lambda, guard)?;
    let star = map_m2(&split.first, lambda, guard)?;
    let inner_outer = outer_map(&split.second_interval[0], &split.second_interval[1], lambda, guard)?;
    let inner_star = star_map(&split.inner_star[dd], &split.inner_star[dn], j2, lambda, guard)?;
    let m1 = diag2(outer.value, inner_outer.value);
    let m2 = star_cut_derivatives(&split.inner_star[dd], &[j1, j2], lambda)?;
    Ok(TwoWireMaps {
        outer,
        star,
        inner_outer,
        inner_star,
        pair: TwoSidedMap2x2 { m1, m2, geometry: Geometry::TwoWires, lambda },
    })
}

pub fn two_sided_2x2_two_wires(split: &TwoWireSplit, lambda: C64, guard: PoleGuard) -> Result<TwoSidedMap2x2> {
    Ok(two_wire_maps(split, lambda, guard)?.pair)
}

fn relative(full: C64, product: C64) -> f64 {
    (full - product).norm() / (1.0 + full.norm())
}

/// `|E − E₁ E₂ (M₁ + M₂)| / (1 + |E|)`.
pub fn verify_single_split(g: &StarGraph, bc: &BoundaryConditions, cut: Cut, lambda: C64) -> Result<f64> {
    let split = split_graph(g, bc, &SplitSpec::single(cut.edge, cut.position))?;
    let s = split.first();
    let guard = PoleGuard::none();
    let m1 = map_m1(s, lambda, guard)?;
    let m2 = map_m2(s, lambda, guard)?;
    let full = evans(g, bc, lambda)?.value;
    let product = m1.denominator_evans * m2.denominator_evans * two_sided_sum(&m1, &m2)?;
    Ok(relative(full, product))
}

/// `|E − E₁ Ẽ₁ Ẽ₂ det(𝓜₁ + 𝓜₂)| / (1 + |E|)`.
pub fn verify_double_split(g: &StarGraph, bc: &BoundaryConditions, spec: &SplitSpec, lambda: C64) -> Result<f64> {
    let full = evans(g, bc, lambda)?.value;
    let guard = PoleGuard::none();
    let product = match split_graph(g, bc, spec)? {
        SplitResult::Single(_) => return Err(Error::CutsOutOfOrder("double split needs two cuts".into())),
        SplitResult::SameWire(s) => {
            let m = same_wire_maps(&s, lambda, guard)?;
            let e_mid = evans(&s.middle[0].graph, &s.middle[0].bc, lambda)?.value;
            m.outer.denominator_evans * e_mid * m.inner_star.denominator_evans * m.pair.det_sum()
        }
        SplitResult::TwoWires(s) => {
            let m = two_wire_maps(&s, lambda, guard)?;
            m.outer.denominator_evans * m.inner_outer.denominator_evans * m.inner_star.denominator_evans
                * m.pair.det_sum()
        }
    };
    Ok(relative(full, product))
}

/// Terms of the complementary-minor identity for a two-wire split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinorIdentity {
    /// `E^{DD} E^{NN} − E^{ND} E^{DN}`.
    pub evans_combination: C64,
    /// Product of the two complementary minors.
    pub minor_product: C64,
}

impl MinorIdentity {
    pub fn residual(&self) -> f64 {
        (self.evans_combination - self.minor_product).norm()
            / (1.0 + self.evans_combination.norm().max(self.minor_product.norm()))
    }
}

pub fn minor_identity(split: &TwoWireSplit, lambda: C64) -> Result<MinorIdentity> {
    use CutCondition::{Dirichlet as D, Neumann as N};
    let e = |a, b| -> Result<C64> {
        let p = &split.inner_star[variant_index(a, b)];
        Ok(evans(&p.graph, &p.bc, lambda)?.value)
    };
    let combo = e(D, D)? * e(N, N)? - e(N, D)? * e(D, N)?;

    let piece = &split.inner_star[0];
    let n = piece.graph.n();
    let (j1, j2) = (split.first.cut.edge, split.second_cut.edge);
    let f = GraphSolutions::new(&piece.graph, &piece.bc, lambda)?.frame(&vec![0.0; n])?.matrix();
    let cols: Vec<usize> = (0..2 * n).filter(|&k| k != n + j1 && k != n + j2).collect();
    let others: Vec<usize> = (0..n).filter(|&k| k != j1 && k != j2).flat_map(|k| [k, n + k]).collect();
    let minor = |pair: [usize; 2]| {
        let rows: Vec<usize> = pair.iter().copied().chain(others.iter().copied()).collect();
        let m = CMat::from_fn(rows.len(), cols.len(), |r, c| f[(rows[r], cols[c])]);
        linalg::det(&m)
    };
    let product = minor([j1, n + j1]) * minor([j2, n + j2]);
    Ok(MinorIdentity { evans_combination: combo, minor_product: product })
}

/// Relative residual of the complementary-minor identity.
pub fn minor_identity_check(split: &TwoWireSplit, lambda: C64) -> Result<f64> {
    Ok(minor_identity(split, lambda)?.residual())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_preset, Preset};
    use crate::linalg::c;
    use crate::random::{random_bc, random_cut, random_graph, rng};
    use rand::Rng;

    #[test]
    fn single_split_on_random_graphs() {
        let mut r = rng(11);
        for trial in 0..30 {
            let n = 1 + trial % 4;
            let g = random_graph(&mut r, n, 10.0);
            let bc = random_bc(&mut r, n, trial % 2 == 1);
            let cut = random_cut(&mut r, &g);
            let lambda = c(r.gen_range(-20.0..40.0), r.gen_range(-1.0..1.0));
            let res = verify_single_split(&g, &bc, cut, lambda).unwrap();
            assert!(res < 1e-8, "trial {trial}: {res}");
        }
    }

    #[test]
    fn map_routes_agree() {
        let mut r = rng(12);
        for trial in 0..20 {
            let n = 1 + trial % 3;
            let g = random_graph(&mut r, n, 10.0);
            let bc = random_bc(&mut r, n, true);
            let cut = random_cut(&mut r, &g);
            let lambda = c(r.gen_range(-20.0..40.0), 0.3);
            let s = split_graph(&g, &bc, &SplitSpec::single(cut.edge, cut.position)).unwrap();
            let s = s.first();
            let m1 = map_m1(s, lambda, PoleGuard::none()).unwrap();
            let m2 = map_m2(s, lambda, PoleGuard::none()).unwrap();
            assert!(m1.discrepancy() < 1e-8, "{m1:?}");
            assert!(m2.discrepancy() < 1e-8, "{m2:?}");
        }
    }

    #[test]
    fn double_splits_on_random_graphs() {
        let mut r = rng(13);
        for trial in 0..20 {
            let n = 2 + trial % 3;
            let g = random_graph(&mut r, n, 10.0);
            let bc = random_bc(&mut r, n, trial % 2 == 0);
            let lambda = c(r.gen_range(-20.0..40.0), r.gen_range(-1.0..1.0));
            let j = r.gen_range(0..n);
            let len = g.edges[j].length;
            let (a, b) = (r.gen_range(0.1..0.45) * len, r.gen_range(0.55..0.9) * len);
            let same = SplitSpec::same_wire(j, b, a);
            let res = verify_double_split(&g, &bc, &same, lambda).unwrap();
            assert!(res < 1e-8, "same wire trial {trial}: {res}");
            let k = (j + 1) % n;
            let two = SplitSpec::two_wires(
                Cut { edge: j, position: a },
                Cut { edge: k, position: 0.5 * g.edges[k].length },
            );
            let res = verify_double_split(&g, &bc, &two, lambda).unwrap();
            assert!(res < 1e-8, "two wires trial {trial}: {res}");
            if let SplitResult::TwoWires(s) = split_graph(&g, &bc, &two).unwrap() {
                let m = minor_identity_check(&s, lambda).unwrap();
                assert!(m < 1e-8, "minor identity trial {trial}: {m}");
            }
        }
    }

    #[test]
    fn pole_guard_rejects_dirichlet_eigenvalue() {
        // interval [0.5, 1] with Dirichlet at both ends has eigenvalue (2π)²
        let g = StarGraph::new(vec![crate::graph::EdgeSpec::free(1.0)]).unwrap();
        let bc = build_preset(&Preset::Dirichlet, 1);
        let s = split_graph(&g, &bc, &SplitSpec::single(0, 0.5)).unwrap();
        let lambda = re(4.0 * std::f64::consts::PI.powi(2));
        let err = map_m1(s.first(), lambda, PoleGuard { threshold: 1e-8 }).unwrap_err();
        assert!(matches!(err, Error::PoleAtLambda { .. }));
    }

    #[test]
    fn mismatched_points_rejected() {
        let g = StarGraph::new(vec![crate::graph::EdgeSpec::free(1.0)]).unwrap();
        let bc = build_preset(&Preset::Dirichlet, 1);
        let s = split_graph(&g, &bc, &SplitSpec::single(0, 0.3)).unwrap();
        let a = map_m1(s.first(), re(1.0), PoleGuard::none()).unwrap();
        let b = map_m2(s.first(), re(2.0), PoleGuard::none()).unwrap();
        assert!(matches!(two_sided_sum(&a, &b), Err(Error::MismatchedEvaluationPoint { .. })));
    }
}
