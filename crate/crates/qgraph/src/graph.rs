//! Star graphs, separated self-adjoint boundary conditions, traces and splitting.

use crate::error::{Error, Result};
use crate::linalg::{max_abs, re, singular_ratio, CMat, CVec, C64};

/// Threshold on σ_min/σ_max for the rank test of `[a1 a2]`.
pub const RANK_TOL: f64 = 1e-10;
/// Relative tolerance of the self-adjointness test.
pub const SELF_ADJOINT_TOL: f64 = 1e-10;

const EDGE_TOL: f64 = 1e-12;

/// One constant piece of a potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

/// Potential on a single edge, parameterized over `[0, length]`.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialProfile {
    /// Constant pieces partitioning the edge.
    PiecewiseConstant(Vec<Segment>),
    /// Samples `(x, V(x))`, linearly interpolated.
    Sampled(Vec<(f64, f64)>),
}

impl PotentialProfile {
    pub fn zero(length: f64) -> Self {
        Self::constant(length, 0.0)
    }

    pub fn constant(length: f64, value: f64) -> Self {
        PotentialProfile::PiecewiseConstant(vec![Segment { start: 0.0, end: length, value }])
    }

    /// Steps with interior breakpoints `breaks` and one value per piece.
    pub fn steps(length: f64, breaks: &[f64], values: &[f64]) -> Self {
        assert_eq!(values.len(), breaks.len() + 1, "one value per piece");
        let mut edges = vec![0.0];
        edges.extend_from_slice(breaks);
        edges.push(length);
        let segs = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Segment { start: edges[i], end: edges[i + 1], value: v })
            .collect();
        PotentialProfile::PiecewiseConstant(segs)
    }

    /// Samples `f` on a uniform grid of `points` nodes.
    pub fn sample(length: f64, points: usize, f: impl Fn(f64) -> f64) -> Self {
        assert!(points >= 2);
        let h = length / (points - 1) as f64;
        let pts = (0..points)
            .map(|k| {
                let x = if k + 1 == points { length } else { k as f64 * h };
                (x, f(x))
            })
            .collect();
        PotentialProfile::Sampled(pts)
    }

    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self, PotentialProfile::PiecewiseConstant(_))
    }

    /// Right end of the covered domain.
    pub fn domain_end(&self) -> f64 {
        match self {
            PotentialProfile::PiecewiseConstant(s) => s.last().map_or(0.0, |s| s.end),
            PotentialProfile::Sampled(p) => p.last().map_or(0.0, |p| p.0),
        }
    }

    /// Potential at `x`. At a jump the piece to the right wins.
    pub fn value_at(&self, x: f64) -> f64 {
        match self {
            PotentialProfile::PiecewiseConstant(segs) => {
                let idx = segs.partition_point(|s| s.start <= x);
                segs[idx.saturating_sub(1)].value
            }
            PotentialProfile::Sampled(pts) => {
                let idx = pts.partition_point(|p| p.0 <= x).clamp(1, pts.len() - 1);
                let (x0, v0) = pts[idx - 1];
                let (x1, v1) = pts[idx];
                v0 + (v1 - v0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Potential at `x` seen from inside `[a, b]`, which must be one of the
    /// intervals between consecutive knots.
    pub fn value_within(&self, x: f64, a: f64, b: f64) -> f64 {
        match self {
            PotentialProfile::PiecewiseConstant(_) => self.value_at(0.5 * (a + b)),
            PotentialProfile::Sampled(_) => self.value_at(x.clamp(a, b)),
        }
    }

    /// All breakpoints including both ends, increasing.
    pub fn knots(&self) -> Vec<f64> {
        match self {
            PotentialProfile::PiecewiseConstant(segs) => {
                let mut k: Vec<f64> = segs.iter().map(|s| s.start).collect();
                k.push(self.domain_end());
                k
            }
            PotentialProfile::Sampled(pts) => pts.iter().map(|p| p.0).collect(),
        }
    }

    /// The profile on `[a, b]`, shifted to start at 0.
    pub fn restrict(&self, a: f64, b: f64) -> Self {
        match self {
            PotentialProfile::PiecewiseConstant(segs) => {
                let out = segs
                    .iter()
                    .filter(|s| s.end > a && s.start < b)
                    .map(|s| Segment {
                        start: s.start.max(a) - a,
                        end: s.end.min(b) - a,
                        value: s.value,
                    })
                    .filter(|s| s.end > s.start)
                    .collect::<Vec<_>>();
                let mut out = out;
                if let Some(first) = out.first_mut() {
                    first.start = 0.0;
                }
                if let Some(last) = out.last_mut() {
                    last.end = b - a;
                }
                PotentialProfile::PiecewiseConstant(out)
            }
            PotentialProfile::Sampled(pts) => {
                let mut out = vec![(0.0, self.value_at(a))];
                out.extend(pts.iter().filter(|p| p.0 > a && p.0 < b).map(|p| (p.0 - a, p.1)));
                out.push((b - a, self.value_at(b)));
                PotentialProfile::Sampled(out)
            }
        }
    }

    fn validate(&self, edge: usize, length: f64) -> Result<()> {
        let bad = |reason: &str| Error::InvalidEdge { edge, reason: reason.to_string() };
        let tol = EDGE_TOL * length.max(1.0);
        match self {
            PotentialProfile::PiecewiseConstant(segs) => {
                if segs.is_empty() {
                    return Err(bad("empty potential"));
                }
                if segs[0].start.abs() > tol {
                    return Err(bad("potential does not start at 0"));
                }
                for w in segs.windows(2) {
                    if (w[0].end - w[1].start).abs() > tol {
                        return Err(bad("potential pieces overlap or leave gaps"));
                    }
                }
                for s in segs {
                    if !(s.end > s.start) || !s.value.is_finite() {
                        return Err(bad("empty or non-finite potential piece"));
                    }
                }
            }
            PotentialProfile::Sampled(pts) => {
                if pts.len() < 2 || pts[0].0.abs() > tol {
                    return Err(bad("sampled potential must start at 0 with at least two nodes"));
                }
                if pts.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(bad("sampled grid must be strictly increasing"));
                }
                if pts.iter().any(|p| !p.1.is_finite()) {
                    return Err(bad("non-finite sample"));
                }
            }
        }
        if (self.domain_end() - length).abs() > tol {
            return Err(bad("potential does not cover the edge"));
        }
        Ok(())
    }
}

/// An edge `[0, length]` with its potential.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub length: f64,
    pub potential: PotentialProfile,
}

impl EdgeSpec {
    pub fn new(length: f64, potential: PotentialProfile) -> Self {
        EdgeSpec { length, potential }
    }

    /// Edge with zero potential.
    pub fn free(length: f64) -> Self {
        EdgeSpec { length, potential: PotentialProfile::zero(length) }
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::InvalidEdge { edge: index, reason: "length must be positive".into() });
        }
        self.potential.validate(index, self.length)
    }

    /// The piece `[a, b]` re-parameterized to `[0, b - a]`.
    pub fn restrict(&self, a: f64, b: f64) -> EdgeSpec {
        EdgeSpec { length: b - a, potential: self.potential.restrict(a, b) }
    }
}

/// Star graph: `n` edges sharing the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct StarGraph {
    pub edges: Vec<EdgeSpec>,
}

impl StarGraph {
    pub fn new(edges: Vec<EdgeSpec>) -> Result<Self> {
        let g = StarGraph { edges };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (i, e) in self.edges.iter().enumerate() {
            e.validate(i)?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.edges.len()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.length).collect()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }
}

/// Separated boundary conditions `a1 u(0) + a2 u'(0) = 0` at the origin and
/// `g_i u_i(l_i) + h_i u_i'(l_i) = 0` at the outer ends.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    pub alpha1: CMat,
    pub alpha2: CMat,
    pub beta1: Vec<C64>,
    pub beta2: Vec<C64>,
}

/// Outcome of [`validate_bc`]; lists every failed condition.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidityReport {
    pub failures: Vec<Error>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        match self.failures.into_iter().next() {
            None => Ok(()),
            Some(e) => Err(e),
        }
    }
}

/// Checks the rank and self-adjointness conditions on both vertex blocks.
pub fn validate_bc(bc: &BoundaryConditions) -> ValidityReport {
    let mut failures = Vec::new();
    let n = bc.alpha1.nrows();
    let shapes_ok = bc.alpha1.shape() == (n, n)
        && bc.alpha2.shape() == (n, n)
        && bc.beta1.len() == n
        && bc.beta2.len() == n;
    if !shapes_ok {
        failures.push(Error::DimensionMismatch {
            expected: n,
            found: if bc.alpha2.nrows() != n { bc.alpha2.nrows() } else { bc.beta1.len().max(bc.beta2.len()) },
        });
        return ValidityReport { failures };
    }
    if n == 0 {
        failures.push(Error::EmptyGraph);
        return ValidityReport { failures };
    }

    let mut wide = CMat::zeros(n, 2 * n);
    wide.view_mut((0, 0), (n, n)).copy_from(&bc.alpha1);
    wide.view_mut((0, n), (n, n)).copy_from(&bc.alpha2);
    let ratio = singular_ratio(&wide);
    if !(ratio > RANK_TOL) {
        failures.push(Error::RankDeficient { block: "origin", ratio });
    }
    let defect = max_abs(&(&bc.alpha1 * bc.alpha2.adjoint() - &bc.alpha2 * bc.alpha1.adjoint()));
    let scale = max_abs(&bc.alpha1).max(max_abs(&bc.alpha2));
    if defect > SELF_ADJOINT_TOL * (1.0 + scale * scale) {
        failures.push(Error::NotSelfAdjoint { block: "origin", defect });
    }

    let mut worst = 0.0f64;
    for i in 0..n {
        let (g, h) = (bc.beta1[i], bc.beta2[i]);
        if g.norm() == 0.0 && h.norm() == 0.0 {
            failures.push(Error::DegenerateDiagonalPair { edge: i });
            continue;
        }
        let d = (g * h.conj() - h * g.conj()).norm();
        let s = g.norm().max(h.norm());
        worst = worst.max(d / (1.0 + s * s));
    }
    if worst > SELF_ADJOINT_TOL {
        failures.push(Error::NotSelfAdjoint { block: "outer", defect: worst });
    }
    ValidityReport { failures }
}

impl BoundaryConditions {
    /// Builds and validates.
    pub fn new(alpha1: CMat, alpha2: CMat, beta1: Vec<C64>, beta2: Vec<C64>) -> Result<Self> {
        let bc = BoundaryConditions { alpha1, alpha2, beta1, beta2 };
        validate_bc(&bc).into_result()?;
        Ok(bc)
    }

    pub fn n(&self) -> usize {
        self.beta1.len()
    }

    /// Entrywise complex conjugate (again self-adjoint).
    pub fn conj(&self) -> Self {
        BoundaryConditions {
            alpha1: self.alpha1.map(|z| z.conj()),
            alpha2: self.alpha2.map(|z| z.conj()),
            beta1: self.beta1.iter().map(|z| z.conj()).collect(),
            beta2: self.beta2.iter().map(|z| z.conj()).collect(),
        }
    }

    /// True when every coefficient is real.
    pub fn is_real(&self) -> bool {
        self.alpha1.iter().chain(self.alpha2.iter()).chain(&self.beta1).chain(&self.beta2).all(|z| z.im == 0.0)
    }

    /// Block matrix `diag(beta1, alpha1)`.
    pub fn delta1(&self) -> CMat {
        crate::linalg::block_diag(&crate::linalg::diag(&self.beta1), &self.alpha1)
    }

    /// Block matrix `diag(beta2, alpha2)`.
    pub fn delta2(&self) -> CMat {
        crate::linalg::block_diag(&crate::linalg::diag(&self.beta2), &self.alpha2)
    }
}

/// Boundary values and derivatives of a function on the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub values_at_ell: CVec,
    pub derivs_at_ell: CVec,
    pub values_at_0: CVec,
    pub derivs_at_0: CVec,
}

impl BoundaryData {
    pub fn zeros(n: usize) -> Self {
        BoundaryData {
            values_at_ell: CVec::zeros(n),
            derivs_at_ell: CVec::zeros(n),
            values_at_0: CVec::zeros(n),
            derivs_at_0: CVec::zeros(n),
        }
    }

    pub fn n(&self) -> usize {
        self.values_at_0.len()
    }

    fn check(&self) -> Result<usize> {
        let n = self.values_at_0.len();
        for len in [self.values_at_ell.len(), self.derivs_at_ell.len(), self.derivs_at_0.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        Ok(n)
    }

    pub fn scale_add(&self, a: C64, other: &BoundaryData, b: C64) -> BoundaryData {
        BoundaryData {
            values_at_ell: &self.values_at_ell * a + &other.values_at_ell * b,
            derivs_at_ell: &self.derivs_at_ell * a + &other.derivs_at_ell * b,
            values_at_0: &self.values_at_0 * a + &other.values_at_0 * b,
            derivs_at_0: &self.derivs_at_0 * a + &other.derivs_at_0 * b,
        }
    }
}

fn stack(top: CVec, bottom: CVec) -> CVec {
    let n = top.len();
    let mut v = CVec::zeros(n + bottom.len());
    v.rows_mut(0, n).copy_from(&top);
    v.rows_mut(n, bottom.len()).copy_from(&bottom);
    v
}

/// `[β1 u(ℓ) + β2 u'(ℓ); α1 u(0) + α2 u'(0)]`.
pub fn gamma_trace(bc: &BoundaryConditions, bd: &BoundaryData) -> Result<CVec> {
    let n = bd.check()?;
    if n != bc.n() {
        return Err(Error::DimensionMismatch { expected: bc.n(), found: n });
    }
    let top = CVec::from_fn(n, |i, _| bc.beta1[i] * bd.values_at_ell[i] + bc.beta2[i] * bd.derivs_at_ell[i]);
    let bottom = &bc.alpha1 * &bd.values_at_0 + &bc.alpha2 * &bd.derivs_at_0;
    Ok(stack(top, bottom))
}

/// `[u(ℓ); u(0)]`.
pub fn dirichlet_trace(bd: &BoundaryData) -> CVec {
    stack(bd.values_at_ell.clone(), bd.values_at_0.clone())
}

/// `[u'(ℓ); -u'(0)]`, outward normal derivative at every endpoint.
pub fn neumann_trace(bd: &BoundaryData) -> CVec {
    stack(bd.derivs_at_ell.clone(), -bd.derivs_at_0.clone())
}

/// Condition at the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum OriginCondition {
    Dirichlet,
    Neumann,
    /// Continuity plus zero total flux.
    Kirchhoff,
    /// `u_i'(0) + θ_i u_i(0) = 0` on each edge separately.
    Robin(Vec<f64>),
}

/// Condition at the outer ends.
#[derive(Debug, Clone, PartialEq)]
pub enum EndCondition {
    Dirichlet,
    Neumann,
    /// `u_i'(ℓ_i) + θ_i u_i(ℓ_i) = 0`.
    Robin(Vec<f64>),
}

/// Standard condition sets.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Dirichlet,
    Neumann,
    /// Kirchhoff at the origin, Dirichlet at the outer ends.
    Kirchhoff,
    /// Robin with the same θ_i at both ends of edge i.
    Robin(Vec<f64>),
}

fn robin_theta(theta: &[f64], n: usize) -> Vec<f64> {
    match theta.len() {
        0 => vec![0.0; n],
        1 => vec![theta[0]; n],
        _ => {
            assert_eq!(theta.len(), n, "one Robin parameter per edge");
            theta.to_vec()
        }
    }
}

/// Combines an origin condition with an outer-end condition.
pub fn compose(origin: &OriginCondition, ends: &EndCondition, n: usize) -> BoundaryConditions {
    assert!(n >= 1);
    let zero = CMat::zeros(n, n);
    let id = CMat::identity(n, n);
    let (alpha1, alpha2) = match origin {
        OriginCondition::Dirichlet => (id.clone(), zero.clone()),
        OriginCondition::Neumann => (zero.clone(), id.clone()),
        OriginCondition::Kirchhoff => {
            let mut a1 = zero.clone();
            let mut a2 = zero.clone();
            for i in 0..n - 1 {
                a1[(i, i)] = re(1.0);
                a1[(i, i + 1)] = re(-1.0);
            }
            for j in 0..n {
                a2[(n - 1, j)] = re(1.0);
            }
            (a1, a2)
        }
        OriginCondition::Robin(theta) => {
            let th = robin_theta(theta, n);
            (CMat::from_fn(n, n, |i, j| if i == j { re(th[i]) } else { re(0.0) }), id.clone())
        }
    };
    let (beta1, beta2) = match ends {
        EndCondition::Dirichlet => (vec![re(1.0); n], vec![re(0.0); n]),
        EndCondition::Neumann => (vec![re(0.0); n], vec![re(1.0); n]),
        EndCondition::Robin(theta) => (robin_theta(theta, n).into_iter().map(re).collect(), vec![re(1.0); n]),
    };
    BoundaryConditions { alpha1, alpha2, beta1, beta2 }
}

pub fn build_preset(kind: &Preset, n: usize) -> BoundaryConditions {
    match kind {
        Preset::Dirichlet => compose(&OriginCondition::Dirichlet, &EndCondition::Dirichlet, n),
        Preset::Neumann => compose(&OriginCondition::Neumann, &EndCondition::Neumann, n),
        Preset::Kirchhoff => compose(&OriginCondition::Kirchhoff, &EndCondition::Dirichlet, n),
        Preset::Robin(theta) => compose(&OriginCondition::Robin(theta.clone()), &EndCondition::Robin(theta.clone()), n),
    }
}

/// Location of a cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    pub edge: usize,
    pub position: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    SingleCut,
    /// Two cuts `s2 < s1` on one edge; `cuts[0]` is `s1`.
    DoubleSameWire,
    /// Cuts on two distinct edges.
    DoubleTwoWires,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub cuts: Vec<Cut>,
    pub mode: SplitMode,
}

impl SplitSpec {
    pub fn single(edge: usize, position: f64) -> Self {
        SplitSpec { cuts: vec![Cut { edge, position }], mode: SplitMode::SingleCut }
    }

    pub fn same_wire(edge: usize, s1: f64, s2: f64) -> Self {
        SplitSpec {
            cuts: vec![Cut { edge, position: s1 }, Cut { edge, position: s2 }],
            mode: SplitMode::DoubleSameWire,
        }
    }

    pub fn two_wires(first: Cut, second: Cut) -> Self {
        SplitSpec { cuts: vec![first, second], mode: SplitMode::DoubleTwoWires }
    }

    pub fn validate(&self, g: &StarGraph) -> Result<()> {
        for cut in &self.cuts {
            let edge = g.edges.get(cut.edge).ok_or(Error::InvalidEdge {
                edge: cut.edge,
                reason: "no such edge".into(),
            })?;
            if !(cut.position > 0.0 && cut.position < edge.length) {
                return Err(Error::CutOnVertex { edge: cut.edge, position: cut.position });
            }
        }
        let count = self.cuts.len();
        match self.mode {
            SplitMode::SingleCut if count != 1 => {
                Err(Error::CutsOutOfOrder(format!("single cut needs one cut, got {count}")))
            }
            SplitMode::DoubleSameWire | SplitMode::DoubleTwoWires if count != 2 => {
                Err(Error::CutsOutOfOrder(format!("double split needs two cuts, got {count}")))
            }
            SplitMode::DoubleSameWire => {
                let (a, b) = (self.cuts[0], self.cuts[1]);
                if a.edge != b.edge {
                    Err(Error::CutsOutOfOrder("same-wire cuts must share an edge".into()))
                } else if !(b.position < a.position) {
                    Err(Error::CutsOutOfOrder("same-wire cuts need s2 < s1".into()))
                } else {
                    Ok(())
                }
            }
            SplitMode::DoubleTwoWires => {
                if self.cuts[0].edge == self.cuts[1].edge {
                    Err(Error::CutsOutOfOrder("two-wire cuts must be on distinct edges".into()))
                } else {
                    Ok(())
                }
            }
            SplitMode::SingleCut => Ok(()),
        }
    }
}

/// Condition imposed at a cut: Dirichlet `(g, h) = (1, 0)` or Neumann `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutCondition {
    Dirichlet,
    Neumann,
}

impl CutCondition {
    pub const BOTH: [CutCondition; 2] = [CutCondition::Dirichlet, CutCondition::Neumann];

    pub fn coefficients(self) -> (C64, C64) {
        match self {
            CutCondition::Dirichlet => (re(1.0), re(0.0)),
            CutCondition::Neumann => (re(0.0), re(1.0)),
        }
    }

    pub fn letter(self) -> char {
        match self {
            CutCondition::Dirichlet => 'D',
            CutCondition::Neumann => 'N',
        }
    }
}

/// Index into a four-variant array; the first letter belongs to the first cut.
pub fn variant_index(first: CutCondition, second: CutCondition) -> usize {
    2 * (first == CutCondition::Neumann) as usize + (second == CutCondition::Neumann) as usize
}

/// A subgraph together with its derived conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub graph: StarGraph,
    pub bc: BoundaryConditions,
}

/// Result of cutting once at `cut`.
///
/// `interval[k]` is the detached interval `[s, ℓ_j]` re-parameterized to start
/// at the cut, `star[k]` the star with edge `j` shortened to `s`; `k = 0` puts a
/// Dirichlet condition at the cut and `k = 1` a Neumann one.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleSplit {
    pub cut: Cut,
    pub interval: [Piece; 2],
    pub star: [Piece; 2],
}

/// Two cuts `s2 < s1` on the same edge.
#[derive(Debug, Clone, PartialEq)]
pub struct SameWireSplit {
    /// Split at `s1`.
    pub first: SingleSplit,
    pub inner_cut: Cut,
    /// `[s2, s1]` with conditions indexed by [`variant_index`]`(at s1, at s2)`.
    pub middle: [Piece; 4],
    /// Star with edge `j` shortened to `s2`; Dirichlet then Neumann at `s2`.
    pub inner_star: [Piece; 2],
}

/// Cuts on two distinct edges.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWireSplit {
    pub first: SingleSplit,
    pub second_cut: Cut,
    /// Interval `[s2, ℓ_{j2}]`; Dirichlet then Neumann at `s2`.
    pub second_interval: [Piece; 2],
    /// Star with both edges shortened, indexed by [`variant_index`]`(at s1, at s2)`.
    pub inner_star: [Piece; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitResult {
    Single(SingleSplit),
    SameWire(SameWireSplit),
    TwoWires(TwoWireSplit),
}

impl SplitResult {
    pub fn first(&self) -> &SingleSplit {
        match self {
            SplitResult::Single(s) => s,
            SplitResult::SameWire(s) => &s.first,
            SplitResult::TwoWires(s) => &s.first,
        }
    }

    /// The pieces whose spectra enter the counting identity, in order, with
    /// Dirichlet conditions at every cut.
    pub fn counted_pieces(&self) -> Vec<(&'static str, &Piece)> {
        match self {
            SplitResult::Single(s) => vec![("omega1", &s.interval[0]), ("omega2", &s.star[0])],
            SplitResult::SameWire(s) => vec![
                ("omega1", &s.first.interval[0]),
                ("omega1_tilde", &s.middle[0]),
                ("omega2_tilde", &s.inner_star[0]),
            ],
            SplitResult::TwoWires(s) => vec![
                ("omega1", &s.first.interval[0]),
                ("omega1_tilde", &s.second_interval[0]),
                ("omega2_tilde", &s.inner_star[0]),
            ],
        }
    }
}

fn interval_piece(edge: EdgeSpec, at_start: CutCondition, end: (C64, C64)) -> Piece {
    let (a1, a2) = at_start.coefficients();
    Piece {
        graph: StarGraph { edges: vec![edge] },
        bc: BoundaryConditions {
            alpha1: CMat::from_element(1, 1, a1),
            alpha2: CMat::from_element(1, 1, a2),
            beta1: vec![end.0],
            beta2: vec![end.1],
        },
    }
}

fn shorten(g: &StarGraph, bc: &BoundaryConditions, cuts: &[(Cut, CutCondition)]) -> Piece {
    let mut graph = g.clone();
    let mut bc = bc.clone();
    for (cut, cond) in cuts {
        graph.edges[cut.edge] = g.edges[cut.edge].restrict(0.0, cut.position);
        let (gc, hc) = cond.coefficients();
        bc.beta1[cut.edge] = gc;
        bc.beta2[cut.edge] = hc;
    }
    Piece { graph, bc }
}

fn outer(bc: &BoundaryConditions, edge: usize) -> (C64, C64) {
    (bc.beta1[edge], bc.beta2[edge])
}

fn single(g: &StarGraph, bc: &BoundaryConditions, cut: Cut) -> SingleSplit {
    let e = &g.edges[cut.edge];
    let tail = e.restrict(cut.position, e.length);
    let interval = CutCondition::BOTH.map(|k| interval_piece(tail.clone(), k, outer(bc, cut.edge)));
    let star = CutCondition::BOTH.map(|k| shorten(g, bc, &[(cut, k)]));
    SingleSplit { cut, interval, star }
}

/// Builds every subgraph problem needed by the factorization theorems.
pub fn split_graph(g: &StarGraph, bc: &BoundaryConditions, spec: &SplitSpec) -> Result<SplitResult> {
    g.validate()?;
    validate_bc(bc).into_result()?;
    if bc.n() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), found: bc.n() });
    }
    spec.validate(g)?;
    let first = single(g, bc, spec.cuts[0]);
    match spec.mode {
        SplitMode::SingleCut => Ok(SplitResult::Single(first)),
        SplitMode::DoubleSameWire => {
            let (c1, c2) = (spec.cuts[0], spec.cuts[1]);
            let mid = g.edges[c1.edge].restrict(c2.position, c1.position);
            let mut middle = Vec::with_capacity(4);
            for at_s1 in CutCondition::BOTH {
                for at_s2 in CutCondition::BOTH {
                    middle.push(interval_piece(mid.clone(), at_s2, at_s1.coefficients()));
                }
            }
            let inner_star = CutCondition::BOTH.map(|k| shorten(g, bc, &[(c2, k)]));
            Ok(SplitResult::SameWire(SameWireSplit {
                first,
                inner_cut: c2,
                middle: middle.try_into().expect("four variants"),
                inner_star,
            }))
        }
        SplitMode::DoubleTwoWires => {
            let (c1, c2) = (spec.cuts[0], spec.cuts[1]);
            let e2 = &g.edges[c2.edge];
            let tail = e2.restrict(c2.position, e2.length);
            let second_interval = CutCondition::BOTH.map(|k| interval_piece(tail.clone(), k, outer(bc, c2.edge)));
            let mut inner = Vec::with_capacity(4);
            for at_s1 in CutCondition::BOTH {
                for at_s2 in CutCondition::BOTH {
                    inner.push(shorten(g, bc, &[(c1, at_s1), (c2, at_s2)]));
                }
            }
            Ok(SplitResult::TwoWires(TwoWireSplit {
                first,
                second_cut: c2,
                second_interval,
                inner_star: inner.try_into().expect("four variants"),
            }))
        }
    }
}

/// The two-edge example geometry: unit edges, Kirchhoff origin.
pub fn unit_two_star(v1: PotentialProfile, v2: PotentialProfile) -> StarGraph {
    StarGraph { edges: vec![EdgeSpec::new(1.0, v1), EdgeSpec::new(1.0, v2)] }
}
